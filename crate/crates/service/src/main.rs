use clap::Parser;
use xdw_service::cli::{run, Cli};

fn main() {
    match run(Cli::parse()) {
        Ok(out) => print!("{}", out),
        Err(e) => {
            eprintln!("{}", serde_json::to_string_pretty(&e.envelope()).unwrap());
            std::process::exit(1);
        }
    }
}
