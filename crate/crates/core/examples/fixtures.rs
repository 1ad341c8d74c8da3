//! Generate the seeded demo warehouses into a directory.
//!
//! ```text
//! cargo run -p xdw --example fixtures [out-dir] [seed]
//! ```

use std::path::PathBuf;

use xdw::documents::write_warehouse_dir;
use xdw::fixtures::{generate_fixture, FIXTURES};

fn main() -> xdw::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("xdw-fixtures"));
    let seed: u64 = args.next().map(|a| a.parse().expect("seed")).unwrap_or(1);
    for name in FIXTURES {
        let w = generate_fixture(name, seed)?;
        let dir = out.join(name);
        write_warehouse_dir(&w, &dir)?;
        println!("{:<16} {:>5} facts -> {}", name, w.facts.rows.len(), dir.display());
    }
    Ok(())
}
