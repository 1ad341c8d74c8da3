//! Load a warehouse directory, validate it, and write it back out.
//!
//! ```text
//! cargo run -p xdw --example model_roundtrip
//! ```

use std::path::Path;

use xdw::documents::{parse_model, read_warehouse_dir, serialize_model, write_warehouse_dir};
use xdw::validate_warehouse;

fn main() -> xdw::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/clapi");
    let warehouse = read_warehouse_dir(&dir)?;

    for dim in &warehouse.model.dimensions {
        let levels: Vec<&str> = dim.levels.iter().map(|l| l.id.as_str()).collect();
        println!("{:<16} {:<20} {}", dim.id, dim.path, levels.join(" < "));
    }
    println!("{} facts", warehouse.facts.rows.len());

    let report = validate_warehouse(&warehouse);
    println!("{} finding(s)", report.findings.len());

    // The source schema has an unterminated prologue; the writer emits `?>`.
    let text = serialize_model(&warehouse.model);
    assert_eq!(parse_model(&text)?, warehouse.model);
    print!("{}", text);

    let out = std::env::temp_dir().join("xdw-model-roundtrip");
    write_warehouse_dir(&warehouse, &out)?;
    assert_eq!(read_warehouse_dir(&out)?, warehouse);
    println!("rewritten to {}", out.display());
    Ok(())
}
