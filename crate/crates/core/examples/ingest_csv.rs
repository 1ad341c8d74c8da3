//! Build warehouse documents from a CSV file and a column mapping.
//!
//! ```text
//! cargo run -p xdw --example ingest_csv [data.csv mapping.json]
//! ```

use std::path::{Path, PathBuf};

use xdw::documents::serialize_warehouse;
use xdw::ingest::{ingest, IngestionMapping};
use xdw::validate_warehouse;

fn main() -> xdw::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let mut args = std::env::args().skip(1).map(PathBuf::from);
    let csv_path = args.next().unwrap_or_else(|| data.join("utterances.csv"));
    let mapping_path = args.next().unwrap_or_else(|| data.join("utterances-mapping.json"));

    let csv = std::fs::read_to_string(&csv_path).expect("csv file");
    let mapping: IngestionMapping =
        serde_json::from_str(&std::fs::read_to_string(&mapping_path).expect("mapping file")).expect("mapping json");

    let w = ingest(&csv, &mapping)?;
    println!("{} findings", validate_warehouse(&w).findings.len());
    for (name, text) in serialize_warehouse(&w) {
        println!("==> {} <==\n{}", name, text);
    }
    Ok(())
}
