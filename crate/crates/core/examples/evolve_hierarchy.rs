//! Add a hierarchy level from "if-then" rules: dry run, apply, roll up.
//!
//! ```text
//! cargo run -p xdw --example evolve_hierarchy
//! ```

use std::path::Path;

use xdw::cube::{build_cube, roll_up, Aggregate, AxisSpec};
use xdw::documents::{read_warehouse_dir, serialize_dimension, serialize_model};
use xdw::evolution::{apply_ruleset, parse_rules, validate_ruleset};

fn main() -> xdw::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let w = read_warehouse_dir(&data.join("clapi"))?;
    let text = std::fs::read_to_string(data.join("location-groups.rules")).unwrap();
    let rules = parse_rules(&text)?;
    print!("{}", rules);

    let partial = parse_rules(&text.lines().take(2).collect::<Vec<_>>().join("\n"))?;
    for f in validate_ruleset(&partial, &w).findings {
        println!("dry run without rule 2: {}", f.message);
    }

    let report = validate_ruleset(&rules, &w);
    for g in &report.groups {
        println!("{} <- {{{}}}", g.instance, g.members.join(", "));
    }

    let (evolved, summary) = apply_ruleset(&w, &rules)?;
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    print!("{}", serialize_model(&evolved.model));
    print!("{}", serialize_dimension(evolved.dimension_data("time-d").unwrap()));

    let cube = build_cube(
        &evolved,
        &[AxisSpec::new("time-d", "location-in-transcription")],
        "frequency",
        Aggregate::Sum,
    )?;
    let up = roll_up(&cube, &evolved, "time-d", &summary.new_level)?;
    print!("{}", up.to_table());

    if let Err(e) = apply_ruleset(&evolved, &rules) {
        println!("second apply: {}", e);
    }
    Ok(())
}
