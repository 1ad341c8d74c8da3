//! The nine cube operators on the small token-frequency warehouse.
//!
//! ```text
//! cargo run -p xdw --example olap_operators
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use xdw::cube::{
    build_cube, dice, drill_down, pull, push, roll_up, rotate, slice, switch, Aggregate, AxisSpec, PullSource,
};
use xdw::documents::read_warehouse_dir;
use xdw::evolution::{apply_ruleset, parse_rules};

fn main() -> xdw::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let base = read_warehouse_dir(&data.join("clapi"))?;
    let rules = parse_rules(&std::fs::read_to_string(data.join("location-groups.rules")).unwrap())?;
    let (w, _) = apply_ruleset(&base, &rules)?;

    let location = AxisSpec::new("time-d", "location-in-transcription");
    let speaker = AxisSpec::new("speaker-d", "speaker");

    let cube = build_cube(&w, &[location.clone(), speaker], "frequency", Aggregate::Sum)?;
    println!("cube\n{}", cube.to_table());

    let avg = build_cube(&w, &[location], "frequency", Aggregate::Avg)?;
    println!("AVG by location\n{}", avg.to_table());

    let up = roll_up(&cube, &w, "time-d", "group-of-location-in-transcription")?;
    println!("roll-up\n{}", up.to_table());

    let spk1 = slice(&up, "speaker-d", "spk1")?;
    println!("slice speaker=spk1\n{}", spk1.to_table());

    let down = drill_down(&spk1, &w, "time-d", "location-in-transcription")?;
    println!("drill-down keeps the slice\n{}", down.to_table());

    let ends = BTreeMap::from([("time-d".to_string(), vec!["begin".to_string(), "end".to_string()])]);
    println!("dice\n{}", dice(&cube, &ends)?.to_table());

    println!("rotate\n{}", rotate(&cube, &[1, 0])?.to_table());

    let order = ["end", "middle", "begin"].map(String::from);
    let switched = switch(&down, "time-d", &order)?;
    println!("switch\n{}", switched.to_table());

    let pushed = push(&switched, "time-d")?;
    println!("push\n{}", pushed.to_table());
    assert_eq!(pull(&pushed, PullSource::Pushed)?, switched);

    let band = |v: f64| if v < 5.0 { "low".to_string() } else { "high".to_string() };
    let labeled = pull(
        &switched,
        PullSource::Labeling {
            dim_id: "band".into(),
            replace: None,
            label: &band,
        },
    )?;
    println!("pull by label\n{}", labeled.to_table());

    match roll_up(&cube, &w, "time-d", "location-in-transcription") {
        Err(e) => println!("error {}: {}", e.code(), e),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
