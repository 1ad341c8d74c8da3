//! Mine inter-dimensional rules {token, location} -> {sex}.
//!
//! ```text
//! cargo run -p xdw --example association_rules [minsup] [minconf]
//! ```

use xdw::cube::AxisSpec;
use xdw::fixtures::generate_fixture;
use xdw::mining::rules::{export_rules, mine_rules, MetaRule, RuleFormat, SupportAggregate};

fn main() -> xdw::Result<()> {
    let mut args = std::env::args().skip(1);
    let minsup: f64 = args.next().map(|a| a.parse().expect("minsup")).unwrap_or(0.05);
    let minconf: f64 = args.next().map(|a| a.parse().expect("minconf")).unwrap_or(0.6);

    let w = generate_fixture("rules-demo", 1)?;
    for aggregate in [SupportAggregate::Count, SupportAggregate::Sum] {
        let meta = MetaRule {
            context: vec![],
            antecedent: vec![
                AxisSpec::new("transcription-d", "token"),
                AxisSpec::new("time-d", "location-in-transcription"),
            ],
            consequent: vec![AxisSpec::new("speaker-d", "sex")],
            measure: "frequency".into(),
            aggregate,
        };
        let mining = mine_rules(&w, &meta, minsup, minconf)?;
        println!("{:?}: {} frequent itemsets, {} rules", aggregate, mining.frequent.len(), mining.rules.len());
        print!("{}", export_rules(&mining.rules, RuleFormat::Table));
        println!();
    }
    Ok(())
}
