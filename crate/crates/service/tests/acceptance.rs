//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

mod support;

use std::time::{Duration, Instant};

use xdw_oracles::checks::{self, Outcome};

fn atomicity(trials: u64) -> Outcome {
    let start = Instant::now();
    let (passed, detail) = match support::fault_trials(trials) {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Outcome {
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

fn main() {
    let secs = Duration::from_secs;
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("model round-trip", Box::new(move || checks::model_round_trip().within(secs(1)))),
        ("evolution golden", Box::new(move || checks::evolution_golden().within(secs(1)))),
        ("aggregation oracle", Box::new(move || checks::aggregation_oracle(100).within(secs(60)))),
        ("conservation under evolution", Box::new(|| checks::conservation(150))),
        ("AHC oracle", Box::new(|| checks::ahc_oracle(200))),
        ("MCA identities", Box::new(|| checks::mca_identities(200))),
        ("arrangement homogeneity", Box::new(|| checks::arrangement_property(1))),
        ("Apriori oracle", Box::new(move || checks::apriori_oracle(100).within(secs(60)))),
        ("service atomicity", Box::new(|| atomicity(100))),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let o = check();
        if !o.passed {
            failed += 1;
        }
        println!(
            "{} {}: {} ({:.2?})",
            if o.passed { "PASS" } else { "FAIL" },
            name,
            o.detail,
            o.elapsed
        );
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
