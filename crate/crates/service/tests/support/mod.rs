#![allow(dead_code)]

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::Rng;
use xdw::documents::{read_warehouse_dir, serialize_warehouse, write_warehouse_dir};
use xdw::evolution::{apply_ruleset, parse_rules};
use xdw::Warehouse;
use xdw_oracles::gen::{random_grouping_rules, random_warehouse, rng, Shape};
use xdw_oracles::golden;
use xdw_service::api::RulesRequest;
use xdw_service::storage::{Fault, Step, STAGING_DIR};
use xdw_service::Service;

pub fn golden_dir(dir: &Path) {
    write_warehouse_dir(&golden::clapi_warehouse(), dir).unwrap();
}

pub fn rules_request(text: &str, dry_run: bool) -> RulesRequest {
    RulesRequest {
        text: Some(text.to_string()),
        rules: None,
        dry_run,
    }
}

/// A warehouse and a rule set that applies to it: the example warehouse for
/// every fourth seed, a random one otherwise.
fn scenario(seed: u64) -> (Warehouse, String, Warehouse) {
    if seed % 4 != 0 {
        let w = random_warehouse(seed, Shape::default());
        let (text, _) = random_grouping_rules(&w, seed);
        if let Ok((evolved, _)) = apply_ruleset(&w, &parse_rules(&text).unwrap()) {
            return (w, text, evolved);
        }
    }
    let w = golden::clapi_warehouse();
    let evolved = apply_ruleset(&w, &parse_rules(golden::GROUPING_RULES).unwrap()).unwrap().0;
    (w, golden::GROUPING_RULES.to_string(), evolved)
}

/// Interrupts one apply at a random step (possibly none), reopens the
/// directory and checks it holds exactly the old or the new warehouse.
/// Returns "old" or "new".
pub fn fault_trial(seed: u64) -> Result<&'static str, String> {
    let (old, text, new) = scenario(seed);
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    write_warehouse_dir(&old, dir).map_err(|e| e.to_string())?;

    // Staged files are the documents plus the change log.
    let files = serialize_warehouse(&new).len() + 1;
    let commit_step = files + 1;
    let steps = 2 * files + 3;
    let mut r = rng(seed ^ 0x5eed);
    let target = r.gen_range(0..=steps);
    let torn = r.gen_bool(0.5);

    let counter = Arc::new(AtomicUsize::new(0));
    let c = counter.clone();
    let hook = Arc::new(move |step: &Step| {
        let i = c.fetch_add(1, Ordering::SeqCst);
        match (i == target, step) {
            (false, _) => Fault::Proceed,
            (true, Step::Stage(_)) if torn => Fault::TornWrite,
            (true, _) => Fault::Crash,
        }
    });
    let (service, _) = Service::open(dir).map_err(|e| e.to_string())?;
    let service = service.with_fault_hook(hook);
    let outcome = service.apply_rules(&rules_request(&text, false));
    if counter.load(Ordering::SeqCst) != steps.min(target + 1) {
        return Err(format!("seed {}: hook saw {} steps", seed, counter.load(Ordering::SeqCst)));
    }
    match (&outcome, target < steps) {
        (Err(_), true) | (Ok(_), false) => {}
        _ => return Err(format!("seed {}: unexpected apply result {:?}", seed, outcome.map(|_| ()))),
    }
    drop(service);

    let (reopened, report) = Service::open(dir).map_err(|e| format!("seed {}: reopen: {}", seed, e))?;
    if !report.findings.is_valid() {
        return Err(format!("seed {}: reopened warehouse invalid: {:?}", seed, report.findings));
    }
    if dir.join(STAGING_DIR).exists() {
        return Err(format!("seed {}: staging left behind", seed));
    }
    let on_disk = read_warehouse_dir(dir).map_err(|e| e.to_string())?;
    let (w, version) = reopened.snapshot();
    if *w != on_disk {
        return Err(format!("seed {}: session differs from disk", seed));
    }
    let expect_new = target > commit_step;
    match (on_disk == old, on_disk == new) {
        (true, _) if !expect_new && version == 0 => Ok("old"),
        (_, true) if expect_new && version == 1 => Ok("new"),
        (o, n) => Err(format!(
            "seed {}: fault at step {} of {} left old={} new={} version={}",
            seed, target, steps, o, n, version
        )),
    }
}

pub fn fault_trials(n: u64) -> Result<String, String> {
    let (mut old, mut new) = (0, 0);
    for seed in 0..n {
        match fault_trial(seed)? {
            "old" => old += 1,
            _ => new += 1,
        }
    }
    Ok(format!("{}/{} trials consistent ({} old, {} new)", n, n, old, new))
}
