mod support;

use std::sync::{Arc, Barrier};

use xdw::documents::read_warehouse_dir;
use xdw_oracles::golden;
use xdw_service::storage::{recover, Fault, Step, COMMIT_MARKER, STAGING_DIR};
use xdw_service::Service;

use support::{fault_trial, golden_dir, rules_request};

#[test]
fn interrupted_applies_leave_old_or_new() {
    let mut seen = std::collections::BTreeSet::new();
    for seed in 0..60 {
        seen.insert(fault_trial(seed).unwrap());
    }
    assert_eq!(seen.len(), 2, "both outcomes exercised");
}

#[test]
fn staging_without_marker_is_discarded() {
    let tmp = tempfile::tempdir().unwrap();
    golden_dir(tmp.path());
    let staging = tmp.path().join(STAGING_DIR);
    std::fs::create_dir(&staging).unwrap();
    std::fs::write(staging.join("dw-model.xml"), "<DW-mo").unwrap();
    assert!(!recover(tmp.path()).unwrap());
    assert!(!staging.exists());
    assert_eq!(read_warehouse_dir(tmp.path()).unwrap(), golden::clapi_warehouse());
}

#[test]
fn marker_rolls_forward_partially_renamed_set() {
    let tmp = tempfile::tempdir().unwrap();
    golden_dir(tmp.path());
    let hook = Arc::new(|s: &Step| match s {
        Step::Rename(name) if name == "dim-time.xml" => Fault::Crash,
        _ => Fault::Proceed,
    });
    let (service, _) = Service::open(tmp.path()).unwrap();
    let service = service.with_fault_hook(hook);
    assert!(service.apply_rules(&rules_request(golden::GROUPING_RULES, false)).is_err());
    assert!(tmp.path().join(STAGING_DIR).join(COMMIT_MARKER).is_file());
    // The live schema already has the new level, the time document not yet.
    assert!(read_warehouse_dir(tmp.path()).is_err() || !xdw::validate_warehouse(&read_warehouse_dir(tmp.path()).unwrap()).is_valid());

    let (reopened, report) = Service::open(tmp.path()).unwrap();
    assert!(report.recovered);
    assert_eq!(report.version, 1);
    assert_eq!(reopened.log().len(), 1);
    let w = reopened.snapshot().0;
    assert!(w.model.dimension("time-d").unwrap().level("group-of-location-in-transcription").is_some());
}

#[test]
fn second_writer_is_rejected_and_readers_see_the_old_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    golden_dir(tmp.path());
    let barrier = Arc::new(Barrier::new(2));
    let b = barrier.clone();
    let hook = Arc::new(move |s: &Step| {
        if *s == Step::Validate {
            b.wait();
            b.wait();
        }
        Fault::Proceed
    });
    let (service, _) = Service::open(tmp.path()).unwrap();
    let service = Arc::new(service.with_fault_hook(hook));

    let writer = {
        let s = service.clone();
        std::thread::spawn(move || s.apply_rules(&rules_request(golden::GROUPING_RULES, false)))
    };
    barrier.wait();
    let err = service.apply_rules(&rules_request(golden::GROUPING_RULES, false)).unwrap_err();
    assert_eq!(err.code, "concurrent-writer");
    assert_eq!(err.status, 409);
    let during = service.model();
    assert_eq!(during.version, 0);
    assert_eq!(during.model.dimension("time-d").unwrap().levels.len(), 1);
    // Dry runs only read.
    assert!(service.apply_rules(&rules_request(golden::GROUPING_RULES, true)).is_ok());
    barrier.wait();

    let done = writer.join().unwrap().unwrap();
    assert!(done.applied);
    assert_eq!(service.model().version, 1);
    assert_eq!(service.model().model.dimension("time-d").unwrap().levels.len(), 2);
}
