use xdw::documents::{serialize_model, serialize_warehouse};
use xdw::fixtures::{clapi_model, generate_fixture, FIXTURES};
use xdw::ingest::{ingest, IngestionMapping};
use xdw::{validate_warehouse, Error};
use xdw_oracles::golden;

const CSV: &str = include_str!("../examples/data/utterances.csv");
const MAPPING: &str = include_str!("../examples/data/utterances-mapping.json");

#[test]
fn six_rows_give_a_clean_warehouse() {
    let mapping: IngestionMapping = serde_json::from_str(MAPPING).unwrap();
    let w = ingest(CSV, &mapping).unwrap();
    assert_eq!(w.model.dimensions.len(), 3);
    assert_eq!(w.facts.rows.len(), 6);
    assert!(validate_warehouse(&w).findings.is_empty());
    let sexes = &w.dimension_data("speaker-d").unwrap().levels[0].instances;
    assert_eq!(sexes.iter().map(|i| i.id.as_str()).collect::<Vec<_>>(), ["f", "m"]);
    let tokens = &w.dimension_data("transcription-d").unwrap().levels[0].instances;
    assert_eq!(tokens.len(), 4);
    assert_eq!(tokens[0].roll_up.as_deref(), Some("interview-1"));
}

#[test]
fn conflicting_parent_is_rejected() {
    let mapping: IngestionMapping = serde_json::from_str(MAPPING).unwrap();
    let csv = format!("{}begin,f,hello,interview-2,1\n", CSV);
    let err = ingest(&csv, &mapping).unwrap_err();
    assert!(matches!(err, Error::Parse { .. }));
    assert_eq!(err.location().unwrap().line, 8);
}

#[test]
fn clapi_small_uses_the_example_schema() {
    let w = generate_fixture("clapi-small", 1).unwrap();
    assert_eq!(serialize_model(&w.model), golden::MODEL_DOC.replacen("\">", "\"?>", 1));
    assert_eq!(w.model, clapi_model());
}

#[test]
fn fixtures_are_deterministic_and_valid() {
    for name in FIXTURES {
        for seed in [1, 7] {
            let a = generate_fixture(name, seed).unwrap();
            let b = generate_fixture(name, seed).unwrap();
            assert_eq!(serialize_warehouse(&a), serialize_warehouse(&b), "{} {}", name, seed);
            assert!(validate_warehouse(&a).findings.is_empty(), "{} {}", name, seed);
            assert!(a.facts.rows.len() <= 10_000);
        }
    }
    assert_ne!(
        serialize_warehouse(&generate_fixture("clapi-small", 1).unwrap()),
        serialize_warehouse(&generate_fixture("clapi-small", 2).unwrap())
    );
    assert!(matches!(generate_fixture("nope", 1), Err(Error::Unknown { .. })));
}

#[test]
fn block_fixture_shape() {
    let w = generate_fixture("figure5-blocks", 1).unwrap();
    let data = w.dimension_data("transcription-d").unwrap();
    assert_eq!(data.levels[0].instances.len(), 10);
    assert_eq!(w.dimension_data("time-d").unwrap().levels[0].instances.len(), 8);
}
