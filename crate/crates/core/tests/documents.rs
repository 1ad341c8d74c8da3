use std::borrow::Cow;

use proptest::prelude::*;
use xdw::documents::{
    parse_dimension, parse_model, parse_warehouse, read_warehouse_dir, serialize_dimension, serialize_model,
    serialize_warehouse, write_warehouse_dir,
};
use xdw::model::{AttributeType, MeasureType};
use xdw::{validate_warehouse, Error, FindingKind, Warehouse};
use xdw_oracles::gen::{random_warehouse, Shape};
use xdw_oracles::golden;

fn reparse(w: &Warehouse) -> xdw::Result<Warehouse> {
    let docs = serialize_warehouse(w);
    parse_warehouse(&docs[0].1, |name| {
        docs.iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| Cow::Owned(t.clone()))
            .ok_or_else(|| Error::Invalid(format!("no document {}", name)))
    })
}

#[test]
fn schema_document_shape() {
    let model = parse_model(golden::MODEL_DOC).unwrap();
    let dims: Vec<&str> = model.dimensions.iter().map(|d| d.id.as_str()).collect();
    assert_eq!(dims, ["time-d", "speaker-d", "transcription-d"]);
    let transcription = model.dimension("transcription-d").unwrap();
    let levels: Vec<&str> = transcription.levels.iter().map(|l| l.id.as_str()).collect();
    assert_eq!(levels, ["token", "transcription"]);
    let speaker = model.dimension("speaker-d").unwrap();
    assert_eq!(speaker.levels[0].attributes[0].ty, AttributeType::Boolean);
    assert_eq!(model.facts.measures[0].id, "frequency");
    assert_eq!(model.facts.measures[0].ty, MeasureType::Real);
    assert_eq!(model.facts.dimension_refs, ["time-d", "speaker-d", "transcription-d"]);
}

#[test]
fn schema_document_round_trips() {
    let model = parse_model(golden::MODEL_DOC).unwrap();
    let text = serialize_model(&model);
    assert_eq!(parse_model(&text).unwrap(), model);
    assert_eq!(text, golden::MODEL_DOC.replacen("\">", "\"?>", 1));
    assert_eq!(serialize_model(&parse_model(&text).unwrap()), text);
}

#[test]
fn evolved_time_document_parses() {
    let model = parse_model(golden::EVOLVED_MODEL_DOC).unwrap();
    let spec = model.dimension("time-d").unwrap();
    let data = parse_dimension(golden::EVOLVED_TIME_DOC, spec).unwrap();
    let extreme = data.levels[1].instance("extreme").unwrap();
    assert_eq!(extreme.children(), ["begin", "end"]);
    assert_eq!(data.levels[0].instance("begin").unwrap().roll_up.as_deref(), Some("extreme"));
    let back = parse_dimension(&serialize_dimension(&data), spec).unwrap();
    assert_eq!(back, data);
}

#[test]
fn parse_errors_carry_file_and_position() {
    let broken = golden::MODEL_DOC.replace("</DW-model>", "</DW-mode>");
    let err = parse_warehouse(&broken, |_| Ok(Cow::Borrowed(""))).unwrap_err();
    let loc = err.location().expect("parse error has a location");
    assert_eq!(loc.file.as_deref(), Some("dw-model.xml"));
    assert!(loc.line > 1);
}

#[test]
fn directory_round_trip() {
    let w = xdw::fixtures::generate_fixture("clapi-small", 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_warehouse_dir(&w, dir.path()).unwrap();
    assert_eq!(read_warehouse_dir(dir.path()).unwrap(), w);

    std::fs::remove_file(dir.path().join("dim-speaker.xml")).unwrap();
    let err = read_warehouse_dir(dir.path()).unwrap_err();
    assert!(err.to_string().contains("dim-speaker.xml"), "{}", err);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_warehouses_round_trip(seed in any::<u64>()) {
        let w = random_warehouse(seed, Shape::default());
        prop_assert!(validate_warehouse(&w).findings.is_empty());
        let back = reparse(&w).unwrap();
        prop_assert_eq!(&back, &w);
        prop_assert_eq!(serialize_warehouse(&back), serialize_warehouse(&w));
    }
}

fn corrupted(mutate: impl FnOnce(&mut Warehouse)) -> Vec<FindingKind> {
    let mut w = golden::clapi_warehouse();
    mutate(&mut w);
    validate_warehouse(&w).findings.iter().map(|f| f.kind).collect()
}

#[test]
fn example_warehouse_is_clean() {
    assert!(validate_warehouse(&golden::clapi_warehouse()).findings.is_empty());
}

#[test]
fn each_corruption_yields_its_finding() {
    use FindingKind::*;
    let time = |w: &mut Warehouse| w.dimensions.iter_mut().position(|d| d.dim_id == "time-d").unwrap();
    let tr = |w: &mut Warehouse| w.dimensions.iter_mut().position(|d| d.dim_id == "transcription-d").unwrap();

    assert_eq!(
        corrupted(|w| {
            let i = time(w);
            let dup = w.dimensions[i].levels[0].instances[0].clone();
            w.dimensions[i].levels[0].instances.push(dup);
        }),
        [DuplicateInstance]
    );
    assert_eq!(
        corrupted(|w| {
            let i = time(w);
            w.dimensions[i].levels[0].instances[0].attributes.push(("colour".into(), "red".into()));
        }),
        [UndeclaredAttribute]
    );
    assert_eq!(
        corrupted(|w| {
            let i = w.dimensions.iter().position(|d| d.dim_id == "speaker-d").unwrap();
            w.dimensions[i].levels[0].instances[0].attributes[0].1 = "maybe".into();
        }),
        [AttributeTypeMismatch]
    );
    assert_eq!(
        corrupted(|w| {
            let i = tr(w);
            let tok = &mut w.dimensions[i].levels[0].instances[0];
            tok.roll_up = Some("t9".into());
        }),
        [DanglingRollUp]
    );
    assert_eq!(
        corrupted(|w| {
            let i = tr(w);
            w.dimensions[i].levels[1].instances[0].drill_down = Some(vec!["tok1".into(), "tok9".into()]);
        }),
        [DanglingDrillDown]
    );
    assert_eq!(
        corrupted(|w| {
            w.facts.rows[0].members.insert("time-d".into(), "noon".into());
        }),
        [DanglingFactReference]
    );
    assert_eq!(
        corrupted(|w| {
            w.facts.rows[0].measures.clear();
        }),
        [MissingMeasureBinding]
    );
    assert_eq!(
        corrupted(|w| {
            w.facts.rows[0].members.remove("speaker-d");
        }),
        [MissingDimensionBinding]
    );
    assert_eq!(
        corrupted(|w| {
            let i = time(w);
            w.dimensions.remove(i);
        }),
        [MissingDimensionData]
    );
}
