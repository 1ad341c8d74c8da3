//! The running-example documents and hand-encoded expectations.

use xdw::documents::parse_model;
use xdw::ingest::WarehouseBuilder;
use xdw::{DimensionData, Instance, Warehouse};

/// The reference schema document, unterminated prologue included.
pub const MODEL_DOC: &str = include_str!("../data/clapi-model.xml");
/// The reference schema after the location grouping level was added.
pub const EVOLVED_MODEL_DOC: &str = include_str!("../data/clapi-model-evolved.xml");
/// The reference time dimension after evolution, transcribed with closing
/// tags and a whitespace-separated `Drill-Down` list. The coarse `middle`
/// keeps its self `Roll-up` and has no `Drill-Down`, as transcribed.
pub const EVOLVED_TIME_DOC: &str = include_str!("../data/evolved-dim-time.xml");

/// The reference rules verbatim, labels and list markers included. They
/// name the new level `group-of-location` with attribute `group-location`.
pub const LISTED_RULES: &str = "\
Structure rule:

if ConditionOn(location-in-transcription, {location}) then Generate(group-of-location, {group-location})

Data rules:

- (1) if location in {'begin', 'end'} then group-location={extreme}
- (2) if location not in {'begin', 'end'} then group-location={middle}
";

/// The same rules using the level and attribute names of the reference
/// evolved documents.
pub const GROUPING_RULES: &str = "\
if ConditionOn(location-in-transcription, {location}) then Generate(group-of-location-in-transcription, {location-group})
(1) if location in {'begin', 'end'} then location-group={extreme}
(2) if location not in {'begin', 'end'} then location-group={middle}
";

fn instance(id: &str, attrs: &[(&str, &str)], roll_up: Option<&str>, drill_down: Option<&[&str]>) -> Instance {
    let mut i = Instance::new(id);
    for (k, v) in attrs {
        i = i.with_attribute(*k, *v);
    }
    i.roll_up = roll_up.map(str::to_string);
    i.drill_down = drill_down.map(|d| d.iter().map(|s| s.to_string()).collect());
    i
}

/// The evolved time dimension with well-formed links: `middle` at the coarse
/// level lists its child and has no parent.
pub fn expected_time_dimension() -> DimensionData {
    DimensionData {
        dim_id: "time-d".into(),
        levels: vec![
            xdw::model::LevelInstances {
                level_id: "location-in-transcription".into(),
                instances: vec![
                    instance("begin", &[("location", "begin")], Some("extreme"), None),
                    instance("middle", &[("location", "middle")], Some("middle"), None),
                    instance("end", &[("location", "end")], Some("extreme"), None),
                ],
            },
            xdw::model::LevelInstances {
                level_id: "group-of-location-in-transcription".into(),
                instances: vec![
                    instance("extreme", &[("location-group", "extreme")], None, Some(&["begin", "end"])),
                    instance("middle", &[("location-group", "middle")], None, Some(&["middle"])),
                ],
            },
        ],
    }
}

/// The reference schema populated with begin/middle/end locations, two
/// speakers, one token and four facts: begin {2, 3}, middle {5}, end {4},
/// all by `spk1`.
pub fn clapi_warehouse() -> Warehouse {
    let model = parse_model(MODEL_DOC).expect("reference schema parses");
    let mut b = WarehouseBuilder::new(model);
    for l in ["begin", "middle", "end"] {
        b.member("time-d", "location-in-transcription", l, &[("location", l)], None)
            .unwrap();
    }
    b.member("speaker-d", "speaker", "spk1", &[("sex", "true")], None).unwrap();
    b.member("speaker-d", "speaker", "spk2", &[("sex", "false")], None).unwrap();
    b.member("transcription-d", "transcription", "t1", &[("transcription-name", "interview")], None)
        .unwrap();
    b.member("transcription-d", "token", "tok1", &[("term", "euh")], Some("t1")).unwrap();
    for (loc, f) in [("begin", 2.0), ("begin", 3.0), ("middle", 5.0), ("end", 4.0)] {
        b.fact(
            &[("time-d", loc), ("speaker-d", "spk1"), ("transcription-d", "tok1")],
            &[("frequency", f)],
        );
    }
    b.build().expect("example warehouse is valid")
}
