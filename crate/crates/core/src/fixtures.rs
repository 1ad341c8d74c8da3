//! Seeded demo warehouses.
//!
//! - `clapi-small`: the token-frequency schema of the running example with a
//!   few transcriptions, speakers and the begin/middle/end locations.
//! - `figure5-blocks`: 10 tokens by 8 locations whose full cells form blocks
//!   hidden by the lexicographic member order.
//! - `rules-demo`: a speaker dimension with a `sex` level, where the token
//!   `bye` at the end of a transcription is mostly said by women.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::WarehouseBuilder;
use crate::model::{
    AttributeSpec, AttributeType, DimensionSpec, FactSpec, LevelSpec, MeasureSpec, MeasureType, Warehouse,
    WarehouseModel,
};

pub const FIXTURES: [&str; 3] = ["clapi-small", "figure5-blocks", "rules-demo"];

pub fn generate_fixture(name: &str, seed: u64) -> Result<Warehouse> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match name {
        "clapi-small" => clapi_small(&mut rng),
        "figure5-blocks" => figure5_blocks(&mut rng),
        "rules-demo" => rules_demo(&mut rng),
        _ => Err(Error::unknown("fixture", name)),
    }
}

fn level(id: &str, attrs: &[(&str, AttributeType)]) -> LevelSpec {
    LevelSpec {
        id: id.to_string(),
        attributes: attrs
            .iter()
            .map(|(n, t)| AttributeSpec {
                name: n.to_string(),
                ty: *t,
            })
            .collect(),
    }
}

fn dimension(id: &str, path: &str, levels: Vec<LevelSpec>) -> DimensionSpec {
    DimensionSpec {
        id: id.to_string(),
        path: path.to_string(),
        levels,
    }
}

/// The schema of the running example: time, speaker and transcription
/// dimensions over a `frequency` measure.
pub fn clapi_model() -> WarehouseModel {
    use AttributeType::*;
    WarehouseModel {
        dimensions: vec![
            dimension(
                "time-d",
                "dim-time.xml",
                vec![level("location-in-transcription", &[("location", String)])],
            ),
            dimension("speaker-d", "dim-speaker.xml", vec![level("speaker", &[("sex", Boolean)])]),
            dimension(
                "transcription-d",
                "dim-transcript.xml",
                vec![
                    level("token", &[("term", String)]),
                    level("transcription", &[("transcription-name", String)]),
                ],
            ),
        ],
        facts: FactSpec {
            id: "facts".into(),
            path: "facts.xml".into(),
            measures: vec![MeasureSpec {
                id: "frequency".into(),
                ty: MeasureType::Real,
            }],
            dimension_refs: vec!["time-d".into(), "speaker-d".into(), "transcription-d".into()],
        },
    }
}

const LOCATIONS: [&str; 3] = ["begin", "middle", "end"];

fn clapi_small(rng: &mut ChaCha8Rng) -> Result<Warehouse> {
    let mut b = WarehouseBuilder::new(clapi_model());
    for l in LOCATIONS {
        b.member("time-d", "location-in-transcription", l, &[("location", l)], None)?;
    }
    let speakers: Vec<String> = (1..=6).map(|i| format!("spk{}", i)).collect();
    for (i, s) in speakers.iter().enumerate() {
        let sex = if i % 2 == 0 { "true" } else { "false" };
        b.member("speaker-d", "speaker", s, &[("sex", sex)], None)?;
    }
    let transcriptions = ["t1", "t2", "t3"];
    for (i, t) in transcriptions.iter().enumerate() {
        let name = format!("interview-{}", i + 1);
        b.member("transcription-d", "transcription", t, &[("transcription-name", &name)], None)?;
    }
    let terms = [
        "bonjour", "merci", "alors", "voila", "euh", "bon", "donc", "oui", "non", "enfin", "quoi", "ben",
    ];
    let mut tokens = Vec::new();
    for (i, term) in terms.iter().enumerate() {
        let id = format!("tok{:02}", i + 1);
        let parent = transcriptions[i % transcriptions.len()];
        b.member("transcription-d", "token", &id, &[("term", term)], Some(parent))?;
        tokens.push(id);
    }
    for tok in &tokens {
        for loc in LOCATIONS {
            for spk in &speakers {
                if rng.gen_bool(0.5) {
                    let f = rng.gen_range(1..=20) as f64;
                    b.fact(
                        &[("time-d", loc), ("speaker-d", spk), ("transcription-d", tok)],
                        &[("frequency", f)],
                    );
                }
            }
        }
    }
    b.build()
}

fn figure5_blocks(rng: &mut ChaCha8Rng) -> Result<Warehouse> {
    let mut b = WarehouseBuilder::new(clapi_model());
    let locations: Vec<String> = (1..=8).map(|i| format!("L{}", i)).collect();
    let tokens: Vec<String> = (1..=10).map(|i| format!("P{:02}", i)).collect();
    for l in &locations {
        b.member("time-d", "location-in-transcription", l, &[("location", l)], None)?;
    }
    for (s, sex) in [("spk1", "true"), ("spk2", "false")] {
        b.member("speaker-d", "speaker", s, &[("sex", sex)], None)?;
    }
    b.member("transcription-d", "transcription", "T1", &[("transcription-name", "corpus")], None)?;
    for t in &tokens {
        b.member("transcription-d", "token", t, &[("term", t)], Some("T1"))?;
    }

    let mut shuffled_tokens = tokens.clone();
    shuffled_tokens.shuffle(rng);
    let mut shuffled_locations = locations.clone();
    shuffled_locations.shuffle(rng);
    let token_blocks = [&shuffled_tokens[0..4], &shuffled_tokens[4..7], &shuffled_tokens[7..10]];
    let location_blocks = [&shuffled_locations[0..3], &shuffled_locations[3..6], &shuffled_locations[6..8]];
    let base = [10.0, 25.0, 40.0];

    let mut full = std::collections::BTreeMap::new();
    for g in 0..3 {
        for t in token_blocks[g] {
            for l in location_blocks[g] {
                if rng.gen_bool(0.9) {
                    full.insert((t.clone(), l.clone()), base[g] + rng.gen_range(0..3) as f64);
                }
            }
        }
    }
    for _ in 0..2 {
        let t = tokens.choose(rng).expect("tokens").clone();
        let l = locations.choose(rng).expect("locations").clone();
        let v = rng.gen_range(1..=50) as f64;
        full.entry((t, l)).or_insert(v);
    }
    for ((t, l), v) in &full {
        let spk = if rng.gen_bool(0.5) { "spk1" } else { "spk2" };
        b.fact(
            &[("time-d", l), ("speaker-d", spk), ("transcription-d", t)],
            &[("frequency", *v)],
        );
    }
    b.build()
}

/// The running-example schema with a `sex` level above `speaker`.
pub fn rules_demo_model() -> WarehouseModel {
    let mut model = clapi_model();
    model.dimensions[1]
        .levels
        .push(level("sex", &[("label", AttributeType::String)]));
    model
}

fn rules_demo(rng: &mut ChaCha8Rng) -> Result<Warehouse> {
    let mut b = WarehouseBuilder::new(rules_demo_model());
    for l in LOCATIONS {
        b.member("time-d", "location-in-transcription", l, &[("location", l)], None)?;
    }
    b.member("speaker-d", "sex", "f", &[("label", "female")], None)?;
    b.member("speaker-d", "sex", "m", &[("label", "male")], None)?;
    let speakers: Vec<(String, &str)> = (1..=8)
        .map(|i| (format!("spk{}", i), if i % 2 == 1 { "f" } else { "m" }))
        .collect();
    for (s, sex) in &speakers {
        let flag = if *sex == "f" { "true" } else { "false" };
        b.member("speaker-d", "speaker", s, &[("sex", flag)], Some(sex))?;
    }
    for t in ["t1", "t2"] {
        b.member("transcription-d", "transcription", t, &[("transcription-name", t)], None)?;
    }
    let terms = ["hello", "hi", "well", "so", "okay", "thanks", "yes", "bye"];
    for (i, term) in terms.iter().enumerate() {
        let parent = if i % 2 == 0 { "t1" } else { "t2" };
        b.member("transcription-d", "token", term, &[("term", term)], Some(parent))?;
    }
    let women: Vec<&str> = speakers.iter().filter(|(_, s)| *s == "f").map(|(s, _)| s.as_str()).collect();
    for _ in 0..96 {
        let token = if rng.gen_bool(0.35) {
            "bye"
        } else {
            terms[rng.gen_range(0..terms.len() - 1)]
        };
        let location = if token == "bye" && rng.gen_bool(0.8) {
            "end"
        } else {
            LOCATIONS[rng.gen_range(0..LOCATIONS.len())]
        };
        let speaker = if token == "bye" && location == "end" && rng.gen_bool(0.9) {
            women[rng.gen_range(0..women.len())]
        } else {
            speakers[rng.gen_range(0..speakers.len())].0.as_str()
        };
        let f = rng.gen_range(1..=10) as f64;
        b.fact(
            &[("time-d", location), ("speaker-d", speaker), ("transcription-d", token)],
            &[("frequency", f)],
        );
    }
    b.build()
}
