mod support;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use xdw::documents::{read_warehouse_dir, write_warehouse_dir};
use xdw::ingest::WarehouseBuilder;
use xdw::model::{AttributeSpec, AttributeType, DimensionSpec, FactSpec, LevelSpec, MeasureSpec, MeasureType};
use xdw::WarehouseModel;
use xdw_oracles::golden;
use xdw_service::http::router;
use xdw_service::Service;

struct Api {
    app: axum::Router,
    _dir: tempfile::TempDir,
}

impl Api {
    fn golden() -> Api {
        let dir = tempfile::tempdir().unwrap();
        support::golden_dir(dir.path());
        Api::open(dir)
    }

    fn open(dir: tempfile::TempDir) -> Api {
        let (service, _) = Service::open(dir.path()).unwrap();
        Api {
            app: router(Arc::new(service), None),
            _dir: dir,
        }
    }

    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let req = Request::builder().method(method).uri(uri);
        let req = match body {
            Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    async fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.call("GET", uri, None).await
    }

    async fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        self.call("POST", uri, Some(body)).await
    }
}

fn location_cube() -> Value {
    json!({"axes": [{"dim": "time-d", "level": "location-in-transcription"}], "measure": "frequency"})
}

fn cell_values(v: &Value) -> Vec<(String, f64)> {
    v["cube"]["cells"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["coordinate"][0].as_str().unwrap().to_string(), c["value"].as_f64().unwrap()))
        .collect()
}

#[tokio::test]
async fn model_lists_three_dimensions() {
    let api = Api::golden();
    let (status, v) = api.get("/model").await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = v["dimensions"].as_array().unwrap().iter().map(|d| d["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["time-d", "speaker-d", "transcription-d"]);
    assert_eq!(v["version"], 0);
    assert_eq!(v["facts"], 4);
}

#[tokio::test]
async fn cube_then_operators() {
    let api = Api::golden();
    let (status, c1) = api.post("/cubes", location_cube()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(c1["id"], "c1");
    assert_eq!(c1["stale"], false);
    assert_eq!(
        cell_values(&c1),
        [("begin".into(), 5.0), ("middle".into(), 5.0), ("end".into(), 4.0)]
    );

    let (_, c2) = api
        .post("/cubes/c1/op", json!({"op": "switch", "dim": "time-d", "order": ["end", "middle", "begin"]}))
        .await;
    assert_eq!(c2["id"], "c2");
    assert_eq!(cell_values(&c2)[0], ("end".into(), 4.0));

    let (_, c3) = api.post("/cubes/c2/op", json!({"op": "dice", "members": {"time-d": ["end", "begin"]}})).await;
    assert_eq!(c3["cube"]["cell_count"], 2);

    let (status, err) = api
        .post("/cubes/c1/op", json!({"op": "roll-up", "dim": "time-d", "level": "location-in-transcription"}))
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"]["code"], "target-not-coarser");

    let (status, err) = api.post("/cubes/c9/op", json!({"op": "push", "dim": "time-d"})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["error"]["code"], "unknown-reference");

    let (status, err) = api.post("/cubes/c1/op", json!({"op": "explode"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["error"]["code"], "invalid-argument");
}

#[tokio::test]
async fn push_and_labeling_pull() {
    let api = Api::golden();
    api.post("/cubes", location_cube()).await;
    let (_, pushed) = api.post("/cubes/c1/op", json!({"op": "push", "dim": "time-d"})).await;
    assert_eq!(pushed["cube"]["axes"], json!([]));
    let (_, back) = api.post("/cubes/c2/op", json!({"op": "pull"})).await;
    assert_eq!(cell_values(&back).len(), 3);
    let (status, err) = api.post("/cubes/c1/op", json!({"op": "pull"})).await;
    assert_eq!((status, err["error"]["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("nothing-to-pull")));

    let labeling = json!({"op": "pull", "labeling": {"dim": "band", "thresholds": [5.0], "labels": ["low", "high"]}});
    let (_, banded) = api.post("/cubes/c1/op", labeling).await;
    let axes: Vec<&str> = banded["cube"]["axes"].as_array().unwrap().iter().map(|a| a["dim"].as_str().unwrap()).collect();
    assert_eq!(axes, ["time-d", "band"]);
    let bad = json!({"op": "pull", "labeling": {"dim": "band", "thresholds": [5.0], "labels": ["x"]}});
    assert_eq!(api.post("/cubes/c1/op", bad).await.0, StatusCode::BAD_REQUEST);
    let collide = json!({"op": "pull", "labeling": {"dim": "band", "replace": "time-d", "thresholds": [5.0], "labels": ["low", "high"]}});
    assert_eq!(api.post("/cubes/c1/op", collide).await.1["error"]["code"], "label-collision");
}

#[tokio::test]
async fn rules_validate_apply_and_log() {
    let api = Api::golden();
    api.post("/cubes", location_cube()).await;

    let partial: String = golden::GROUPING_RULES.lines().take(2).collect::<Vec<_>>().join("\n");
    let (status, report) = api.post("/rules/validate", json!({"text": partial})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["findings"][0]["message"], "incomplete: middle unmatched");

    let (_, dry) = api.post("/rules/apply", json!({"text": golden::GROUPING_RULES, "dry_run": true})).await;
    assert_eq!(dry["applied"], false);
    assert_eq!(api.get("/log").await.1, json!([]));

    let (status, applied) = api.post("/rules/apply", json!({"text": golden::GROUPING_RULES})).await;
    assert_eq!(status, StatusCode::OK, "{}", applied);
    assert_eq!(applied["applied"], true);
    assert_eq!(applied["version"], 1);
    assert_eq!(applied["summary"]["new_level"], "group-of-location-in-transcription");

    let (_, c1) = api.get("/cubes/c1").await;
    assert_eq!(c1["stale"], true);
    let (_, up) = api
        .post("/cubes", json!({"axes": [{"dim": "time-d", "level": "group-of-location-in-transcription"}], "measure": "frequency"}))
        .await;
    assert_eq!(up["stale"], false);
    assert_eq!(cell_values(&up), [("extreme".into(), 9.0), ("middle".into(), 5.0)]);

    let (status, err) = api.post("/rules/apply", json!({"text": golden::GROUPING_RULES})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"]["code"], "rules-rejected");
    assert_eq!(err["error"]["details"]["findings"][0]["kind"], "target-level-exists");

    let (_, log) = api.get("/log").await;
    assert_eq!(log.as_array().unwrap().len(), 1);
    assert_eq!(log[0]["version"], 1);
}

#[tokio::test]
async fn structured_rules_match_text_rules() {
    let rules = xdw::evolution::parse_rules(golden::GROUPING_RULES).unwrap();
    let text = Api::golden();
    let structured = Api::golden();
    let a = text.post("/rules/apply", json!({"text": golden::GROUPING_RULES})).await.1;
    let b = structured.post("/rules/apply", json!({"rules": rules})).await.1;
    assert_eq!(a, b);
    let both = json!({"text": golden::GROUPING_RULES, "rules": rules});
    assert_eq!(structured.post("/rules/validate", both).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn applied_documents_on_disk_match_the_evolved_documents() {
    let dir = tempfile::tempdir().unwrap();
    support::golden_dir(dir.path());
    let path = dir.path().to_path_buf();
    let api = Api::open(dir);
    api.post("/rules/apply", json!({"text": golden::GROUPING_RULES})).await;
    let w = read_warehouse_dir(&path).unwrap();
    assert_eq!(w.model, xdw::documents::parse_model(golden::EVOLVED_MODEL_DOC).unwrap());
    assert_eq!(w.dimension_data("time-d").unwrap(), &golden::expected_time_dimension());
}

#[tokio::test]
async fn mining_routes() {
    let dir = tempfile::tempdir().unwrap();
    write_warehouse_dir(&xdw::fixtures::generate_fixture("clapi-small", 1).unwrap(), dir.path()).unwrap();
    let api = Api::open(dir);
    let opac = json!({
        "axes": [{"dim": "transcription-d", "level": "token"}, {"dim": "time-d", "level": "location-in-transcription"}],
        "measure": "frequency",
        "dim": "transcription-d",
        "k": 2
    });
    let (status, v) = api.post("/mine/opac", opac).await;
    assert_eq!(status, StatusCode::OK, "{}", v);
    assert_eq!(v["result"]["quality"].as_array().unwrap().len(), 12);
    assert_eq!(v["cut"]["partition"]["clusters"].as_array().unwrap().len(), 2);
    assert!(v["cut"]["rules"].as_str().unwrap().starts_with("if ConditionOn(token"));

    let dir = tempfile::tempdir().unwrap();
    write_warehouse_dir(&xdw::fixtures::generate_fixture("figure5-blocks", 1).unwrap(), dir.path()).unwrap();
    let api = Api::open(dir);
    let cube = json!({
        "axes": [{"dim": "transcription-d", "level": "token"}, {"dim": "time-d", "level": "location-in-transcription"}],
        "measure": "frequency"
    });
    api.post("/cubes", cube).await;
    let (status, v) = api.post("/mine/mca", json!({"cube": "c1"})).await;
    assert_eq!(status, StatusCode::OK, "{}", v);
    assert!(v["after"]["value"].as_f64().unwrap() >= v["before"]["value"].as_f64().unwrap());
    assert_eq!(v["arranged"]["id"], "c2");
    assert_eq!(v["arranged"]["cube"]["cell_count"], 24);

    let dir = tempfile::tempdir().unwrap();
    write_warehouse_dir(&xdw::fixtures::generate_fixture("rules-demo", 1).unwrap(), dir.path()).unwrap();
    let api = Api::open(dir);
    let meta = json!({
        "antecedent": [{"dim": "transcription-d", "level": "token"}, {"dim": "time-d", "level": "location-in-transcription"}],
        "consequent": [{"dim": "speaker-d", "level": "sex"}],
        "measure": "frequency",
        "min_support": 0.2,
        "min_confidence": 0.6
    });
    let (status, v) = api.post("/mine/rules", meta).await;
    assert_eq!(status, StatusCode::OK, "{}", v);
    assert!(!v["rules"].as_array().unwrap().is_empty());
    assert_eq!(api.post("/mine/kmeans", json!({})).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn large_cubes_paginate() {
    let spec = |id: &str| DimensionSpec {
        id: id.into(),
        path: format!("dim-{}.xml", id),
        levels: vec![LevelSpec {
            id: format!("{}-member", id),
            attributes: vec![AttributeSpec {
                name: "name".into(),
                ty: AttributeType::String,
            }],
        }],
    };
    let model = WarehouseModel {
        dimensions: vec![spec("a"), spec("b")],
        facts: FactSpec {
            id: "facts".into(),
            path: "facts.xml".into(),
            measures: vec![MeasureSpec {
                id: "qty".into(),
                ty: MeasureType::Integer,
            }],
            dimension_refs: vec!["a".into(), "b".into()],
        },
    };
    let mut b = WarehouseBuilder::new(model);
    let ids: Vec<String> = (0..110).map(|i| format!("m{:03}", i)).collect();
    for d in ["a", "b"] {
        for id in &ids {
            b.member(d, &format!("{}-member", d), id, &[("name", id)], None).unwrap();
        }
    }
    for x in &ids {
        for y in &ids {
            b.fact(&[("a", x), ("b", y)], &[("qty", 1.0)]);
        }
    }
    let dir = tempfile::tempdir().unwrap();
    write_warehouse_dir(&b.build().unwrap(), dir.path()).unwrap();
    let api = Api::open(dir);
    let cube = json!({"axes": [{"dim": "a", "level": "a-member"}, {"dim": "b", "level": "b-member"}], "measure": "qty"});
    let (_, first) = api.post("/cubes", cube).await;
    assert_eq!(first["cube"]["cell_count"], 12100);
    assert_eq!(first["cube"]["cells"].as_array().unwrap().len(), 10_000);
    assert_eq!(first["next_offset"], 10_000);
    let (_, rest) = api.get("/cubes/c1?offset=10000").await;
    assert_eq!(rest["cube"]["cells"].as_array().unwrap().len(), 2100);
    assert!(rest.get("next_offset").is_none());
    assert_eq!(rest["cube"]["cells"][0]["coordinate"], json!(["m090", "m100"]));
    assert_eq!(api.get("/cubes/c1?limit=20000").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(api.get("/cubes/c1?limit=x").await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn parse_errors_carry_a_location() {
    let dir = tempfile::tempdir().unwrap();
    support::golden_dir(dir.path());
    let (service, _) = Service::open(dir.path()).unwrap();
    std::fs::write(dir.path().join("dim-time.xml"), "<dimension dim-id=\"time-d\">\n<Level>").unwrap();
    let err = Service::open(dir.path()).err().unwrap();
    assert_eq!(err.code, "parse-error");
    let v = serde_json::to_value(err.envelope()).unwrap();
    assert_eq!(v["error"]["location"]["file"], "dim-time.xml");
    drop(service);

    std::fs::remove_file(dir.path().join("dim-time.xml")).unwrap();
    let err = Service::open(dir.path()).err().unwrap();
    assert_eq!(err.code, "io-error");
    assert!(err.message.contains("dim-time.xml"));
}
