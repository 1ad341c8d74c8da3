mod support;

use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use clap::Parser;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use xdw::documents::{read_warehouse_dir, serialize_warehouse, write_warehouse_dir};
use xdw_oracles::golden;
use xdw_service::cli::{run, Cli};
use xdw_service::http::router;
use xdw_service::Service;

fn cli(args: &[&str]) -> Result<String, xdw_service::ApiError> {
    run(Cli::try_parse_from(std::iter::once("xdw").chain(args.iter().copied())).unwrap())
}

fn cli_json(args: &[&str]) -> Value {
    serde_json::from_str(&cli(args).unwrap()).unwrap()
}

async fn http(dir: &Path, calls: &[(&str, &str, Option<Value>)]) -> Value {
    let (service, _) = Service::open(dir).unwrap();
    let app = router(Arc::new(service), None);
    let mut last = Value::Null;
    for (method, uri, body) in calls {
        let req = Request::builder().method(*method).uri(*uri).header("content-type", "application/json");
        let req = req.body(body.as_ref().map_or(Body::empty(), |b| Body::from(b.to_string()))).unwrap();
        let resp = app.clone().oneshot(req).await.unwrap();
        last = serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap();
    }
    last
}

fn fixture(name: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_warehouse_dir(&xdw::fixtures::generate_fixture(name, 1).unwrap(), dir.path()).unwrap();
    dir
}

fn golden_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    support::golden_dir(dir.path());
    dir
}

#[tokio::test]
async fn cube_and_op_match_the_api() {
    let dir = golden_dir();
    let d = dir.path().to_str().unwrap();
    let spec = json!({"axes": [{"dim": "time-d", "level": "location-in-transcription"}, {"dim": "speaker-d", "level": "speaker"}], "measure": "frequency", "aggregate": "AVG"});
    let args = ["--axis", "time-d/location-in-transcription", "--axis", "speaker-d/speaker", "--measure", "frequency", "--aggregate", "avg"];

    let mut cube_args = vec!["cube", d];
    cube_args.extend(args);
    assert_eq!(cli_json(&cube_args), http(dir.path(), &[("POST", "/cubes", Some(spec.clone()))]).await);

    let slice = json!({"op": "slice", "dim": "speaker-d", "member": "spk1"});
    let rotate = json!({"op": "rotate", "permutation": [0]});
    let (s1, s2) = (slice.to_string(), rotate.to_string());
    let mut op_args = vec!["op", d];
    op_args.extend(args);
    op_args.extend(["--op", &s1, "--op", &s2]);
    let via_api = http(
        dir.path(),
        &[("POST", "/cubes", Some(spec)), ("POST", "/cubes/c1/op", Some(slice)), ("POST", "/cubes/c2/op", Some(rotate))],
    )
    .await;
    assert_eq!(cli_json(&op_args), via_api);
    assert_eq!(via_api["id"], "c3");
}

#[tokio::test]
async fn load_lists_the_dimensions() {
    let dir = golden_dir();
    let v = cli_json(&["load", dir.path().to_str().unwrap()]);
    let ids: Vec<&str> = v["dimensions"].as_array().unwrap().iter().map(|d| d["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["time-d", "speaker-d", "transcription-d"]);
    assert_eq!(v["findings"]["findings"], json!([]));

    std::fs::remove_file(dir.path().join("dim-transcript.xml")).unwrap();
    let err = cli(&["load", dir.path().to_str().unwrap()]).unwrap_err();
    assert!(err.message.contains("dim-transcript.xml"), "{}", err);
}

#[tokio::test]
async fn evolve_matches_the_api_on_disk() {
    let rules_dir = tempfile::tempdir().unwrap();
    let rules = rules_dir.path().join("groups.rules");
    std::fs::write(&rules, golden::GROUPING_RULES).unwrap();

    let by_cli = golden_dir();
    let dry = cli_json(&["evolve", by_cli.path().to_str().unwrap(), rules.to_str().unwrap(), "--dry-run"]);
    assert_eq!(dry["applied"], false);
    assert_eq!(read_warehouse_dir(by_cli.path()).unwrap(), golden::clapi_warehouse());
    let applied = cli_json(&["evolve", by_cli.path().to_str().unwrap(), rules.to_str().unwrap()]);

    let by_api = golden_dir();
    let api = http(by_api.path(), &[("POST", "/rules/apply", Some(json!({"text": golden::GROUPING_RULES})))]).await;
    assert_eq!(applied, api);
    for name in ["dw-model.xml", "dim-time.xml", "dim-speaker.xml", "dim-transcript.xml", "facts.xml", "xdw-log.jsonl"] {
        assert_eq!(
            std::fs::read(by_cli.path().join(name)).unwrap(),
            std::fs::read(by_api.path().join(name)).unwrap(),
            "{}",
            name
        );
    }

    let structured = rules_dir.path().join("groups.json");
    let set = xdw::evolution::parse_rules(golden::GROUPING_RULES).unwrap();
    std::fs::write(&structured, serde_json::to_string(&set).unwrap()).unwrap();
    let fresh = golden_dir();
    assert_eq!(cli_json(&["evolve", fresh.path().to_str().unwrap(), structured.to_str().unwrap()]), applied);

    let err = cli(&["evolve", by_cli.path().to_str().unwrap(), rules.to_str().unwrap()]).unwrap_err();
    assert_eq!(err.code, "rules-rejected");
}

#[tokio::test]
async fn mining_matches_the_api() {
    let dir = fixture("clapi-small");
    let d = dir.path().to_str().unwrap();
    let body = json!({
        "axes": [{"dim": "transcription-d", "level": "token"}, {"dim": "time-d", "level": "location-in-transcription"}],
        "measure": "frequency", "dim": "transcription-d", "k": 2, "params": {"linkage": "average"}
    });
    let v = cli_json(&[
        "mine", "opac", d, "--axis", "transcription-d/token", "--axis", "time-d/location-in-transcription",
        "--measure", "frequency", "--dim", "transcription-d", "--linkage", "average", "--k", "2",
    ]);
    assert_eq!(v, http(dir.path(), &[("POST", "/mine/opac", Some(body))]).await);

    let dir = fixture("figure5-blocks");
    let d = dir.path().to_str().unwrap();
    let body = json!({
        "axes": [{"dim": "transcription-d", "level": "token"}, {"dim": "time-d", "level": "location-in-transcription"}],
        "measure": "frequency"
    });
    let v = cli_json(&["mine", "mca", d, "--axis", "transcription-d/token", "--axis", "time-d/location-in-transcription", "--measure", "frequency"]);
    assert_eq!(v, http(dir.path(), &[("POST", "/mine/mca", Some(body))]).await);

    let dir = fixture("rules-demo");
    let d = dir.path().to_str().unwrap();
    let body = json!({
        "antecedent": [{"dim": "transcription-d", "level": "token"}, {"dim": "time-d", "level": "location-in-transcription"}],
        "consequent": [{"dim": "speaker-d", "level": "sex"}],
        "measure": "frequency", "aggregate": "SUM", "min_support": 0.1, "min_confidence": 0.6
    });
    let args = [
        "mine", "rules", d, "--antecedent", "transcription-d/token", "--antecedent", "time-d/location-in-transcription",
        "--consequent", "speaker-d/sex", "--measure", "frequency", "--support-aggregate", "sum",
        "--min-support", "0.1", "--min-confidence", "0.6",
    ];
    assert_eq!(cli_json(&args), http(dir.path(), &[("POST", "/mine/rules", Some(body))]).await);
    let mut table = args.to_vec();
    table.extend(["--format", "table"]);
    assert!(cli(&table).unwrap().starts_with("antecedent\tconsequent\tsupport"));
}

#[test]
fn fixture_and_export() {
    let out = tempfile::tempdir().unwrap();
    let target = out.path().join("blocks");
    let v = cli_json(&["fixture", "figure5-blocks", "--seed", "3", "--out", target.to_str().unwrap()]);
    let expected = xdw::fixtures::generate_fixture("figure5-blocks", 3).unwrap();
    assert_eq!(v["facts"], expected.facts.rows.len());
    assert_eq!(read_warehouse_dir(&target).unwrap(), expected);

    let copy = out.path().join("copy");
    let names = cli_json(&["export", target.to_str().unwrap(), copy.to_str().unwrap()]);
    assert_eq!(names.as_array().unwrap().len(), serialize_warehouse(&expected).len());
    assert_eq!(read_warehouse_dir(&copy).unwrap(), expected);
    assert_eq!(cli(&["fixture", "nope", "--out", target.to_str().unwrap()]).unwrap_err().code, "unknown-reference");
}

#[test]
fn binary_exit_codes_and_error_envelope() {
    let dir = golden_dir();
    let bin = env!("CARGO_BIN_EXE_xdw");
    let ok = Command::new(bin)
        .args(["cube", dir.path().to_str().unwrap(), "--axis", "time-d/location-in-transcription", "--measure", "frequency", "--format", "table"])
        .output()
        .unwrap();
    assert!(ok.status.success());
    let table = String::from_utf8(ok.stdout).unwrap();
    assert!(table.contains("begin\t5\t2\t2\t3\t5"), "{}", table);

    let bad = Command::new(bin)
        .args(["cube", dir.path().to_str().unwrap(), "--axis", "time-d/nowhere", "--measure", "frequency"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&bad.stderr).unwrap();
    assert_eq!(v["error"]["code"], "unknown-reference");
}
