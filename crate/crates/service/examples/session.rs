//! Drive a warehouse directory through the service handlers, as the HTTP
//! routes and CLI verbs do: build a cube, apply rules, watch it go stale.
//!
//! ```text
//! cargo run -p xdw-service --example session
//! ```

use std::path::Path;

use xdw_service::api::{CubeRequest, OpRequest, Page, RulesRequest};
use xdw_service::{ApiResult, Service};

fn main() -> ApiResult<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/examples/data");
    let dir = std::env::temp_dir().join("xdw-session");
    let _ = std::fs::remove_dir_all(&dir);
    let w = xdw::documents::read_warehouse_dir(&data.join("clapi"))?;
    xdw::documents::write_warehouse_dir(&w, &dir)?;

    let (service, report) = Service::open(&dir)?;
    println!("opened {} (version {}, {} facts)", dir.display(), report.version, report.facts);

    let cube = service.create_cube(&serde_json::from_str::<CubeRequest>(
        r#"{"axes": [{"dim": "time-d", "level": "location-in-transcription"}], "measure": "frequency"}"#,
    )
    .unwrap())?;
    println!("{} stale={} cells={}", cube.id, cube.stale, cube.cube.cell_count);

    let text = std::fs::read_to_string(data.join("location-groups.rules")).unwrap();
    let dry = service.apply_rules(&RulesRequest {
        text: Some(text.clone()),
        dry_run: true,
        ..RulesRequest::default()
    })?;
    println!("dry run: {} finding(s)", dry.report.findings.len());
    let applied = service.apply_rules(&RulesRequest {
        text: Some(text),
        ..RulesRequest::default()
    })?;
    println!("applied, now version {}", applied.version);

    let again = service.cube(&cube.id, Page::default())?;
    println!("{} stale={}", again.id, again.stale);

    let fresh = service.create_cube(&serde_json::from_str::<CubeRequest>(
        r#"{"axes": [{"dim": "time-d", "level": "location-in-transcription"}], "measure": "frequency"}"#,
    )
    .unwrap())?;
    let up = service.apply_op(
        &fresh.id,
        &OpRequest::RollUp {
            dim: "time-d".into(),
            level: "group-of-location-in-transcription".into(),
        },
    )?;
    print!("{}", service.cube_table(&up.id)?);

    for entry in service.log() {
        println!("log v{}: {} -> {}", entry.version, entry.summary.source_level, entry.summary.new_level);
    }
    Ok(())
}
