//! Crash-safe replacement of a warehouse's document set.
//!
//! An apply writes every new document into `.xdw-staging/`, re-reads and
//! validates the staged set, then atomically creates the `COMMIT` marker.
//! Only after the marker exists are staged files renamed over the live ones.
//! [`recover`] runs on open: a staging directory with a marker is rolled
//! forward, one without is discarded. Either way the directory ends up
//! holding the complete old or the complete new warehouse.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use xdw::documents::read_warehouse_dir;
use xdw::validate_warehouse;

use crate::error::{ApiError, ApiResult};

pub const STAGING_DIR: &str = ".xdw-staging";
pub const COMMIT_MARKER: &str = "COMMIT";

/// Points of an apply at which a fault hook is consulted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// About to write a staged document; the hook may ask for a torn write.
    Stage(String),
    Validate,
    Commit,
    /// About to rename one staged document over the live one.
    Rename(String),
    Cleanup,
}

/// What the hook wants to happen at a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    Proceed,
    /// Stop here, as if the process died.
    Crash,
    /// Write only the first half of the staged document, then stop.
    TornWrite,
}

pub type FaultHook = dyn Fn(&Step) -> Fault + Send + Sync;

fn io_err(path: &Path, e: io::Error) -> ApiError {
    ApiError::from(xdw::Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn crashed(step: &Step) -> ApiError {
    ApiError::new(500, "io-error", format!("apply interrupted at {:?}", step))
}

fn write_synced(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    f.sync_all()
}

fn sync_dir(dir: &Path) {
    // Directory fsync is not available everywhere; best effort.
    if let Ok(d) = fs::File::open(dir) {
        let _ = d.sync_all();
    }
}

/// Replaces files in `dir` with `docs` (name, content). The staged set must
/// hold a valid warehouse; extra files such as the change log travel with it.
pub fn replace_documents(dir: &Path, docs: &[(String, String)], hook: Option<&FaultHook>) -> ApiResult<()> {
    let check = |step: Step| -> ApiResult<Fault> {
        match hook.map_or(Fault::Proceed, |h| h(&step)) {
            Fault::Crash => Err(crashed(&step)),
            f => Ok(f),
        }
    };
    let staging = dir.join(STAGING_DIR);
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| io_err(&staging, e))?;
    }
    fs::create_dir_all(&staging).map_err(|e| io_err(&staging, e))?;

    for (name, text) in docs {
        let path = staging.join(name);
        if check(Step::Stage(name.clone()))? == Fault::TornWrite {
            write_synced(&path, &text.as_bytes()[..text.len() / 2]).map_err(|e| io_err(&path, e))?;
            return Err(crashed(&Step::Stage(name.clone())));
        }
        write_synced(&path, text.as_bytes()).map_err(|e| io_err(&path, e))?;
    }

    check(Step::Validate)?;
    let staged = read_warehouse_dir(&staging)?;
    let report = validate_warehouse(&staged);
    if !report.is_valid() {
        fs::remove_dir_all(&staging).map_err(|e| io_err(&staging, e))?;
        return Err(ApiError::new(422, "invalid-argument", "staged warehouse does not validate").with_details(report));
    }

    check(Step::Commit)?;
    let names: Vec<&str> = docs.iter().map(|(n, _)| n.as_str()).collect();
    let tmp = staging.join(format!("{}.tmp", COMMIT_MARKER));
    let marker = staging.join(COMMIT_MARKER);
    write_synced(&tmp, names.join("\n").as_bytes()).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, &marker).map_err(|e| io_err(&marker, e))?;
    sync_dir(&staging);

    for name in &names {
        check(Step::Rename(name.to_string()))?;
        let from = staging.join(name);
        fs::rename(&from, dir.join(name)).map_err(|e| io_err(&from, e))?;
    }
    sync_dir(dir);

    check(Step::Cleanup)?;
    fs::remove_dir_all(&staging).map_err(|e| io_err(&staging, e))
}

/// Finishes or discards an interrupted apply. Returns whether anything was
/// rolled forward.
pub fn recover(dir: &Path) -> ApiResult<bool> {
    let staging = dir.join(STAGING_DIR);
    if !staging.is_dir() {
        return Ok(false);
    }
    let marker = staging.join(COMMIT_MARKER);
    let rolled = marker.is_file();
    if rolled {
        let names = fs::read_to_string(&marker).map_err(|e| io_err(&marker, e))?;
        for name in names.lines().filter(|l| !l.is_empty()) {
            let from = staging.join(name);
            // Already renamed before the interruption when missing.
            if from.is_file() {
                fs::rename(&from, dir.join(name)).map_err(|e| io_err(&from, e))?;
            }
        }
        sync_dir(dir);
    }
    fs::remove_dir_all(&staging).map_err(|e| io_err(&staging, e))?;
    Ok(rolled)
}
