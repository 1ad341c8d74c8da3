use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use xdw::cube::{
    build_cube_filtered, dice, drill_down, pull, push, roll_up, rotate, slice, switch, Cube, PullSource,
};
use xdw::documents::{read_warehouse_dir, serialize_warehouse, write_warehouse_dir};
use xdw::evolution::{apply_ruleset, validate_ruleset, RuleReport};
use xdw::mining::{mca, opac, rules};
use xdw::{validate_warehouse, Warehouse};

use crate::api::*;
use crate::error::{ApiError, ApiResult};
use crate::storage::{self, FaultHook};

/// Applied rule sets, one JSON entry per line, replaced atomically together
/// with the documents.
pub const LOG_FILE: &str = "xdw-log.jsonl";

struct StoredCube {
    cube: Arc<Cube>,
    warehouse: Arc<Warehouse>,
    version: u64,
}

struct State {
    warehouse: Arc<Warehouse>,
    version: u64,
    cubes: BTreeMap<String, StoredCube>,
    next_cube: u64,
    log: Vec<LogEntry>,
}

/// One open warehouse directory.
///
/// Readers take snapshots under a shared lock. An evolution holds the writer
/// slot for its whole duration and swaps the new state in only after the
/// documents are on disk; a second concurrent apply is rejected.
pub struct Service {
    dir: PathBuf,
    state: RwLock<State>,
    writer: Mutex<()>,
    fault: Option<Arc<FaultHook>>,
}

fn summarize(w: &Warehouse) -> Vec<DimensionSummary> {
    w.model
        .dimensions
        .iter()
        .map(|spec| DimensionSummary {
            id: spec.id.clone(),
            path: spec.path.clone(),
            levels: spec.levels.iter().map(|l| l.id.clone()).collect(),
            members: spec
                .levels
                .iter()
                .map(|l| {
                    w.dimension_data(&spec.id)
                        .and_then(|d| d.level(&l.id))
                        .map_or(0, |li| li.instances.len())
                })
                .collect(),
        })
        .collect()
}

fn read_log(dir: &Path) -> ApiResult<Vec<LogEntry>> {
    let path = dir.join(LOG_FILE);
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => {
            return Err(xdw::Error::Io {
                path: path.display().to_string(),
                source: e,
            }
            .into())
        }
    };
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                ApiError::new(400, "parse-error", format!("{}:{}: {}", LOG_FILE, i + 1, e))
            })
        })
        .collect()
}

fn render_log(log: &[LogEntry]) -> String {
    log.iter()
        .map(|e| serde_json::to_string(e).expect("log entries serialize") + "\n")
        .collect()
}

impl Service {
    /// Opens a warehouse directory, finishing any interrupted apply first.
    pub fn open(dir: impl Into<PathBuf>) -> ApiResult<(Service, OpenReport)> {
        let dir = dir.into();
        let recovered = storage::recover(&dir)?;
        let warehouse = read_warehouse_dir(&dir)?;
        let findings = validate_warehouse(&warehouse);
        let log = read_log(&dir)?;
        let report = OpenReport {
            version: log.len() as u64,
            dimensions: summarize(&warehouse),
            facts: warehouse.facts.rows.len(),
            findings,
            recovered,
        };
        let service = Service {
            dir,
            state: RwLock::new(State {
                warehouse: Arc::new(warehouse),
                version: report.version,
                cubes: BTreeMap::new(),
                next_cube: 1,
                log,
            }),
            writer: Mutex::new(()),
            fault: None,
        };
        Ok((service, report))
    }

    /// Installs a hook consulted at every step of an apply (testing aid).
    pub fn with_fault_hook(mut self, hook: Arc<FaultHook>) -> Self {
        self.fault = Some(hook);
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn snapshot(&self) -> (Arc<Warehouse>, u64) {
        let s = self.state.read().unwrap();
        (s.warehouse.clone(), s.version)
    }

    pub fn model(&self) -> ModelResponse {
        let (w, version) = self.snapshot();
        ModelResponse {
            version,
            model: w.model.clone(),
            dimensions: summarize(&w),
            facts: w.facts.rows.len(),
        }
    }

    fn store(&self, cube: Cube, warehouse: Arc<Warehouse>, version: u64) -> String {
        let mut s = self.state.write().unwrap();
        let id = format!("c{}", s.next_cube);
        s.next_cube += 1;
        s.cubes.insert(
            id.clone(),
            StoredCube {
                cube: Arc::new(cube),
                warehouse,
                version,
            },
        );
        id
    }

    fn stored(&self, id: &str) -> ApiResult<(Arc<Cube>, Arc<Warehouse>, u64)> {
        let s = self.state.read().unwrap();
        let c = s.cubes.get(id).ok_or_else(|| ApiError::not_found("cube", id))?;
        Ok((c.cube.clone(), c.warehouse.clone(), c.version))
    }

    pub fn cube(&self, id: &str, page: Page) -> ApiResult<CubeResponse> {
        let (cube, _, version) = self.stored(id)?;
        let current = self.state.read().unwrap().version;
        let offset = page.offset.unwrap_or(0);
        let limit = page.limit.unwrap_or(MAX_PAGE);
        if limit == 0 || limit > MAX_PAGE {
            return Err(ApiError::bad_request(format!("limit must be in 1..={}", MAX_PAGE)));
        }
        let view = cube.view_page(offset, limit);
        let end = offset.saturating_add(limit);
        Ok(CubeResponse {
            id: id.to_string(),
            version,
            stale: version < current,
            offset,
            next_offset: (end < view.cell_count).then_some(end),
            cube: view,
        })
    }

    /// Tab-separated export of a stored cube.
    pub fn cube_table(&self, id: &str) -> ApiResult<String> {
        Ok(self.stored(id)?.0.to_table())
    }

    pub fn create_cube(&self, req: &CubeRequest) -> ApiResult<CubeResponse> {
        let (w, version) = self.snapshot();
        let cube = build_cube_filtered(&w, &req.axes, &req.measure, req.aggregate, &req.filter)?;
        let id = self.store(cube, w, version);
        self.cube(&id, Page::default())
    }

    pub fn apply_op(&self, id: &str, op: &OpRequest) -> ApiResult<CubeResponse> {
        let (cube, w, version) = self.stored(id)?;
        let out = match op {
            OpRequest::RollUp { dim, level } => roll_up(&cube, &w, dim, level)?,
            OpRequest::DrillDown { dim, level } => drill_down(&cube, &w, dim, level)?,
            OpRequest::Slice { dim, member } => slice(&cube, dim, member)?,
            OpRequest::Dice { members } => dice(&cube, members)?,
            OpRequest::Rotate { permutation } => rotate(&cube, permutation)?,
            OpRequest::Switch { dim, order } => switch(&cube, dim, order)?,
            OpRequest::Push { dim } => push(&cube, dim)?,
            OpRequest::Pull { labeling: None } => pull(&cube, PullSource::Pushed)?,
            OpRequest::Pull { labeling: Some(l) } => {
                l.check()?;
                let label = |v: f64| l.label(v);
                pull(
                    &cube,
                    PullSource::Labeling {
                        dim_id: l.dim.clone(),
                        replace: l.replace.clone(),
                        label: &label,
                    },
                )?
            }
        };
        let new_id = self.store(out, w, version);
        self.cube(&new_id, Page::default())
    }

    fn resolve(&self, source: &CubeSource) -> ApiResult<(Arc<Cube>, Arc<Warehouse>, u64)> {
        match source {
            CubeSource::Stored { cube } => self.stored(cube),
            CubeSource::Inline(req) => {
                let (w, version) = self.snapshot();
                let cube = build_cube_filtered(&w, &req.axes, &req.measure, req.aggregate, &req.filter)?;
                Ok((Arc::new(cube), w, version))
            }
        }
    }

    pub fn validate_rules(&self, req: &RulesRequest) -> ApiResult<RuleReport> {
        let rules = req.rule_set()?;
        let (w, _) = self.snapshot();
        Ok(validate_ruleset(&rules, &w))
    }

    /// Validates and, unless `dry_run`, applies a rule set and persists the
    /// evolved documents.
    pub fn apply_rules(&self, req: &RulesRequest) -> ApiResult<EvolutionResponse> {
        let rules = req.rule_set()?;
        if req.dry_run {
            let (w, version) = self.snapshot();
            return Ok(EvolutionResponse {
                applied: false,
                version,
                report: validate_ruleset(&rules, &w),
                summary: None,
            });
        }
        let _writer = self.writer.try_lock().map_err(|_| ApiError::concurrent_writer())?;
        let (w, version) = self.snapshot();
        let report = validate_ruleset(&rules, &w);
        if !report.is_ok() {
            let msgs: Vec<&str> = report.findings.iter().map(|f| f.message.as_str()).collect();
            return Err(ApiError::new(422, "rules-rejected", msgs.join("; ")).with_details(&report));
        }
        let (evolved, summary) = apply_ruleset(&w, &rules)?;
        let entry = LogEntry {
            version: version + 1,
            summary: summary.clone(),
        };
        let mut log = self.state.read().unwrap().log.clone();
        log.push(entry.clone());

        let mut docs = serialize_warehouse(&evolved);
        docs.push((LOG_FILE.to_string(), render_log(&log)));
        storage::replace_documents(&self.dir, &docs, self.fault.as_deref())?;

        let mut s = self.state.write().unwrap();
        s.warehouse = Arc::new(evolved);
        s.version = entry.version;
        s.log.push(entry);
        Ok(EvolutionResponse {
            applied: true,
            version: s.version,
            report,
            summary: Some(summary),
        })
    }

    pub fn log(&self) -> Vec<LogEntry> {
        self.state.read().unwrap().log.clone()
    }

    pub fn mine_opac(&self, req: &OpacRequest) -> ApiResult<OpacResponse> {
        let (cube, w, _) = self.resolve(&req.source)?;
        let result = opac::opac(&cube, &req.dim, Some(&w), &req.params)?;
        let cut = match req.k {
            None => None,
            Some(k) => {
                let partition = opac::cut_partition(&result.dendrogram, k)?;
                let quality = opac::partition_quality(&partition, &result.vectors.vectors)?;
                let source_level = &cube.axis(&req.dim).expect("opac checked the axis").level_id;
                let level = req.level.clone().unwrap_or_else(|| format!("{}-cluster", source_level));
                let attribute = req.attribute.clone().unwrap_or_else(|| "cluster".to_string());
                let names = req
                    .names
                    .clone()
                    .unwrap_or_else(|| (1..=k).map(|i| format!("cluster-{}", i)).collect());
                let rule_set =
                    opac::partition_to_rules(&partition, &cube, &w, &req.dim, &level, &attribute, &names)?;
                Some(OpacCut {
                    partition,
                    quality,
                    rules: rule_set.to_string(),
                    rule_set,
                })
            }
        };
        Ok(OpacResponse { result, cut })
    }

    pub fn mine_mca(&self, req: &McaRequest) -> ApiResult<McaResponse> {
        let (cube, w, version) = self.resolve(&req.source)?;
        let a = mca::arrange(&w, &cube)?;
        let explained = a.factorial.explained();
        let id = self.store(a.cube, w, version);
        Ok(McaResponse {
            explained,
            factorial: a.factorial,
            test_values: a.test_values,
            before: a.before,
            after: a.after,
            arranged: self.cube(&id, Page::default())?,
        })
    }

    pub fn mine_rules(&self, req: &RuleMiningRequest) -> ApiResult<rules::RuleMining> {
        let (w, _) = self.snapshot();
        Ok(rules::mine_rules(&w, &req.meta, req.min_support, req.min_confidence)?)
    }

    /// Writes the current documents (and log) into another directory.
    pub fn export(&self, out: &Path) -> ApiResult<Vec<String>> {
        let (w, _) = self.snapshot();
        write_warehouse_dir(&w, out)?;
        let mut names: Vec<String> = serialize_warehouse(&w).into_iter().map(|(n, _)| n).collect();
        let log = self.log();
        if !log.is_empty() {
            let path = out.join(LOG_FILE);
            std::fs::write(&path, render_log(&log)).map_err(|e| xdw::Error::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            names.push(LOG_FILE.to_string());
        }
        Ok(names)
    }
}
