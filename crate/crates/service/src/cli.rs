//! Command-line verbs. Each one opens the warehouse directory, calls the
//! same [`Service`] handler as the matching HTTP route and prints its JSON.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use xdw::cube::{Aggregate, AxisSpec};
use xdw::mining::opac::{Linkage, OpacParams};
use xdw::mining::rules::{export_rules, MetaRule, RuleFormat, SupportAggregate};

use crate::api::*;
use crate::error::{ApiError, ApiResult};
use crate::session::Service;

#[derive(Debug, Parser)]
#[command(name = "xdw", version, about = "XML data warehouse: OLAP, hierarchy evolution and mining")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct CubeArgs {
    /// Warehouse directory holding dw-model.xml.
    pub dir: PathBuf,
    /// Axis as `dimension/level`; repeat for more axes.
    #[arg(long = "axis", value_parser = parse_axis)]
    pub axes: Vec<AxisSpec>,
    #[arg(long)]
    pub measure: String,
    #[arg(long, default_value = "sum")]
    pub aggregate: Aggregate,
}

impl CubeArgs {
    fn request(&self) -> CubeRequest {
        CubeRequest {
            axes: self.axes.clone(),
            measure: self.measure.clone(),
            aggregate: self.aggregate,
            filter: Vec::new(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Open and validate a warehouse, listing its dimensions.
    Load { dir: PathBuf },
    /// Build a cube.
    Cube {
        #[command(flatten)]
        cube: CubeArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Build a cube, then apply operators given as JSON, e.g.
    /// `{"op":"roll-up","dim":"time-d","level":"group"}`.
    Op {
        #[command(flatten)]
        cube: CubeArgs,
        #[arg(long = "op", value_parser = parse_op, required = true)]
        ops: Vec<OpRequest>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Validate and apply "if-then" aggregation rules (text, or JSON when the
    /// file ends in `.json`).
    Evolve {
        dir: PathBuf,
        rules: PathBuf,
        #[arg(long)]
        dry_run: bool,
    },
    /// Run a mining task.
    Mine {
        #[command(subcommand)]
        task: MineTask,
    },
    /// Copy the current documents (and change log) to another directory.
    Export { dir: PathBuf, out: PathBuf },
    /// Generate a seeded demo warehouse.
    Fixture {
        name: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Static files (the web UI) served for non-API paths.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum MineTask {
    /// Cluster the members of one axis.
    Opac {
        #[command(flatten)]
        cube: CubeArgs,
        #[arg(long)]
        dim: String,
        #[arg(long, default_value = "ward")]
        linkage: Linkage,
        #[arg(long)]
        no_normalize: bool,
        #[arg(long)]
        descriptor_weight: Option<f64>,
        /// Cut into k clusters and print a ready-to-apply rule set.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        level: Option<String>,
        #[arg(long)]
        attribute: Option<String>,
    },
    /// Arrange a cube by MCA test-values.
    Mca {
        #[command(flatten)]
        cube: CubeArgs,
    },
    /// Mine inter-dimensional association rules.
    Rules {
        dir: PathBuf,
        #[arg(long = "antecedent", value_parser = parse_axis, required = true)]
        antecedent: Vec<AxisSpec>,
        #[arg(long = "consequent", value_parser = parse_axis, required = true)]
        consequent: Vec<AxisSpec>,
        #[arg(long)]
        measure: String,
        #[arg(long, default_value = "count")]
        support_aggregate: SupportAggregate,
        #[arg(long)]
        min_support: f64,
        #[arg(long)]
        min_confidence: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

fn parse_axis(s: &str) -> Result<AxisSpec, String> {
    match s.split_once('/') {
        Some((d, l)) if !d.is_empty() && !l.is_empty() => Ok(AxisSpec::new(d, l)),
        _ => Err(format!("expected dimension/level, got `{}`", s)),
    }
}

fn parse_op(s: &str) -> Result<OpRequest, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

fn json(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("responses serialize") + "\n"
}

fn open(dir: &PathBuf) -> ApiResult<Service> {
    Service::open(dir).map(|(s, _)| s)
}

fn render_cube(service: &Service, r: CubeResponse, format: Format) -> ApiResult<String> {
    match format {
        Format::Json => Ok(json(&r)),
        Format::Table => service.cube_table(&r.id),
    }
}

fn read_rules(path: &PathBuf, dry_run: bool) -> ApiResult<RulesRequest> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ApiError::from(xdw::Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    })?;
    let mut req = RulesRequest {
        dry_run,
        ..RulesRequest::default()
    };
    if path.extension().is_some_and(|e| e == "json") {
        req.rules = Some(serde_json::from_str(&text).map_err(|e| ApiError::bad_request(e.to_string()))?);
    } else {
        req.text = Some(text);
    }
    Ok(req)
}

/// Executes one command and returns what it prints.
pub fn run(cli: Cli) -> ApiResult<String> {
    match cli.command {
        Command::Load { dir } => Service::open(dir).map(|(_, report)| json(&report)),
        Command::Cube { cube, format } => {
            let s = open(&cube.dir)?;
            let r = s.create_cube(&cube.request())?;
            render_cube(&s, r, format)
        }
        Command::Op { cube, ops, format } => {
            let s = open(&cube.dir)?;
            let mut r = s.create_cube(&cube.request())?;
            for op in &ops {
                r = s.apply_op(&r.id, op)?;
            }
            render_cube(&s, r, format)
        }
        Command::Evolve { dir, rules, dry_run } => {
            let s = open(&dir)?;
            s.apply_rules(&read_rules(&rules, dry_run)?).map(|r| json(&r))
        }
        Command::Mine { task } => mine(task),
        Command::Export { dir, out } => open(&dir)?.export(&out).map(|names| json(&names)),
        Command::Fixture { name, seed, out } => {
            let w = xdw::fixtures::generate_fixture(&name, seed)?;
            xdw::documents::write_warehouse_dir(&w, &out)?;
            Service::open(out).map(|(_, report)| json(&report))
        }
        Command::Serve { dir, addr, assets } => {
            let s = Arc::new(open(&dir)?);
            let rt = tokio::runtime::Runtime::new().map_err(|e| ApiError::new(500, "io-error", e.to_string()))?;
            rt.block_on(crate::http::serve(s, &addr, assets))
                .map_err(|e| ApiError::new(500, "io-error", e.to_string()))?;
            Ok(String::new())
        }
    }
}

fn mine(task: MineTask) -> ApiResult<String> {
    match task {
        MineTask::Opac {
            cube,
            dim,
            linkage,
            no_normalize,
            descriptor_weight,
            k,
            level,
            attribute,
        } => {
            let s = open(&cube.dir)?;
            let req = OpacRequest {
                source: CubeSource::Inline(cube.request()),
                dim,
                params: OpacParams {
                    linkage,
                    normalize: !no_normalize,
                    descriptor_weight,
                },
                k,
                level,
                attribute,
                names: None,
            };
            s.mine_opac(&req).map(|r| json(&r))
        }
        MineTask::Mca { cube } => {
            let s = open(&cube.dir)?;
            s.mine_mca(&McaRequest {
                source: CubeSource::Inline(cube.request()),
            })
            .map(|r| json(&r))
        }
        MineTask::Rules {
            dir,
            antecedent,
            consequent,
            measure,
            support_aggregate,
            min_support,
            min_confidence,
            format,
        } => {
            let s = open(&dir)?;
            let req = RuleMiningRequest {
                meta: MetaRule {
                    context: Vec::new(),
                    antecedent,
                    consequent,
                    measure,
                    aggregate: support_aggregate,
                },
                min_support,
                min_confidence,
            };
            let mining = s.mine_rules(&req)?;
            Ok(match format {
                Format::Json => json(&mining),
                Format::Table => export_rules(&mining.rules, RuleFormat::Table),
            })
        }
    }
}
