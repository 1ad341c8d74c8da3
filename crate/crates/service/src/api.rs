//! Request and response bodies of the HTTP API and the CLI.
//!
//! Field names are stable; `docs/API.md` lists them with examples.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use xdw::cube::{Aggregate, AxisSpec, CubeView, Predicate};
use xdw::evolution::{ChangeSummary, RuleReport, RuleSet};
use xdw::mining::mca::{FactorialResult, HomogeneityScore, TestValueTable};
use xdw::mining::opac::{OpacParams, OpacResult, Partition, PartitionQuality};
use xdw::mining::rules::MetaRule;
use xdw::{ValidationReport, WarehouseModel};

use crate::error::{ApiError, ApiResult};

/// Largest page of cells returned at once.
pub const MAX_PAGE: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSummary {
    pub id: String,
    pub path: String,
    pub levels: Vec<String>,
    /// Instance count per level, same order as `levels`.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenReport {
    pub version: u64,
    pub dimensions: Vec<DimensionSummary>,
    pub facts: usize,
    pub findings: ValidationReport,
    /// An interrupted apply was rolled forward while opening.
    pub recovered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub version: u64,
    pub model: WarehouseModel,
    pub dimensions: Vec<DimensionSummary>,
    pub facts: usize,
}

fn sum() -> Aggregate {
    Aggregate::Sum
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeRequest {
    pub axes: Vec<AxisSpec>,
    pub measure: String,
    #[serde(default = "sum")]
    pub aggregate: Aggregate,
    /// Slice/dice predicates applied while aggregating.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filter: Vec<Predicate>,
}

/// Threshold labeling for a pull: a value `v` gets
/// `labels[number of thresholds <= v]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labeling {
    pub dim: String,
    #[serde(default)]
    pub replace: Option<String>,
    pub thresholds: Vec<f64>,
    pub labels: Vec<String>,
}

impl Labeling {
    pub fn check(&self) -> ApiResult<()> {
        if self.labels.len() != self.thresholds.len() + 1 {
            return Err(ApiError::bad_request("labeling needs exactly one more label than thresholds"));
        }
        if self.thresholds.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(ApiError::bad_request("labeling thresholds must be strictly increasing"));
        }
        Ok(())
    }

    pub fn label(&self, v: f64) -> String {
        self.labels[self.thresholds.iter().filter(|t| **t <= v).count()].clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum OpRequest {
    RollUp { dim: String, level: String },
    DrillDown { dim: String, level: String },
    Slice { dim: String, member: String },
    Dice { members: BTreeMap<String, Vec<String>> },
    Rotate { permutation: Vec<usize> },
    Switch { dim: String, order: Vec<String> },
    Push { dim: String },
    /// Without `labeling`, restores the last pushed axis.
    Pull {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labeling: Option<Labeling>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeResponse {
    pub id: String,
    /// Warehouse version the cube was computed from.
    pub version: u64,
    /// An evolution was applied after the cube was built.
    pub stale: bool,
    pub offset: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next_offset: Option<usize>,
    pub cube: CubeView,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Page {
    #[serde(default)]
    pub offset: Option<usize>,
    #[serde(default)]
    pub limit: Option<usize>,
}

/// Rules as text or in structured form, exactly one of the two.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RulesRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<RuleSet>,
    #[serde(default)]
    pub dry_run: bool,
}

impl RulesRequest {
    pub fn rule_set(&self) -> ApiResult<RuleSet> {
        match (&self.text, &self.rules) {
            (Some(t), None) => Ok(xdw::evolution::parse_rules(t)?),
            (None, Some(r)) => Ok(r.clone()),
            _ => Err(ApiError::bad_request("give exactly one of `text` and `rules`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResponse {
    pub applied: bool,
    pub version: u64,
    pub report: RuleReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<ChangeSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub version: u64,
    pub summary: ChangeSummary,
}

/// A stored cube by id, or the definition of a fresh one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CubeSource {
    Stored { cube: String },
    Inline(CubeRequest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpacRequest {
    #[serde(flatten)]
    pub source: CubeSource,
    /// Axis whose members are clustered.
    pub dim: String,
    #[serde(default)]
    pub params: OpacParams,
    /// Cut the dendrogram into `k` clusters and derive a rule set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpacCut {
    pub partition: Partition,
    pub quality: PartitionQuality,
    /// Rule set text ready for `/rules/apply`.
    pub rules: String,
    pub rule_set: RuleSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpacResponse {
    pub result: OpacResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cut: Option<OpacCut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McaRequest {
    #[serde(flatten)]
    pub source: CubeSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McaResponse {
    pub factorial: FactorialResult,
    pub explained: Vec<f64>,
    pub test_values: TestValueTable,
    pub before: HomogeneityScore,
    pub after: HomogeneityScore,
    /// The arranged cube, stored under a new id.
    pub arranged: CubeResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleMiningRequest {
    #[serde(flatten)]
    pub meta: MetaRule,
    pub min_support: f64,
    pub min_confidence: f64,
}
