//! Integrity checks over a whole warehouse. Findings are data, not errors.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::model::{DimensionData, DimensionSpec, Warehouse, WarehouseModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingKind {
    InvalidIdentifier,
    EmptyPath,
    DuplicateDimension,
    NoLevels,
    DuplicateLevel,
    NoAttributes,
    DuplicateAttribute,
    NoMeasures,
    NoDimensionRefs,
    DuplicateDimensionRef,
    UnknownDimensionRef,
    MissingDimensionData,
    LevelMismatch,
    DuplicateInstance,
    UndeclaredAttribute,
    AttributeTypeMismatch,
    MissingRollUp,
    DanglingRollUp,
    UnexpectedRollUp,
    SelfRollUp,
    UnexpectedDrillDown,
    DanglingDrillDown,
    AsymmetricHierarchyLink,
    FactSpecMismatch,
    MissingMeasureBinding,
    MissingDimensionBinding,
    DanglingFactReference,
}

impl FindingKind {
    pub fn describe(self) -> &'static str {
        match self {
            FindingKind::InvalidIdentifier => "invalid identifier",
            FindingKind::EmptyPath => "empty path",
            FindingKind::DuplicateDimension => "duplicate dimension",
            FindingKind::NoLevels => "dimension without levels",
            FindingKind::DuplicateLevel => "duplicate level",
            FindingKind::NoAttributes => "level without attributes",
            FindingKind::DuplicateAttribute => "duplicate attribute",
            FindingKind::NoMeasures => "fact spec without measures",
            FindingKind::NoDimensionRefs => "fact spec without dimension references",
            FindingKind::DuplicateDimensionRef => "duplicate dimension reference",
            FindingKind::UnknownDimensionRef => "unknown dimension reference",
            FindingKind::MissingDimensionData => "missing dimension data",
            FindingKind::LevelMismatch => "level mismatch",
            FindingKind::DuplicateInstance => "duplicate instance",
            FindingKind::UndeclaredAttribute => "undeclared attribute",
            FindingKind::AttributeTypeMismatch => "attribute type mismatch",
            FindingKind::MissingRollUp => "missing roll-up",
            FindingKind::DanglingRollUp => "dangling roll-up",
            FindingKind::UnexpectedRollUp => "unexpected roll-up",
            FindingKind::SelfRollUp => "self roll-up at coarsest level",
            FindingKind::UnexpectedDrillDown => "unexpected drill-down",
            FindingKind::DanglingDrillDown => "dangling drill-down",
            FindingKind::AsymmetricHierarchyLink => "asymmetric hierarchy link",
            FindingKind::FactSpecMismatch => "fact spec mismatch",
            FindingKind::MissingMeasureBinding => "missing measure binding",
            FindingKind::MissingDimensionBinding => "missing dimension binding",
            FindingKind::DanglingFactReference => "dangling fact reference",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    fn error(&mut self, kind: FindingKind, message: String) {
        self.findings.push(Finding {
            kind,
            severity: Severity::Error,
            message: format!("{}: {}", kind.describe(), message),
        });
    }

    fn warning(&mut self, kind: FindingKind, message: String) {
        self.findings.push(Finding {
            kind,
            severity: Severity::Warning,
            message: format!("{}: {}", kind.describe(), message),
        });
    }

    /// True when no error-severity finding is present.
    pub fn is_valid(&self) -> bool {
        self.findings.iter().all(|f| f.severity != Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn count(&self, kind: FindingKind) -> usize {
        self.findings.iter().filter(|f| f.kind == kind).count()
    }
}

fn valid_identifier(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(char::is_whitespace)
}

pub fn validate_model(model: &WarehouseModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_model(model, &mut report);
    report
}

fn check_model(model: &WarehouseModel, r: &mut ValidationReport) {
    let mut dim_ids = HashSet::new();
    for dim in &model.dimensions {
        if !valid_identifier(&dim.id) {
            r.error(FindingKind::InvalidIdentifier, format!("dimension `{}`", dim.id));
        }
        if !dim_ids.insert(dim.id.as_str()) {
            r.error(FindingKind::DuplicateDimension, format!("`{}`", dim.id));
        }
        if dim.path.trim().is_empty() {
            r.error(FindingKind::EmptyPath, format!("dimension `{}`", dim.id));
        }
        if dim.levels.is_empty() {
            r.error(FindingKind::NoLevels, format!("`{}`", dim.id));
        }
        let mut level_ids = HashSet::new();
        for level in &dim.levels {
            if !valid_identifier(&level.id) {
                r.error(FindingKind::InvalidIdentifier, format!("level `{}`", level.id));
            }
            if !level_ids.insert(level.id.as_str()) {
                r.error(FindingKind::DuplicateLevel, format!("`{}` in `{}`", level.id, dim.id));
            }
            if level.attributes.is_empty() {
                r.error(FindingKind::NoAttributes, format!("`{}/{}`", dim.id, level.id));
            }
            let mut names = HashSet::new();
            for a in &level.attributes {
                if !names.insert(a.name.as_str()) {
                    r.error(
                        FindingKind::DuplicateAttribute,
                        format!("`{}` on `{}/{}`", a.name, dim.id, level.id),
                    );
                }
            }
        }
    }
    let facts = &model.facts;
    if facts.path.trim().is_empty() {
        r.error(FindingKind::EmptyPath, format!("fact spec `{}`", facts.id));
    }
    if facts.measures.is_empty() {
        r.error(FindingKind::NoMeasures, format!("`{}`", facts.id));
    }
    if facts.dimension_refs.is_empty() {
        r.error(FindingKind::NoDimensionRefs, format!("`{}`", facts.id));
    }
    let mut refs = HashSet::new();
    for d in &facts.dimension_refs {
        if !refs.insert(d.as_str()) {
            r.error(FindingKind::DuplicateDimensionRef, format!("`{}`", d));
        }
        if model.dimension(d).is_none() {
            r.error(FindingKind::UnknownDimensionRef, format!("`{}`", d));
        }
    }
}

fn check_dimension(spec: &DimensionSpec, data: &DimensionData, r: &mut ValidationReport) {
    let declared: Vec<&str> = spec.levels.iter().map(|l| l.id.as_str()).collect();
    let present: Vec<&str> = data.levels.iter().map(|l| l.level_id.as_str()).collect();
    if declared != present {
        r.error(
            FindingKind::LevelMismatch,
            format!(
                "dimension `{}` declares [{}] but its data has [{}]",
                spec.id,
                declared.join(", "),
                present.join(", ")
            ),
        );
    }
    let count = spec.levels.len();
    // Per level: instance id -> instance.
    let mut index: Vec<HashMap<&str, &crate::model::Instance>> = Vec::with_capacity(count);
    for level_spec in &spec.levels {
        let mut map = HashMap::new();
        if let Some(level) = data.level(&level_spec.id) {
            for inst in &level.instances {
                if !valid_identifier(&inst.id) {
                    r.error(FindingKind::InvalidIdentifier, format!("instance `{}`", inst.id));
                }
                if map.insert(inst.id.as_str(), inst).is_some() {
                    r.error(
                        FindingKind::DuplicateInstance,
                        format!("`{}` in `{}/{}`", inst.id, spec.id, level_spec.id),
                    );
                }
                for (name, value) in &inst.attributes {
                    match level_spec.attribute(name) {
                        None => r.error(
                            FindingKind::UndeclaredAttribute,
                            format!("`{}` on instance `{}` of `{}/{}`", name, inst.id, spec.id, level_spec.id),
                        ),
                        Some(a) if !a.ty.accepts(value) => r.error(
                            FindingKind::AttributeTypeMismatch,
                            format!("`{}` = `{}` on instance `{}` is not a {}", name, value, inst.id, a.ty.as_str()),
                        ),
                        Some(_) => {}
                    }
                }
            }
        }
        index.push(map);
    }

    for (i, level_spec) in spec.levels.iter().enumerate() {
        let Some(level) = data.level(&level_spec.id) else {
            continue;
        };
        let coarsest = i + 1 == count;
        let finest = i == 0;
        for inst in &level.instances {
            let at = format!("instance `{}` of `{}/{}`", inst.id, spec.id, level_spec.id);
            // Roll-up side.
            match (&inst.roll_up, coarsest) {
                (Some(p), true) if *p == inst.id => r.warning(FindingKind::SelfRollUp, at.clone()),
                (Some(p), true) => r.error(FindingKind::UnexpectedRollUp, format!("{} names `{}`", at, p)),
                (None, false) => r.error(FindingKind::MissingRollUp, at.clone()),
                (Some(p), false) => {
                    let parents = &index[i + 1];
                    if !parents.contains_key(p.as_str()) {
                        r.error(FindingKind::DanglingRollUp, format!("{} names `{}`", at, p));
                    } else {
                        let listed_by: Vec<&str> = parents
                            .values()
                            .filter(|parent| parent.children().iter().any(|c| *c == inst.id))
                            .map(|parent| parent.id.as_str())
                            .collect();
                        if listed_by != [p.as_str()] {
                            r.error(
                                FindingKind::AsymmetricHierarchyLink,
                                format!(
                                    "{} rolls up to `{}` but is listed by [{}]",
                                    at,
                                    p,
                                    {
                                        let mut l = listed_by.clone();
                                        l.sort_unstable();
                                        l.join(", ")
                                    }
                                ),
                            );
                        }
                    }
                }
                (None, true) => {}
            }
            // Drill-down side.
            if let Some(children) = &inst.drill_down {
                if finest {
                    if !children.is_empty() {
                        r.error(FindingKind::UnexpectedDrillDown, at.clone());
                    }
                    continue;
                }
                let finer = &index[i - 1];
                for c in children {
                    if !finer.contains_key(c.as_str()) {
                        r.error(FindingKind::DanglingDrillDown, format!("{} lists `{}`", at, c));
                    }
                }
            }
        }
    }
}

/// Checks every structural invariant of a warehouse.
pub fn validate_warehouse(w: &Warehouse) -> ValidationReport {
    let mut r = ValidationReport::default();
    check_model(&w.model, &mut r);
    for spec in &w.model.dimensions {
        match w.dimension_data(&spec.id) {
            Some(data) => check_dimension(spec, data, &mut r),
            None => r.error(FindingKind::MissingDimensionData, format!("`{}`", spec.id)),
        }
    }
    let facts = &w.model.facts;
    if w.facts.fact_spec_id != facts.id {
        r.error(
            FindingKind::FactSpecMismatch,
            format!("table `{}` vs spec `{}`", w.facts.fact_spec_id, facts.id),
        );
    }
    let finest: HashMap<&str, HashSet<&str>> = w
        .model
        .dimensions
        .iter()
        .filter_map(|spec| {
            let data = w.dimension_data(&spec.id)?;
            let level = data.level(&spec.levels.first()?.id)?;
            Some((
                spec.id.as_str(),
                level.instances.iter().map(|i| i.id.as_str()).collect(),
            ))
        })
        .collect();
    for (n, row) in w.facts.rows.iter().enumerate() {
        for m in &facts.measures {
            if !row.measures.contains_key(&m.id) {
                r.error(FindingKind::MissingMeasureBinding, format!("fact {} lacks `{}`", n, m.id));
            }
        }
        for d in &facts.dimension_refs {
            match row.members.get(d) {
                None => r.error(FindingKind::MissingDimensionBinding, format!("fact {} lacks `{}`", n, d)),
                Some(inst) => {
                    if let Some(ids) = finest.get(d.as_str()) {
                        if !ids.contains(inst.as_str()) {
                            r.error(
                                FindingKind::DanglingFactReference,
                                format!("fact {} references `{}` in `{}`", n, inst, d),
                            );
                        }
                    }
                }
            }
        }
    }
    r
}
