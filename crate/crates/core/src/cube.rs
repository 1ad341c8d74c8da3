//! Data cubes and the XOLAP operators.
//!
//! Every cell keeps `(sum, count, min, max)` accumulators so that any
//! aggregate, AVG included, re-aggregates exactly on roll-up. Coordinates are
//! instance ids, one per visible axis, followed by one label per pushed axis.
//! A coordinate absent from [`Cube::cells`] is empty: no fact contributed.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Hierarchy, Warehouse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Aggregate {
    #[serde(alias = "sum")]
    Sum,
    #[serde(alias = "count")]
    Count,
    #[serde(alias = "avg")]
    Avg,
    #[serde(alias = "min")]
    Min,
    #[serde(alias = "max")]
    Max,
}

impl Aggregate {
    pub const ALL: [Aggregate; 5] = [
        Aggregate::Sum,
        Aggregate::Count,
        Aggregate::Avg,
        Aggregate::Min,
        Aggregate::Max,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Aggregate::Sum => "SUM",
            Aggregate::Count => "COUNT",
            Aggregate::Avg => "AVG",
            Aggregate::Min => "MIN",
            Aggregate::Max => "MAX",
        }
    }
}

impl std::str::FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SUM" => Ok(Aggregate::Sum),
            "COUNT" => Ok(Aggregate::Count),
            "AVG" => Ok(Aggregate::Avg),
            "MIN" => Ok(Aggregate::Min),
            "MAX" => Ok(Aggregate::Max),
            _ => Err(Error::Invalid(format!("unknown aggregate `{}`", s))),
        }
    }
}

/// Accumulators of one non-empty cell plus its presentation value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellValue {
    pub sum: f64,
    pub count: u64,
    pub min: f64,
    pub max: f64,
    pub value: f64,
}

impl CellValue {
    pub fn from_measure(v: f64, aggregate: Aggregate) -> Self {
        let mut c = CellValue {
            sum: v,
            count: 1,
            min: v,
            max: v,
            value: 0.0,
        };
        c.refresh(aggregate);
        c
    }

    fn add(&mut self, v: f64) {
        self.sum += v;
        self.count += 1;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    pub fn merge(&mut self, other: &CellValue) {
        self.sum += other.sum;
        self.count += other.count;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    pub fn refresh(&mut self, aggregate: Aggregate) {
        self.value = match aggregate {
            Aggregate::Sum => self.sum,
            Aggregate::Count => self.count as f64,
            Aggregate::Avg => self.sum / self.count as f64,
            Aggregate::Min => self.min,
            Aggregate::Max => self.max,
        };
    }
}

/// Requested `(dimension, level)` pair for a cube axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AxisSpec {
    #[serde(rename = "dim")]
    pub dim_id: String,
    #[serde(rename = "level")]
    pub level_id: String,
}

impl AxisSpec {
    pub fn new(dim_id: impl Into<String>, level_id: impl Into<String>) -> Self {
        AxisSpec {
            dim_id: dim_id.into(),
            level_id: level_id.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axis {
    #[serde(rename = "dim")]
    pub dim_id: String,
    #[serde(rename = "level")]
    pub level_id: String,
    pub members: Vec<String>,
    /// Created by a labeling pull; not backed by a warehouse dimension.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub synthetic: bool,
}

impl Axis {
    fn position(&self, member: &str) -> Option<usize> {
        self.members.iter().position(|m| m == member)
    }
}

/// Member restriction recorded by slice and dice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    #[serde(rename = "dim")]
    pub dim_id: String,
    #[serde(rename = "level")]
    pub level_id: String,
    pub members: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub fact_spec_id: String,
    pub predicates: Vec<Predicate>,
}

/// An axis folded into cell content by `push`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushedAxis {
    pub axis: Axis,
    /// Index among the visible axes at push time.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    pub axes: Vec<Axis>,
    pub pushed: Vec<PushedAxis>,
    pub measure_id: String,
    pub aggregate: Aggregate,
    pub cells: BTreeMap<Vec<String>, CellValue>,
    pub provenance: Provenance,
}

/// Source of labels for [`pull`].
pub enum PullSource<'a> {
    /// Restore the most recently pushed axis.
    Pushed,
    /// Turn cell values into members of a new axis named `dim_id`.
    /// When `replace` names an axis, that axis is consumed and the remaining
    /// axes must tell apart cells that receive the same label.
    Labeling {
        dim_id: String,
        replace: Option<String>,
        label: &'a dyn Fn(f64) -> String,
    },
}

struct AxisIndex<'h> {
    hierarchy: &'h Hierarchy,
    level: usize,
}

fn resolve_axes<'h>(
    warehouse: &Warehouse,
    hierarchies: &'h HashMap<String, Hierarchy>,
    axes: &[AxisSpec],
) -> Result<Vec<AxisIndex<'h>>> {
    let mut seen = HashSet::new();
    axes.iter()
        .map(|spec| {
            if !seen.insert(spec.dim_id.as_str()) {
                return Err(Error::Invalid(format!(
                    "dimension `{}` appears on two axes",
                    spec.dim_id
                )));
            }
            if !warehouse.model.facts.dimension_refs.contains(&spec.dim_id) {
                return Err(Error::unknown("fact dimension", &spec.dim_id));
            }
            let hierarchy = &hierarchies[&spec.dim_id];
            Ok(AxisIndex {
                hierarchy,
                level: hierarchy.level_index(&spec.level_id)?,
            })
        })
        .collect()
}

fn hierarchies_for<'a>(
    warehouse: &Warehouse,
    dims: impl Iterator<Item = &'a str>,
) -> Result<HashMap<String, Hierarchy>> {
    let mut out = HashMap::new();
    for d in dims {
        if !out.contains_key(d) {
            out.insert(d.to_string(), warehouse.hierarchy(d)?);
        }
    }
    Ok(out)
}

/// Finest-level members allowed by the predicates, per restricted dimension.
fn allowed_finest(
    hierarchies: &HashMap<String, Hierarchy>,
    predicates: &[Predicate],
) -> Result<HashMap<String, HashSet<String>>> {
    let mut out: HashMap<String, HashSet<String>> = HashMap::new();
    for p in predicates {
        let h = &hierarchies[&p.dim_id];
        let level = h.level_index(&p.level_id)?;
        let ok: HashSet<String> = h
            .members(0)
            .iter()
            .filter(|f| {
                h.ancestor(f, 0, level)
                    .map(|a| p.members.contains(a))
                    .unwrap_or(false)
            })
            .cloned()
            .collect();
        match out.get_mut(&p.dim_id) {
            Some(prev) => prev.retain(|f| ok.contains(f)),
            None => {
                out.insert(p.dim_id.clone(), ok);
            }
        }
    }
    Ok(out)
}

/// Indices of the facts that satisfy every predicate.
pub fn matching_facts(warehouse: &Warehouse, predicates: &[Predicate]) -> Result<Vec<usize>> {
    let hierarchies = hierarchies_for(warehouse, predicates.iter().map(|p| p.dim_id.as_str()))?;
    let allowed = allowed_finest(&hierarchies, predicates)?;
    Ok(warehouse
        .facts
        .rows
        .iter()
        .enumerate()
        .filter(|(_, row)| {
            allowed
                .iter()
                .all(|(dim, ok)| row.members.get(dim).is_some_and(|m| ok.contains(m)))
        })
        .map(|(i, _)| i)
        .collect())
}

fn build(
    warehouse: &Warehouse,
    axes: &[AxisSpec],
    measure_id: &str,
    aggregate: Aggregate,
    predicates: &[Predicate],
) -> Result<Cube> {
    if warehouse.model.facts.measure(measure_id).is_none() {
        return Err(Error::unknown("measure", measure_id));
    }
    for p in predicates {
        if !warehouse.model.facts.dimension_refs.contains(&p.dim_id) {
            return Err(Error::unknown("fact dimension", &p.dim_id));
        }
    }
    let hierarchies = hierarchies_for(
        warehouse,
        axes.iter()
            .map(|a| a.dim_id.as_str())
            .chain(predicates.iter().map(|p| p.dim_id.as_str())),
    )?;
    let resolved = resolve_axes(warehouse, &hierarchies, axes)?;
    let allowed = allowed_finest(&hierarchies, predicates)?;

    let mut out_axes = Vec::with_capacity(axes.len());
    let mut lookups: Vec<HashMap<&str, &str>> = Vec::with_capacity(axes.len());
    for (spec, ax) in axes.iter().zip(&resolved) {
        let lookup = ax.hierarchy.finest_to(ax.level);
        let members: Vec<String> = match allowed.get(&spec.dim_id) {
            None => ax.hierarchy.members(ax.level).to_vec(),
            Some(ok) => {
                let reached: HashSet<&str> = ok
                    .iter()
                    .filter_map(|f| lookup.get(f.as_str()).copied())
                    .collect();
                ax.hierarchy
                    .members(ax.level)
                    .iter()
                    .filter(|m| reached.contains(m.as_str()))
                    .cloned()
                    .collect()
            }
        };
        out_axes.push(Axis {
            dim_id: spec.dim_id.clone(),
            level_id: spec.level_id.clone(),
            members,
            synthetic: false,
        });
        lookups.push(lookup);
    }

    let mut cells: BTreeMap<Vec<String>, CellValue> = BTreeMap::new();
    'rows: for (n, row) in warehouse.facts.rows.iter().enumerate() {
        for (dim, ok) in &allowed {
            match row.members.get(dim) {
                Some(m) if ok.contains(m) => {}
                _ => continue 'rows,
            }
        }
        let mut coord = Vec::with_capacity(axes.len());
        for (spec, lookup) in axes.iter().zip(&lookups) {
            let finest = row.members.get(&spec.dim_id).ok_or_else(|| {
                Error::Invalid(format!("fact {} has no member for `{}`", n, spec.dim_id))
            })?;
            let member = lookup.get(finest.as_str()).ok_or_else(|| {
                Error::Invalid(format!(
                    "fact {}: `{}` does not roll up to `{}`",
                    n, finest, spec.level_id
                ))
            })?;
            coord.push(member.to_string());
        }
        let v = *row.measures.get(measure_id).ok_or_else(|| {
            Error::Invalid(format!("fact {} has no value for `{}`", n, measure_id))
        })?;
        cells
            .entry(coord)
            .and_modify(|c| c.add(v))
            .or_insert_with(|| CellValue::from_measure(v, aggregate));
    }
    for c in cells.values_mut() {
        c.refresh(aggregate);
    }
    Ok(Cube {
        axes: out_axes,
        pushed: Vec::new(),
        measure_id: measure_id.to_string(),
        aggregate,
        cells,
        provenance: Provenance {
            fact_spec_id: warehouse.facts.fact_spec_id.clone(),
            predicates: predicates.to_vec(),
        },
    })
}

/// The `cube` operator: aggregates the facts along the requested axes.
///
/// Dimensions not on any axis are aggregated over entirely.
pub fn build_cube(
    warehouse: &Warehouse,
    axes: &[AxisSpec],
    measure_id: &str,
    aggregate: Aggregate,
) -> Result<Cube> {
    build(warehouse, axes, measure_id, aggregate, &[])
}

/// Like [`build_cube`] with slice/dice predicates applied up front.
pub fn build_cube_filtered(
    warehouse: &Warehouse,
    axes: &[AxisSpec],
    measure_id: &str,
    aggregate: Aggregate,
    predicates: &[Predicate],
) -> Result<Cube> {
    build(warehouse, axes, measure_id, aggregate, predicates)
}

impl Cube {
    pub fn axis_index(&self, dim_id: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.dim_id == dim_id)
            .ok_or_else(|| Error::NotAnAxis(dim_id.to_string()))
    }

    pub fn axis(&self, dim_id: &str) -> Option<&Axis> {
        self.axes.iter().find(|a| a.dim_id == dim_id)
    }

    pub fn cell(&self, coordinate: &[&str]) -> Option<&CellValue> {
        let key: Vec<String> = coordinate.iter().map(|s| s.to_string()).collect();
        self.cells.get(&key)
    }

    pub fn value(&self, coordinate: &[&str]) -> Option<f64> {
        self.cell(coordinate).map(|c| c.value)
    }

    /// Merge of every cell's accumulators.
    pub fn total(&self) -> Option<CellValue> {
        let mut it = self.cells.values();
        let mut acc = *it.next()?;
        for c in it {
            acc.merge(c);
        }
        acc.refresh(self.aggregate);
        Some(acc)
    }

    /// Non-empty cells in presentation order (axis member order, then
    /// pushed-axis member order).
    pub fn ordered_cells(&self) -> Vec<(&Vec<String>, &CellValue)> {
        let positions: Vec<HashMap<&str, usize>> = self
            .axes
            .iter()
            .chain(self.pushed.iter().map(|p| &p.axis))
            .map(|a| {
                a.members
                    .iter()
                    .enumerate()
                    .map(|(i, m)| (m.as_str(), i))
                    .collect()
            })
            .collect();
        let mut cells: Vec<_> = self.cells.iter().collect();
        cells.sort_by_cached_key(|(k, _)| {
            k.iter()
                .zip(&positions)
                .map(|(m, pos)| pos.get(m.as_str()).copied().unwrap_or(usize::MAX))
                .collect::<Vec<_>>()
        });
        cells
    }

    fn has_synthetic(&self) -> bool {
        self.axes
            .iter()
            .chain(self.pushed.iter().map(|p| &p.axis))
            .any(|a| a.synthetic)
    }

    fn with_cells(&self, axes: Vec<Axis>, cells: BTreeMap<Vec<String>, CellValue>) -> Cube {
        Cube {
            axes,
            pushed: self.pushed.clone(),
            measure_id: self.measure_id.clone(),
            aggregate: self.aggregate,
            cells,
            provenance: self.provenance.clone(),
        }
    }
}

pub fn roll_up(cube: &Cube, warehouse: &Warehouse, dim_id: &str, target_level: &str) -> Result<Cube> {
    let i = cube.axis_index(dim_id)?;
    let axis = &cube.axes[i];
    if axis.synthetic {
        return Err(Error::Unsupported(format!("`{}` is a synthetic axis", dim_id)));
    }
    let h = warehouse.hierarchy(dim_id)?;
    let current = h.level_index(&axis.level_id)?;
    let target = h.level_index(target_level)?;
    if target <= current {
        return Err(Error::TargetNotCoarser {
            current: axis.level_id.clone(),
            target: target_level.to_string(),
        });
    }
    let mut mapping: HashMap<&str, &str> = HashMap::new();
    for m in &axis.members {
        let parent = h.ancestor(m, current, target).ok_or_else(|| {
            Error::Invalid(format!("`{}` does not roll up to `{}`", m, target_level))
        })?;
        mapping.insert(m.as_str(), parent);
    }
    let reached: HashSet<&str> = mapping.values().copied().collect();
    let members: Vec<String> = h
        .members(target)
        .iter()
        .filter(|m| reached.contains(m.as_str()))
        .cloned()
        .collect();
    let mut cells: BTreeMap<Vec<String>, CellValue> = BTreeMap::new();
    for (coord, cell) in &cube.cells {
        let mut key = coord.clone();
        key[i] = mapping[coord[i].as_str()].to_string();
        cells
            .entry(key)
            .and_modify(|c| c.merge(cell))
            .or_insert(*cell);
    }
    for c in cells.values_mut() {
        c.refresh(cube.aggregate);
    }
    let mut axes = cube.axes.clone();
    axes[i] = Axis {
        dim_id: dim_id.to_string(),
        level_id: target_level.to_string(),
        members,
        synthetic: false,
    };
    Ok(cube.with_cells(axes, cells))
}

/// Recomputes the cube from the facts at a finer level, reapplying every
/// recorded slice and dice predicate.
pub fn drill_down(cube: &Cube, warehouse: &Warehouse, dim_id: &str, target_level: &str) -> Result<Cube> {
    let i = cube.axis_index(dim_id)?;
    if cube.has_synthetic() {
        return Err(Error::Unsupported(
            "cube has a synthetic axis and cannot be recomputed from facts".into(),
        ));
    }
    let h = warehouse.hierarchy(dim_id)?;
    let current = h.level_index(&cube.axes[i].level_id)?;
    let target = h.level_index(target_level)?;
    if target >= current {
        return Err(Error::TargetNotFiner {
            current: cube.axes[i].level_id.clone(),
            target: target_level.to_string(),
        });
    }
    let specs: Vec<AxisSpec> = cube
        .axes
        .iter()
        .chain(cube.pushed.iter().map(|p| &p.axis))
        .enumerate()
        .map(|(k, a)| {
            let level = if k == i { target_level } else { a.level_id.as_str() };
            AxisSpec::new(a.dim_id.clone(), level)
        })
        .collect();
    let mut rebuilt = build(
        warehouse,
        &specs,
        &cube.measure_id,
        cube.aggregate,
        &cube.provenance.predicates,
    )?;
    // Keep the presentation order of untouched axes.
    let old: Vec<&Axis> = cube.axes.iter().chain(cube.pushed.iter().map(|p| &p.axis)).collect();
    for (k, axis) in rebuilt.axes.iter_mut().enumerate() {
        if k == i {
            continue;
        }
        let same: BTreeSet<&String> = axis.members.iter().collect();
        let prev: BTreeSet<&String> = old[k].members.iter().collect();
        if same == prev {
            axis.members = old[k].members.clone();
        }
    }
    let visible = cube.axes.len();
    let folded = rebuilt.axes.split_off(visible);
    rebuilt.pushed = cube
        .pushed
        .iter()
        .zip(folded)
        .map(|(p, axis)| PushedAxis {
            axis,
            position: p.position,
        })
        .collect();
    Ok(rebuilt)
}

pub fn slice(cube: &Cube, dim_id: &str, member: &str) -> Result<Cube> {
    let i = cube.axis_index(dim_id)?;
    let axis = &cube.axes[i];
    if axis.position(member).is_none() {
        return Err(Error::unknown("member", format!("{}={}", dim_id, member)));
    }
    let cells = cube
        .cells
        .iter()
        .filter(|(k, _)| k[i] == member)
        .map(|(k, v)| {
            let mut key = k.clone();
            key.remove(i);
            (key, *v)
        })
        .collect();
    let mut axes = cube.axes.clone();
    let removed = axes.remove(i);
    let mut out = cube.with_cells(axes, cells);
    if !removed.synthetic {
        out.provenance.predicates.push(Predicate {
            dim_id: removed.dim_id,
            level_id: removed.level_id,
            members: BTreeSet::from([member.to_string()]),
        });
    }
    Ok(out)
}

pub fn dice(cube: &Cube, predicates: &BTreeMap<String, Vec<String>>) -> Result<Cube> {
    let mut axes = cube.axes.clone();
    let mut keep: Vec<Option<HashSet<&str>>> = vec![None; axes.len()];
    let mut recorded = Vec::new();
    for (dim, members) in predicates {
        let i = cube.axis_index(dim)?;
        if members.is_empty() {
            return Err(Error::Invalid(format!("empty member set for `{}`", dim)));
        }
        for m in members {
            if axes[i].position(m).is_none() {
                return Err(Error::unknown("member", format!("{}={}", dim, m)));
            }
        }
        let set: HashSet<&str> = members.iter().map(String::as_str).collect();
        axes[i].members.retain(|m| set.contains(m.as_str()));
        if !axes[i].synthetic {
            recorded.push(Predicate {
                dim_id: dim.clone(),
                level_id: axes[i].level_id.clone(),
                members: members.iter().cloned().collect(),
            });
        }
        keep[i] = Some(set);
    }
    let cells = cube
        .cells
        .iter()
        .filter(|(k, _)| {
            keep.iter()
                .zip(k.iter())
                .all(|(s, m)| s.as_ref().map_or(true, |s| s.contains(m.as_str())))
        })
        .map(|(k, v)| (k.clone(), *v))
        .collect();
    let mut out = cube.with_cells(axes, cells);
    out.provenance.predicates.extend(recorded);
    Ok(out)
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::NotAPermutation(format!("{:?} for {} axes", perm, n)));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::NotAPermutation(format!("{:?} for {} axes", perm, n)));
        }
    }
    Ok(())
}

/// Reorders axes: new axis `k` is old axis `permutation[k]`.
pub fn rotate(cube: &Cube, permutation: &[usize]) -> Result<Cube> {
    let n = cube.axes.len();
    check_permutation(permutation, n)?;
    let axes = permutation.iter().map(|&p| cube.axes[p].clone()).collect();
    let cells = cube
        .cells
        .iter()
        .map(|(k, v)| {
            let mut key: Vec<String> = permutation.iter().map(|&p| k[p].clone()).collect();
            key.extend_from_slice(&k[n..]);
            (key, *v)
        })
        .collect();
    Ok(cube.with_cells(axes, cells))
}

/// Changes the presentation order of one axis's members.
pub fn switch(cube: &Cube, dim_id: &str, order: &[String]) -> Result<Cube> {
    let i = cube.axis_index(dim_id)?;
    let current: BTreeSet<&String> = cube.axes[i].members.iter().collect();
    let proposed: BTreeSet<&String> = order.iter().collect();
    if order.len() != cube.axes[i].members.len() || current != proposed {
        return Err(Error::NotAPermutation(format!(
            "[{}] is not a reordering of the members of `{}`",
            order.join(", "),
            dim_id
        )));
    }
    let mut out = cube.clone();
    out.axes[i].members = order.to_vec();
    Ok(out)
}

/// Folds an axis into cell content: each cell becomes `(member, value)`.
pub fn push(cube: &Cube, dim_id: &str) -> Result<Cube> {
    let i = cube.axis_index(dim_id)?;
    let mut axes = cube.axes.clone();
    let axis = axes.remove(i);
    let cells = cube
        .cells
        .iter()
        .map(|(k, v)| {
            let mut key = k.clone();
            let label = key.remove(i);
            key.push(label);
            (key, *v)
        })
        .collect();
    let mut out = cube.with_cells(axes, cells);
    out.pushed.push(PushedAxis { axis, position: i });
    Ok(out)
}

pub fn pull(cube: &Cube, source: PullSource<'_>) -> Result<Cube> {
    match source {
        PullSource::Pushed => {
            let mut out = cube.clone();
            let pushed = out.pushed.pop().ok_or(Error::NothingToPull)?;
            let visible = cube.axes.len();
            let at = pushed.position.min(visible);
            let label_at = visible + out.pushed.len();
            out.cells = cube
                .cells
                .iter()
                .map(|(k, v)| {
                    let mut key = k.clone();
                    let label = key.remove(label_at);
                    key.insert(at, label);
                    (key, *v)
                })
                .collect();
            out.axes.insert(at, pushed.axis);
            Ok(out)
        }
        PullSource::Labeling {
            dim_id,
            replace,
            label,
        } => {
            if cube.axes.iter().any(|a| a.dim_id == dim_id) {
                return Err(Error::Invalid(format!("axis `{}` already exists", dim_id)));
            }
            let replaced = replace.as_deref().map(|d| cube.axis_index(d)).transpose()?;
            let mut axes = cube.axes.clone();
            let at = match replaced {
                Some(r) => {
                    axes.remove(r);
                    r
                }
                None => axes.len(),
            };
            let mut members: Vec<String> = Vec::new();
            let mut cells = BTreeMap::new();
            for (k, v) in cube.ordered_cells() {
                let l = label(v.value);
                if !members.contains(&l) {
                    members.push(l.clone());
                }
                let mut key = k.clone();
                if let Some(r) = replaced {
                    key.remove(r);
                }
                key.insert(at, l.clone());
                if cells.insert(key.clone(), *v).is_some() {
                    key.remove(at);
                    return Err(Error::LabelCollision {
                        label: l,
                        coordinate: key.join(", "),
                    });
                }
            }
            axes.insert(
                at,
                Axis {
                    dim_id: dim_id.clone(),
                    level_id: dim_id,
                    members,
                    synthetic: true,
                },
            );
            Ok(cube.with_cells(axes, cells))
        }
    }
}

/// JSON rendering of a cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeView {
    pub axes: Vec<Axis>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pushed: Vec<PushedAxis>,
    pub measure: String,
    pub aggregate: Aggregate,
    pub provenance: Provenance,
    pub cell_count: usize,
    pub cells: Vec<CellView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellView {
    pub coordinate: Vec<String>,
    pub sum: f64,
    pub count: u64,
    pub min: f64,
    pub max: f64,
    pub value: f64,
}

impl Cube {
    /// Renders cells `offset..offset + limit` in presentation order.
    pub fn view_page(&self, offset: usize, limit: usize) -> CubeView {
        let cells = self
            .ordered_cells()
            .into_iter()
            .skip(offset)
            .take(limit)
            .map(|(k, c)| CellView {
                coordinate: k.clone(),
                sum: c.sum,
                count: c.count,
                min: c.min,
                max: c.max,
                value: c.value,
            })
            .collect();
        CubeView {
            axes: self.axes.clone(),
            pushed: self.pushed.clone(),
            measure: self.measure_id.clone(),
            aggregate: self.aggregate,
            provenance: self.provenance.clone(),
            cell_count: self.cells.len(),
            cells,
        }
    }

    pub fn view(&self) -> CubeView {
        self.view_page(0, usize::MAX)
    }

    /// Tab-separated export: a `#` header, then one line per non-empty cell
    /// holding the coordinate ids, `sum count min max`, and the value.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let axes: Vec<String> = self
            .axes
            .iter()
            .map(|a| format!("{}/{}", a.dim_id, a.level_id))
            .chain(self.pushed.iter().map(|p| format!("{}/{}*", p.axis.dim_id, p.axis.level_id)))
            .collect();
        let _ = writeln!(
            out,
            "# measure={} aggregate={} axes={}",
            self.measure_id,
            self.aggregate.as_str(),
            axes.join(",")
        );
        let mut header: Vec<&str> = self.axes.iter().map(|a| a.dim_id.as_str()).collect();
        header.extend(self.pushed.iter().map(|p| p.axis.dim_id.as_str()));
        header.extend(["sum", "count", "min", "max", "value"]);
        let _ = writeln!(out, "{}", header.join("\t"));
        for (k, c) in self.ordered_cells() {
            for id in k {
                out.push_str(id);
                out.push('\t');
            }
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", c.sum, c.count, c.min, c.max, c.value);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_accumulators_re_aggregate() {
        let mut a = CellValue::from_measure(2.0, Aggregate::Avg);
        a.add(3.0);
        let b = CellValue::from_measure(4.0, Aggregate::Avg);
        a.merge(&b);
        a.refresh(Aggregate::Avg);
        assert_eq!(a.count, 3);
        assert_eq!(a.value, 3.0);
        assert_eq!((a.min, a.max), (2.0, 4.0));
    }

    #[test]
    fn permutation_check() {
        assert!(check_permutation(&[1, 0], 2).is_ok());
        assert!(check_permutation(&[0, 0], 2).is_err());
        assert!(check_permutation(&[0], 2).is_err());
        assert!(check_permutation(&[2, 0], 2).is_err());
    }

    #[test]
    fn aggregate_names() {
        assert_eq!("avg".parse::<Aggregate>().unwrap(), Aggregate::Avg);
        assert!("median".parse::<Aggregate>().is_err());
        let json = serde_json::to_string(&Aggregate::Count).unwrap();
        assert_eq!(json, "\"COUNT\"");
        let back: Aggregate = serde_json::from_str("\"sum\"").unwrap();
        assert_eq!(back, Aggregate::Sum);
    }
}
