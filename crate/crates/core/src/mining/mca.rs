//! Multiple correspondence analysis of the fact population, test-value cube
//! arrangement and the homogeneity score of a cube layout.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cube::{matching_facts, switch, AxisSpec, Cube, Predicate};
use crate::error::{Error, Result};
use crate::model::Warehouse;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorColumn {
    pub variable: usize,
    pub member: String,
}

/// The 0/1 fact-by-member table, stored sparsely: row `i` has a 1 in
/// column `rows[i][q]` of every variable block `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorMatrix {
    pub variables: Vec<AxisSpec>,
    /// Members of each variable in document order, variable by variable.
    pub columns: Vec<IndicatorColumn>,
    pub rows: Vec<Vec<usize>>,
    pub column_sums: Vec<usize>,
    /// Columns of members no fact carries.
    pub zero_columns: Vec<usize>,
}

impl IndicatorMatrix {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn q(&self) -> usize {
        self.variables.len()
    }

    pub fn j(&self) -> usize {
        self.columns.len()
    }

    pub fn dense(&self) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|r| {
                let mut row = vec![0u8; self.columns.len()];
                for &c in r {
                    row[c] = 1;
                }
                row
            })
            .collect()
    }
}

pub fn build_indicator_matrix(warehouse: &Warehouse, variables: &[AxisSpec]) -> Result<IndicatorMatrix> {
    build_indicator_matrix_filtered(warehouse, variables, &[])
}

/// Indicator matrix over the facts selected by `predicates`.
pub fn build_indicator_matrix_filtered(
    warehouse: &Warehouse,
    variables: &[AxisSpec],
    predicates: &[Predicate],
) -> Result<IndicatorMatrix> {
    if variables.is_empty() {
        return Err(Error::Invalid("no variables".into()));
    }
    let mut columns = Vec::new();
    let mut lookups = Vec::new();
    for (q, v) in variables.iter().enumerate() {
        if variables[..q].iter().any(|o| o.dim_id == v.dim_id) {
            return Err(Error::Invalid(format!("dimension `{}` used twice", v.dim_id)));
        }
        let h = warehouse.hierarchy(&v.dim_id)?;
        let level = h.level_index(&v.level_id)?;
        let offset = columns.len();
        let mut index = HashMap::new();
        for (k, m) in h.members(level).iter().enumerate() {
            index.insert(m.clone(), offset + k);
            columns.push(IndicatorColumn {
                variable: q,
                member: m.clone(),
            });
        }
        let finest_to: HashMap<String, String> = h
            .finest_to(level)
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        lookups.push((finest_to, index));
    }
    let selected = matching_facts(warehouse, predicates)?;
    let mut rows = Vec::with_capacity(selected.len());
    let mut column_sums = vec![0usize; columns.len()];
    for i in selected {
        let fact = &warehouse.facts.rows[i];
        let mut row = Vec::with_capacity(variables.len());
        for (v, (finest_to, index)) in variables.iter().zip(&lookups) {
            let col = fact
                .members
                .get(&v.dim_id)
                .and_then(|m| finest_to.get(m))
                .and_then(|m| index.get(m))
                .ok_or_else(|| {
                    Error::Invalid(format!(
                        "fact {} does not roll up to `{}/{}`",
                        i + 1,
                        v.dim_id,
                        v.level_id
                    ))
                })?;
            column_sums[*col] += 1;
            row.push(*col);
        }
        rows.push(row);
    }
    let zero_columns = (0..columns.len()).filter(|&c| column_sums[c] == 0).collect();
    Ok(IndicatorMatrix {
        variables: variables.to_vec(),
        columns,
        rows,
        column_sums,
        zero_columns,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberCoordinates {
    pub dim: String,
    pub level: String,
    pub member: String,
    /// Principal coordinates, one per retained axis. Empty for members no
    /// fact carries.
    pub coordinates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorialResult {
    pub eigenvalues: Vec<f64>,
    pub members: Vec<MemberCoordinates>,
    /// Row principal coordinates, one row per fact.
    pub fact_coordinates: Vec<Vec<f64>>,
}

impl FactorialResult {
    pub fn total_inertia(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn explained(&self) -> Vec<f64> {
        let t = self.total_inertia();
        self.eigenvalues.iter().map(|l| if t > 0.0 { l / t } else { 0.0 }).collect()
    }
}

const EIGEN_EPS: f64 = 1e-12;

/// Correspondence analysis of the indicator matrix through the eigen
/// decomposition of `S^T S`, `S` being the standardized residual matrix.
///
/// Columns with zero frequency are left out. Each eigenvector is signed so
/// that its first nonzero entry is positive.
pub fn mca_axes(indicator: &IndicatorMatrix) -> Result<FactorialResult> {
    let n = indicator.n();
    let q = indicator.q();
    if n < 2 {
        return Err(Error::Degenerate(format!("{} facts, at least 2 needed", n)));
    }
    for (v, spec) in indicator.variables.iter().enumerate() {
        let occupied = indicator
            .columns
            .iter()
            .zip(&indicator.column_sums)
            .filter(|(c, s)| c.variable == v && **s > 0)
            .count();
        if occupied < 2 {
            return Err(Error::Degenerate(format!(
                "variable `{}/{}` has {} occupied member(s)",
                spec.dim_id, spec.level_id, occupied
            )));
        }
    }
    let active: Vec<usize> = (0..indicator.j()).filter(|&c| indicator.column_sums[c] > 0).collect();
    let mut position = vec![usize::MAX; indicator.j()];
    for (k, &c) in active.iter().enumerate() {
        position[c] = k;
    }
    let jp = active.len();
    let (nf, qf) = (n as f64, q as f64);
    let mass: Vec<f64> = active.iter().map(|&c| indicator.column_sums[c] as f64 / (nf * qf)).collect();
    let r = 1.0 / nf;
    // Row i of S: (z_ij / (nQ) - r c_j) / sqrt(r c_j).
    let base: Vec<f64> = mass.iter().map(|c| -r * c / (r * c).sqrt()).collect();
    let hit: Vec<f64> = mass.iter().map(|c| 1.0 / (nf * qf) / (r * c).sqrt()).collect();
    let s_row = |row: &[usize]| {
        let mut s = base.clone();
        for &c in row {
            let k = position[c];
            s[k] += hit[k];
        }
        s
    };
    let mut sts = DMatrix::<f64>::zeros(jp, jp);
    for row in &indicator.rows {
        let s = s_row(row);
        for a in 0..jp {
            if s[a] == 0.0 {
                continue;
            }
            for b in a..jp {
                sts[(a, b)] += s[a] * s[b];
            }
        }
    }
    for a in 0..jp {
        for b in 0..a {
            sts[(a, b)] = sts[(b, a)];
        }
    }
    let eig = SymmetricEigen::new(sts);
    let mut order: Vec<usize> = (0..jp).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&k| eig.eigenvalues[k] > EIGEN_EPS)
        .take(jp.saturating_sub(q))
        .collect();
    let eigenvalues: Vec<f64> = keep.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors: Vec<Vec<f64>> = keep
        .iter()
        .map(|&k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-9) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            v
        })
        .collect();

    let members = indicator
        .columns
        .iter()
        .enumerate()
        .map(|(c, col)| {
            let spec = &indicator.variables[col.variable];
            let coordinates = if indicator.column_sums[c] == 0 {
                Vec::new()
            } else {
                let k = position[c];
                vectors
                    .iter()
                    .zip(&eigenvalues)
                    .map(|(v, l)| l.sqrt() * v[k] / mass[k].sqrt())
                    .collect()
            };
            MemberCoordinates {
                dim: spec.dim_id.clone(),
                level: spec.level_id.clone(),
                member: col.member.clone(),
                coordinates,
            }
        })
        .collect();
    let scale = nf.sqrt();
    let fact_coordinates = indicator
        .rows
        .iter()
        .map(|row| {
            let s = s_row(row);
            vectors
                .iter()
                .map(|v| scale * s.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
                .collect()
        })
        .collect();
    Ok(FactorialResult {
        eigenvalues,
        members,
        fact_coordinates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestValue {
    pub dim: String,
    pub level: String,
    pub member: String,
    /// One value per factorial axis; `None` when the member is carried by
    /// no fact or by every fact.
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestValueTable {
    pub rows: Vec<TestValue>,
}

impl TestValueTable {
    pub fn get(&self, dim_id: &str, member: &str) -> Option<&TestValue> {
        self.rows.iter().find(|r| r.dim == dim_id && r.member == member)
    }
}

/// `t(j, a) = m(j, a) * sqrt(n_j (n - 1) / (n - n_j)) / sqrt(lambda_a)`,
/// `m(j, a)` being the mean axis-`a` coordinate of the facts carrying `j`.
pub fn test_values(result: &FactorialResult, indicator: &IndicatorMatrix) -> TestValueTable {
    let n = indicator.n();
    let axes = result.eigenvalues.len();
    let mut sums = vec![vec![0.0; axes]; indicator.j()];
    for (row, coords) in indicator.rows.iter().zip(&result.fact_coordinates) {
        for &c in row {
            for (s, x) in sums[c].iter_mut().zip(coords) {
                *s += x;
            }
        }
    }
    let rows = indicator
        .columns
        .iter()
        .enumerate()
        .map(|(c, col)| {
            let spec = &indicator.variables[col.variable];
            let nj = indicator.column_sums[c];
            let values = (nj > 0 && nj < n).then(|| {
                let (njf, nf) = (nj as f64, n as f64);
                let factor = (njf * (nf - 1.0) / (nf - njf)).sqrt();
                sums[c]
                    .iter()
                    .zip(&result.eigenvalues)
                    .map(|(s, l)| s / njf * factor / l.sqrt())
                    .collect()
            });
            TestValue {
                dim: spec.dim_id.clone(),
                level: spec.level_id.clone(),
                member: col.member.clone(),
                values,
            }
        })
        .collect();
    TestValueTable { rows }
}

/// Member order of one axis: test-value on axis 1 descending, then axis 2,
/// then member id; untestable members last by id.
pub fn test_value_order(members: &[String], dim_id: &str, table: &TestValueTable) -> Vec<String> {
    let mut keyed: Vec<(Option<&Vec<f64>>, &String)> = members
        .iter()
        .map(|m| (table.get(dim_id, m).and_then(|r| r.values.as_ref()), m))
        .collect();
    keyed.sort_by(|(ta, ma), (tb, mb)| match (ta, tb) {
        (Some(a), Some(b)) => {
            let axis = |v: &Vec<f64>, k: usize| v.get(k).copied().unwrap_or(0.0);
            axis(b, 0)
                .total_cmp(&axis(a, 0))
                .then(axis(b, 1).total_cmp(&axis(a, 1)))
                .then(ma.cmp(mb))
        }
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => ma.cmp(mb),
    });
    keyed.into_iter().map(|(_, m)| m.clone()).collect()
}

/// Reorders every axis by test-values. Only member orders change.
pub fn arrange_cube(cube: &Cube, table: &TestValueTable) -> Result<Cube> {
    let mut out = cube.clone();
    for axis in &cube.axes {
        let order = test_value_order(&axis.members, &axis.dim_id, table);
        out = switch(&out, &axis.dim_id, &order)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityScore {
    pub value: f64,
    pub cell_count: usize,
    pub full_cell_count: usize,
}

/// Average similarity between full cells and their grid neighbours (cells one
/// step away along one axis). A full/empty pair scores 0, two full cells
/// score `1 - |dv| / range`.
///
/// A cube without full cells scores 0; full cells without any neighbour
/// (a single-cell grid) score 1.
pub fn homogeneity(cube: &Cube) -> Result<HomogeneityScore> {
    if cube.axes.is_empty() {
        return Err(Error::Invalid("homogeneity needs at least one axis".into()));
    }
    if !cube.pushed.is_empty() {
        return Err(Error::Unsupported("homogeneity of a cube with pushed axes".into()));
    }
    let dims: Vec<usize> = cube.axes.iter().map(|a| a.members.len()).collect();
    let cell_count: usize = dims.iter().product();
    let positions: Vec<HashMap<&str, usize>> = cube
        .axes
        .iter()
        .map(|a| a.members.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect())
        .collect();
    let mut grid: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (key, cell) in &cube.cells {
        let pos: Option<Vec<usize>> = key
            .iter()
            .zip(&positions)
            .map(|(m, p)| p.get(m.as_str()).copied())
            .collect();
        if let Some(pos) = pos {
            grid.insert(pos, cell.value);
        }
    }
    let full = grid.len();
    if full == 0 {
        return Ok(HomogeneityScore {
            value: 0.0,
            cell_count,
            full_cell_count: 0,
        });
    }
    let (lo, hi) = grid
        .values()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let range = hi - lo;
    let mut num = 0.0;
    let mut den = 0usize;
    for (pos, v) in &grid {
        for (axis, &len) in dims.iter().enumerate() {
            for step in [-1isize, 1] {
                let p = pos[axis] as isize + step;
                if p < 0 || p >= len as isize {
                    continue;
                }
                den += 1;
                let mut other = pos.clone();
                other[axis] = p as usize;
                if let Some(w) = grid.get(&other) {
                    num += if range > 0.0 { 1.0 - (v - w).abs() / range } else { 1.0 };
                }
            }
        }
    }
    Ok(HomogeneityScore {
        value: if den == 0 { 1.0 } else { num / den as f64 },
        cell_count,
        full_cell_count: full,
    })
}

/// The complete arrangement pipeline for a cube: MCA over the cube's axes and
/// the facts behind it, test-values, arrangement and scores of both layouts.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    pub factorial: FactorialResult,
    pub test_values: TestValueTable,
    pub before: HomogeneityScore,
    pub after: HomogeneityScore,
    pub cube: Cube,
}

pub fn arrange(warehouse: &Warehouse, cube: &Cube) -> Result<Arrangement> {
    let variables: Vec<AxisSpec> = cube
        .axes
        .iter()
        .map(|a| AxisSpec {
            dim_id: a.dim_id.clone(),
            level_id: a.level_id.clone(),
        })
        .collect();
    if cube.axes.iter().any(|a| a.synthetic) {
        return Err(Error::Unsupported("arrangement of a cube with a labeled axis".into()));
    }
    let indicator = build_indicator_matrix_filtered(warehouse, &variables, &cube.provenance.predicates)?;
    let factorial = mca_axes(&indicator)?;
    let test_values = test_values(&factorial, &indicator);
    let arranged = arrange_cube(cube, &test_values)?;
    Ok(Arrangement {
        before: homogeneity(cube)?,
        after: homogeneity(&arranged)?,
        factorial,
        test_values,
        cube: arranged,
    })
}
