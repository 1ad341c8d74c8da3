//! Correspondence analysis through the Burt matrix with a cyclic Jacobi
//! eigen solver, test-values from the transition formula, and homogeneity by
//! pairwise cell enumeration.

use std::collections::{BTreeMap, HashMap};

use xdw::cube::Cube;
use xdw::Warehouse;

use crate::cube::member_at;

/// Eigenvalues (descending) and eigenvectors (columns of `vectors[k]`) of a
/// symmetric matrix.
pub fn jacobi(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let values = order.iter().map(|&k| a[k][k]).collect();
    let vectors = order.iter().map(|&k| (0..n).map(|i| v[i][k]).collect()).collect();
    (values, vectors)
}

/// Reference factorial analysis over the whole fact table.
#[derive(Debug, Clone)]
pub struct ReferenceMca {
    pub n: usize,
    pub q: usize,
    /// (dimension, member) of every active column.
    pub columns: Vec<(String, String)>,
    pub counts: Vec<usize>,
    pub indicator: Vec<Vec<u8>>,
    /// Non-trivial eigenvalues, descending, at most `J - Q`.
    pub eigenvalues: Vec<f64>,
    /// Member principal coordinates, `[axis][column]`.
    pub member_coords: Vec<Vec<f64>>,
    /// Fact coordinates, `[fact][axis]`.
    pub fact_coords: Vec<Vec<f64>>,
}

pub fn reference_mca(warehouse: &Warehouse, variables: &[(String, String)]) -> ReferenceMca {
    let n = warehouse.facts.rows.len();
    let q = variables.len();
    let mut columns = Vec::new();
    for (d, l) in variables {
        let data = warehouse.dimension_data(d).unwrap();
        for inst in &data.levels.iter().find(|x| &x.level_id == l).unwrap().instances {
            columns.push((d.clone(), inst.id.clone()));
        }
    }
    let mut indicator: Vec<Vec<u8>> = warehouse
        .facts
        .rows
        .iter()
        .map(|row| {
            columns
                .iter()
                .map(|(d, m)| {
                    let level = &variables.iter().find(|(vd, _)| vd == d).unwrap().1;
                    (member_at(warehouse, d, &row.members[d], level).as_deref() == Some(m.as_str())) as u8
                })
                .collect()
        })
        .collect();
    let all_counts: Vec<usize> = (0..columns.len())
        .map(|j| indicator.iter().map(|r| r[j] as usize).sum())
        .collect();
    let active: Vec<usize> = (0..columns.len()).filter(|&j| all_counts[j] > 0).collect();
    columns = active.iter().map(|&j| columns[j].clone()).collect();
    let counts: Vec<usize> = active.iter().map(|&j| all_counts[j]).collect();
    for row in indicator.iter_mut() {
        *row = active.iter().map(|&j| row[j]).collect();
    }
    let jn = columns.len();

    // (1/Q) D^-1/2 B D^-1/2 with B = Z'Z has the trivial eigenpair
    // (1, sqrt(c_j / nQ)); it is deflated so it cannot mix with a real
    // axis of eigenvalue 1.
    let nf = n as f64;
    let mut m = vec![vec![0.0; jn]; jn];
    for row in &indicator {
        for a in 0..jn {
            if row[a] == 0 {
                continue;
            }
            for b in 0..jn {
                if row[b] == 1 {
                    m[a][b] += 1.0;
                }
            }
        }
    }
    let trivial: Vec<f64> = counts.iter().map(|&c| (c as f64 / (nf * q as f64)).sqrt()).collect();
    for a in 0..jn {
        for b in 0..jn {
            m[a][b] /= q as f64 * ((counts[a] * counts[b]) as f64).sqrt();
            m[a][b] -= trivial[a] * trivial[b];
        }
    }
    let (values, vectors) = jacobi(m);
    let keep: Vec<usize> = (0..jn)
        .filter(|&k| values[k] > 1e-12)
        .take(jn - q)
        .collect();
    let eigenvalues: Vec<f64> = keep.iter().map(|&k| values[k]).collect();
    let mass: Vec<f64> = counts.iter().map(|&c| c as f64 / (nf * q as f64)).collect();
    let member_coords: Vec<Vec<f64>> = keep
        .iter()
        .map(|&k| {
            let mut v = vectors[k].clone();
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-9) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            v.iter()
                .zip(&mass)
                .map(|(x, c)| values[k].sqrt() * x / c.sqrt())
                .collect()
        })
        .collect();
    // Transition formula: a fact sits at the mean of its members divided by
    // sqrt(lambda).
    let fact_coords = indicator
        .iter()
        .map(|row| {
            member_coords
                .iter()
                .zip(&eigenvalues)
                .map(|(g, l)| {
                    let s: f64 = row.iter().zip(g).map(|(z, x)| *z as f64 * x).sum();
                    s / q as f64 / l.sqrt()
                })
                .collect()
        })
        .collect();
    ReferenceMca {
        n,
        q,
        columns,
        counts,
        indicator,
        eigenvalues,
        member_coords,
        fact_coords,
    }
}

impl ReferenceMca {
    /// Test-values from the definition, `None` when `n_j` is `n`.
    pub fn test_values(&self) -> BTreeMap<(String, String), Option<Vec<f64>>> {
        let nf = self.n as f64;
        let mut out = BTreeMap::new();
        for (j, col) in self.columns.iter().enumerate() {
            let nj = self.counts[j];
            let value = (nj < self.n).then(|| {
                (0..self.eigenvalues.len())
                    .map(|a| {
                        let mean = self
                            .indicator
                            .iter()
                            .zip(&self.fact_coords)
                            .filter(|(row, _)| row[j] == 1)
                            .map(|(_, f)| f[a])
                            .sum::<f64>()
                            / nj as f64;
                        let njf = nj as f64;
                        mean * (njf * (nf - 1.0) / (nf - njf)).sqrt() / self.eigenvalues[a].sqrt()
                    })
                    .collect()
            });
            out.insert(col.clone(), value);
        }
        out
    }

    /// Axes whose eigenvalue is separated from its neighbours, so their
    /// vectors are unique up to sign.
    pub fn separated_axes(&self) -> Vec<usize> {
        let l = &self.eigenvalues;
        (0..l.len())
            .filter(|&a| {
                (a == 0 || l[a - 1] - l[a] > 1e-7) && (a + 1 == l.len() || l[a] - l[a + 1] > 1e-7)
            })
            .collect()
    }
}

/// Homogeneity by enumerating every ordered pair of grid cells at distance
/// one along a single axis.
pub fn reference_homogeneity(cube: &Cube) -> f64 {
    let sizes: Vec<usize> = cube.axes.iter().map(|a| a.members.len()).collect();
    let mut grid: Vec<Vec<usize>> = vec![Vec::new()];
    for &s in &sizes {
        grid = grid
            .into_iter()
            .flat_map(|p| {
                (0..s).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    let value: HashMap<Vec<usize>, f64> = grid
        .iter()
        .filter_map(|pos| {
            let key: Vec<String> = pos
                .iter()
                .zip(&cube.axes)
                .map(|(i, a)| a.members[*i].clone())
                .collect();
            cube.cells.get(&key).map(|c| (pos.clone(), c.value))
        })
        .collect();
    if value.is_empty() {
        return 0.0;
    }
    let lo = value.values().copied().fold(f64::INFINITY, f64::min);
    let hi = value.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for c in &grid {
        let Some(vc) = value.get(c) else { continue };
        for d in &grid {
            let diff: Vec<usize> = (0..c.len()).filter(|&k| c[k] != d[k]).collect();
            if diff.len() != 1 || c[diff[0]].abs_diff(d[diff[0]]) != 1 {
                continue;
            }
            den += 1.0;
            if let Some(vd) = value.get(d) {
                num += if hi > lo { 1.0 - (vc - vd).abs() / (hi - lo) } else { 1.0 };
            }
        }
    }
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}
