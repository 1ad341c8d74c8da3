//! Agglomeration by recomputing every cluster distance from its members at
//! every step, O(n^3) or worse.

use std::collections::BTreeSet;

use xdw::mining::opac::{Dendrogram, Linkage};

#[derive(Debug, Clone, PartialEq)]
pub struct SetMerge {
    pub left: BTreeSet<String>,
    pub right: BTreeSet<String>,
    pub height: f64,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn centroid(points: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let mut c = vec![0.0; points[0].len()];
    for &m in members {
        for (x, y) in c.iter_mut().zip(&points[m]) {
            *x += y;
        }
    }
    c.iter().map(|x| x / members.len() as f64).collect()
}

pub fn linkage_distance(points: &[Vec<f64>], a: &[usize], b: &[usize], linkage: Linkage) -> f64 {
    let pairs = || a.iter().flat_map(|&i| b.iter().map(move |&j| dist(&points[i], &points[j])));
    match linkage {
        Linkage::Single => pairs().fold(f64::INFINITY, f64::min),
        Linkage::Complete => pairs().fold(0.0, f64::max),
        Linkage::Average => pairs().sum::<f64>() / (a.len() * b.len()) as f64,
        Linkage::Ward => {
            let (na, nb) = (a.len() as f64, b.len() as f64);
            (2.0 * na * nb / (na + nb)).sqrt() * dist(&centroid(points, a), &centroid(points, b))
        }
    }
}

/// Merges in order. Distances within `1e-12` (relative) tie; ties go to the
/// pair whose smallest member ids sort lowest.
pub fn naive_ahc(points: &[Vec<f64>], ids: &[String], linkage: Linkage) -> Vec<SetMerge> {
    let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
    let key = |c: &Vec<usize>| c.iter().map(|&i| ids[i].as_str()).min().unwrap().to_string();
    let mut out = Vec::new();
    while clusters.len() > 1 {
        let mut best: Option<(usize, usize, f64, (String, String))> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let d = linkage_distance(points, &clusters[a], &clusters[b], linkage);
                let (ka, kb) = (key(&clusters[a]), key(&clusters[b]));
                let pair = if ka <= kb { (ka, kb) } else { (kb, ka) };
                let take = match &best {
                    None => true,
                    Some((_, _, bd, bp)) => {
                        let tol = 1e-12 * bd.abs().max(1.0);
                        d < bd - tol || (d <= bd + tol && pair < *bp)
                    }
                };
                if take {
                    best = Some((a, b, d, pair));
                }
            }
        }
        let (a, b, d, _) = best.unwrap();
        let set = |c: &Vec<usize>| c.iter().map(|&i| ids[i].clone()).collect::<BTreeSet<_>>();
        let (sa, sb) = (set(&clusters[a]), set(&clusters[b]));
        let (left, right) = if key(&clusters[a]) <= key(&clusters[b]) { (sa, sb) } else { (sb, sa) };
        out.push(SetMerge { left, right, height: d });
        let merged: Vec<usize> = clusters[a].iter().chain(&clusters[b]).copied().collect();
        clusters.remove(b);
        clusters[a] = merged;
    }
    out
}

/// The engine's merges with cluster ids resolved to member sets.
pub fn as_sets(dendrogram: &Dendrogram) -> Vec<SetMerge> {
    let mut sets: Vec<BTreeSet<String>> = dendrogram
        .leaves
        .iter()
        .map(|l| BTreeSet::from([l.clone()]))
        .collect();
    let mut out = Vec::new();
    for m in &dendrogram.merges {
        let (l, r) = (sets[m.left].clone(), sets[m.right].clone());
        let mut u = l.clone();
        u.extend(r.iter().cloned());
        out.push(SetMerge {
            left: l,
            right: r,
            height: m.height,
        });
        sets.push(u);
    }
    out
}

/// Sum of squared distances to the centroid of `members`.
pub fn inertia(points: &[Vec<f64>], members: &[usize]) -> f64 {
    let c = centroid(points, members);
    members
        .iter()
        .map(|&m| points[m].iter().zip(&c).map(|(x, y)| (x - y).powi(2)).sum::<f64>())
        .sum()
}
