//! Aggregation by clustering: agglomerative hierarchical clustering of the
//! members of one cube axis, partition scoring, and conversion of a chosen
//! partition into an evolution [`RuleSet`].

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::cube::Cube;
use crate::error::{Error, Result};
use crate::evolution::{Condition, DataRule, RuleSet, StructureRule};
use crate::model::Warehouse;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberVector {
    pub member: String,
    pub features: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub descriptors: Vec<(String, String)>,
}

/// Member vectors of one axis. Feature `j` is the cell at `columns[j]`, a
/// coordinate over the other axes enumerated row-major in axis order (the
/// last axis varies fastest). Empty cells count as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberVectors {
    pub dim: String,
    pub level: String,
    pub columns: Vec<Vec<String>>,
    pub vectors: Vec<MemberVector>,
}

pub fn extract_member_vectors(
    cube: &Cube,
    dim_id: &str,
    warehouse: Option<&Warehouse>,
) -> Result<MemberVectors> {
    if !cube.pushed.is_empty() {
        return Err(Error::Unsupported("member vectors of a cube with pushed axes".into()));
    }
    let i = cube.axis_index(dim_id)?;
    let others: Vec<&crate::cube::Axis> = cube
        .axes
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != i)
        .map(|(_, a)| a)
        .collect();
    let mut columns: Vec<Vec<String>> = vec![Vec::new()];
    for axis in &others {
        let mut next = Vec::with_capacity(columns.len() * axis.members.len());
        for prefix in &columns {
            for m in &axis.members {
                let mut c = prefix.clone();
                c.push(m.clone());
                next.push(c);
            }
        }
        columns = next;
    }
    let axis = &cube.axes[i];
    let level_data = warehouse
        .and_then(|w| w.dimension_data(dim_id))
        .and_then(|d| d.level(&axis.level_id));
    let vectors = axis
        .members
        .iter()
        .map(|m| {
            let features = columns
                .iter()
                .map(|col| {
                    let mut key = col.clone();
                    key.insert(i, m.clone());
                    cube.cells.get(&key).map(|c| c.value).unwrap_or(0.0)
                })
                .collect();
            let descriptors = level_data
                .and_then(|l| l.instance(m))
                .map(|inst| inst.attributes.clone())
                .unwrap_or_default();
            MemberVector {
                member: m.clone(),
                features,
                descriptors,
            }
        })
        .collect();
    Ok(MemberVectors {
        dim: dim_id.to_string(),
        level: axis.level_id.clone(),
        columns,
        vectors,
    })
}

/// Rescales every feature column to `[0, 1]`; constant columns become 0.
pub fn normalize(vectors: &[MemberVector]) -> Vec<MemberVector> {
    let width = vectors.first().map_or(0, |v| v.features.len());
    let mut lo = vec![f64::INFINITY; width];
    let mut hi = vec![f64::NEG_INFINITY; width];
    for v in vectors {
        for (j, x) in v.features.iter().enumerate() {
            lo[j] = lo[j].min(*x);
            hi[j] = hi[j].max(*x);
        }
    }
    vectors
        .iter()
        .map(|v| MemberVector {
            features: v
                .features
                .iter()
                .enumerate()
                .map(|(j, x)| {
                    let range = hi[j] - lo[j];
                    if range > 0.0 {
                        (x - lo[j]) / range
                    } else {
                        0.0
                    }
                })
                .collect(),
            ..v.clone()
        })
        .collect()
}

/// Appends one-hot columns for every descriptor `(attribute, value)` pair,
/// scaled by `weight`.
pub fn append_descriptors(vectors: &[MemberVector], weight: f64) -> Vec<MemberVector> {
    let categories: BTreeSet<(&str, &str)> = vectors
        .iter()
        .flat_map(|v| v.descriptors.iter().map(|(a, b)| (a.as_str(), b.as_str())))
        .collect();
    vectors
        .iter()
        .map(|v| {
            let mut out = v.clone();
            for (a, b) in &categories {
                let hit = v.descriptors.iter().any(|(x, y)| x == a && y == b);
                out.features.push(if hit { weight } else { 0.0 });
            }
            out
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    Average,
    #[default]
    Ward,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [Linkage::Single, Linkage::Complete, Linkage::Average, Linkage::Ward];
}

impl std::str::FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            "ward" => Ok(Linkage::Ward),
            _ => Err(Error::Invalid(format!("unknown linkage `{}`", s))),
        }
    }
}

/// One agglomeration step. Leaves are clusters `0..n`; step `k` creates
/// cluster `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub linkage: Linkage,
    pub leaves: Vec<String>,
    pub merges: Vec<Merge>,
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn tie_tolerance(d: f64) -> f64 {
    1e-12 * d.abs().max(1.0)
}

/// Agglomerative clustering with Lance-Williams distance updates.
///
/// Ward heights are `sqrt(2 n_a n_b / (n_a + n_b)) * |c_a - c_b|`, so the
/// first merge of two points sits at their Euclidean distance. Ties are
/// broken by the lexicographically lowest pair of smallest member ids.
pub fn ahc_cluster(vectors: &[MemberVector], linkage: Linkage) -> Result<Dendrogram> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::Invalid(format!("clustering needs at least 2 vectors, got {}", n)));
    }
    let mut seen = HashSet::new();
    for v in vectors {
        if !seen.insert(v.member.as_str()) {
            return Err(Error::Invalid(format!("duplicate member `{}`", v.member)));
        }
        if v.features.len() != vectors[0].features.len() {
            return Err(Error::Invalid("vectors differ in length".into()));
        }
    }
    let ward = linkage == Linkage::Ward;
    // Ward works on squared distances.
    let mut dist = vec![vec![0.0f64; n]; n];
    for a in 0..n {
        for b in (a + 1)..n {
            let d = euclidean(&vectors[a].features, &vectors[b].features);
            let d = if ward { d * d } else { d };
            dist[a][b] = d;
            dist[b][a] = d;
        }
    }
    let mut active: Vec<bool> = vec![true; n];
    let mut cluster_id: Vec<usize> = (0..n).collect();
    let mut size: Vec<usize> = vec![1; n];
    let mut key: Vec<&str> = vectors.iter().map(|v| v.member.as_str()).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..n {
            if !active[a] {
                continue;
            }
            for b in (a + 1)..n {
                if !active[b] {
                    continue;
                }
                let d = dist[a][b];
                let better = match best {
                    None => true,
                    Some((ba, bb, bd)) => {
                        if d < bd - tie_tolerance(bd) {
                            true
                        } else if d <= bd + tie_tolerance(bd) {
                            pair_key(key[a], key[b]) < pair_key(key[ba], key[bb])
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best = Some((a, b, d));
                }
            }
        }
        let (a, b, d) = best.expect("at least two active clusters");
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for k in 0..n {
            if !active[k] || k == a || k == b {
                continue;
            }
            let nk = size[k] as f64;
            let (dka, dkb) = (dist[k][a], dist[k][b]);
            let updated = match linkage {
                Linkage::Single => dka.min(dkb),
                Linkage::Complete => dka.max(dkb),
                Linkage::Average => (na * dka + nb * dkb) / (na + nb),
                Linkage::Ward => ((nk + na) * dka + (nk + nb) * dkb - nk * d) / (nk + na + nb),
            };
            dist[k][a] = updated;
            dist[a][k] = updated;
        }
        let height = if ward { d.max(0.0).sqrt() } else { d };
        let (left, right) = if key[a] <= key[b] { (a, b) } else { (b, a) };
        merges.push(Merge {
            left: cluster_id[left],
            right: cluster_id[right],
            height,
            size: size[a] + size[b],
        });
        active[b] = false;
        size[a] += size[b];
        cluster_id[a] = n + step;
        key[a] = key[a].min(key[b]);
    }
    Ok(Dendrogram {
        linkage,
        leaves: vectors.iter().map(|v| v.member.clone()).collect(),
        merges,
    })
}

fn pair_key<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Disjoint member sets covering every leaf.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub clusters: Vec<Vec<String>>,
}

impl Partition {
    pub fn k(&self) -> usize {
        self.clusters.len()
    }
}

/// Undoes the last `k - 1` merges. Clusters are listed by their first leaf,
/// members in leaf order.
pub fn cut_partition(dendrogram: &Dendrogram, k: usize) -> Result<Partition> {
    let n = dendrogram.leaves.len();
    if k == 0 || k > n {
        return Err(Error::Invalid(format!("k = {} outside 1..={}", k, n)));
    }
    // Union-find over cluster ids 0..2n-1.
    let mut parent: Vec<usize> = (0..2 * n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (step, m) in dendrogram.merges.iter().take(n - k).enumerate() {
        let new = n + step;
        let l = find(&mut parent, m.left);
        let r = find(&mut parent, m.right);
        parent[l] = new;
        parent[r] = new;
    }
    let mut groups: Vec<(usize, Vec<String>)> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for (i, leaf) in dendrogram.leaves.iter().enumerate() {
        let root = find(&mut parent, i);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push((root, Vec::new()));
            groups.len() - 1
        });
        groups[g].1.push(leaf.clone());
    }
    Ok(Partition {
        clusters: groups.into_iter().map(|(_, m)| m).collect(),
    })
}

/// Inertia decomposition of a partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionQuality {
    pub k: usize,
    pub within: f64,
    pub between: f64,
    pub total: f64,
    /// `between / total`; 0 when the total inertia is 0.
    pub ratio: f64,
}

fn centroid<'a>(points: impl Iterator<Item = &'a [f64]>, width: usize) -> (Vec<f64>, usize) {
    let mut c = vec![0.0; width];
    let mut count = 0;
    for p in points {
        for (x, y) in c.iter_mut().zip(p) {
            *x += y;
        }
        count += 1;
    }
    for x in &mut c {
        *x /= count.max(1) as f64;
    }
    (c, count)
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Within-, between- and total inertia (unweighted sums of squared
/// distances about centroids).
pub fn partition_quality(partition: &Partition, vectors: &[MemberVector]) -> Result<PartitionQuality> {
    let by_id: HashMap<&str, &[f64]> = vectors
        .iter()
        .map(|v| (v.member.as_str(), v.features.as_slice()))
        .collect();
    let covered: usize = partition.clusters.iter().map(Vec::len).sum();
    let distinct: HashSet<&str> = partition.clusters.iter().flatten().map(String::as_str).collect();
    if covered != vectors.len() || distinct.len() != covered || distinct.iter().any(|m| !by_id.contains_key(m)) {
        return Err(Error::Invalid("partition does not cover the vectors exactly".into()));
    }
    let width = vectors.first().map_or(0, |v| v.features.len());
    let (global, _) = centroid(vectors.iter().map(|v| v.features.as_slice()), width);
    let total: f64 = vectors.iter().map(|v| sq(&v.features, &global)).sum();
    let mut within = 0.0;
    let mut between = 0.0;
    for cluster in &partition.clusters {
        let (c, count) = centroid(cluster.iter().map(|m| by_id[m.as_str()]), width);
        within += cluster.iter().map(|m| sq(by_id[m.as_str()], &c)).sum::<f64>();
        between += count as f64 * sq(&c, &global);
    }
    Ok(PartitionQuality {
        k: partition.k(),
        within,
        between,
        total,
        ratio: if total > 0.0 { between / total } else { 0.0 },
    })
}

/// Quality of every cut `k = 1..=n` of the dendrogram.
pub fn quality_table(dendrogram: &Dendrogram, vectors: &[MemberVector]) -> Result<Vec<PartitionQuality>> {
    (1..=dendrogram.leaves.len())
        .map(|k| partition_quality(&cut_partition(dendrogram, k)?, vectors))
        .collect()
}

/// Nested form of a dendrogram for the UI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DendrogramNode {
    Leaf { leaf: String },
    Merge { height: f64, size: usize, children: Vec<DendrogramNode> },
}

impl Dendrogram {
    pub fn to_tree(&self) -> DendrogramNode {
        let n = self.leaves.len();
        let mut nodes: Vec<Option<DendrogramNode>> = self
            .leaves
            .iter()
            .map(|l| Some(DendrogramNode::Leaf { leaf: l.clone() }))
            .collect();
        for m in &self.merges {
            let left = nodes[m.left].take().expect("each cluster merges once");
            let right = nodes[m.right].take().expect("each cluster merges once");
            nodes.push(Some(DendrogramNode::Merge {
                height: m.height,
                size: m.size,
                children: vec![left, right],
            }));
        }
        nodes
            .pop()
            .flatten()
            .filter(|_| n > 0)
            .unwrap_or(DendrogramNode::Leaf { leaf: String::new() })
    }
}

/// Everything the OpAC pipeline computes for one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpacResult {
    pub vectors: MemberVectors,
    pub dendrogram: Dendrogram,
    pub tree: DendrogramNode,
    pub quality: Vec<PartitionQuality>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpacParams {
    #[serde(default)]
    pub linkage: Linkage,
    #[serde(default = "default_true")]
    pub normalize: bool,
    /// When set, one-hot descriptor columns with this weight join the features.
    #[serde(default)]
    pub descriptor_weight: Option<f64>,
}

fn default_true() -> bool {
    true
}

impl Default for OpacParams {
    fn default() -> Self {
        OpacParams {
            linkage: Linkage::Ward,
            normalize: true,
            descriptor_weight: None,
        }
    }
}

pub fn opac(cube: &Cube, dim_id: &str, warehouse: Option<&Warehouse>, params: &OpacParams) -> Result<OpacResult> {
    let mut vectors = extract_member_vectors(cube, dim_id, warehouse)?;
    if params.normalize {
        vectors.vectors = normalize(&vectors.vectors);
    }
    if let Some(w) = params.descriptor_weight {
        vectors.vectors = append_descriptors(&vectors.vectors, w);
    }
    let dendrogram = ahc_cluster(&vectors.vectors, params.linkage)?;
    let quality = quality_table(&dendrogram, &vectors.vectors)?;
    Ok(OpacResult {
        tree: dendrogram.to_tree(),
        vectors,
        dendrogram,
        quality,
    })
}

/// Turns a partition of an axis's members into a rule set creating one new
/// level instance per cluster.
///
/// Conditions use the first attribute of the source level whose values
/// identify its instances.
pub fn partition_to_rules(
    partition: &Partition,
    cube: &Cube,
    warehouse: &Warehouse,
    dim_id: &str,
    target_level: &str,
    target_attribute: &str,
    cluster_names: &[String],
) -> Result<RuleSet> {
    let axis = cube.axis(dim_id).ok_or_else(|| Error::NotAnAxis(dim_id.to_string()))?;
    let spec = warehouse.model.dimension_or_err(dim_id)?;
    let level_spec = spec
        .level(&axis.level_id)
        .ok_or_else(|| Error::unknown("level", &axis.level_id))?;
    let level = warehouse
        .dimension_data(dim_id)
        .and_then(|d| d.level(&axis.level_id))
        .ok_or_else(|| Error::unknown("level data", &axis.level_id))?;

    if cluster_names.len() != partition.k() {
        return Err(Error::Invalid(format!(
            "{} names for {} clusters",
            cluster_names.len(),
            partition.k()
        )));
    }
    let mut names = HashSet::new();
    for n in cluster_names {
        let probe = DataRule {
            conditions: vec![],
            target: BTreeMap::from([(String::new(), n.clone())]),
        };
        if !names.insert(probe.instance_id()) {
            return Err(Error::Invalid(format!("cluster name `{}` collides with another", n)));
        }
    }
    let level_ids: BTreeSet<&str> = level.instances.iter().map(|i| i.id.as_str()).collect();
    let members: Vec<&str> = partition.clusters.iter().flatten().map(String::as_str).collect();
    let member_set: BTreeSet<&str> = members.iter().copied().collect();
    if member_set.len() != members.len() || member_set != level_ids {
        return Err(Error::Invalid(format!(
            "partition does not cover the members of `{}/{}` exactly",
            dim_id, axis.level_id
        )));
    }
    let id_attr = level_spec
        .attributes
        .iter()
        .find(|a| {
            let mut seen = HashSet::new();
            level
                .instances
                .iter()
                .all(|i| i.attribute(&a.name).is_some_and(|v| seen.insert(v)))
        })
        .ok_or_else(|| {
            Error::Invalid(format!(
                "no attribute of `{}` identifies its instances",
                axis.level_id
            ))
        })?;
    let data = partition
        .clusters
        .iter()
        .zip(cluster_names)
        .map(|(cluster, name)| DataRule {
            conditions: vec![Condition::In {
                attr: id_attr.name.clone(),
                values: cluster
                    .iter()
                    .map(|m| {
                        level
                            .instance(m)
                            .and_then(|i| i.attribute(&id_attr.name))
                            .unwrap_or_default()
                            .to_string()
                    })
                    .collect(),
            }],
            target: BTreeMap::from([(target_attribute.to_string(), name.clone())]),
        })
        .collect();
    Ok(RuleSet {
        dim_id: Some(dim_id.to_string()),
        structure: StructureRule {
            source_level: axis.level_id.clone(),
            condition_attributes: vec![id_attr.name.clone()],
            target_level: target_level.to_string(),
            target_attributes: vec![target_attribute.to_string()],
        },
        data,
    })
}
