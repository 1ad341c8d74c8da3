//! Exhaustive itemset enumeration and a textbook Apriori over string items.

use std::collections::{BTreeMap, BTreeSet};

use xdw::mining::rules::{MetaRule, SupportAggregate};
use xdw::Warehouse;

use crate::cube::member_at;

/// `(dimension, member)` pairs.
pub type ItemSet = BTreeSet<(String, String)>;

struct Flat {
    slots: Vec<(String, String)>,
    rows: Vec<Vec<String>>,
    weights: Vec<f64>,
    total: f64,
}

fn flatten(warehouse: &Warehouse, meta: &MetaRule) -> Flat {
    let slots: Vec<(String, String)> = meta
        .antecedent
        .iter()
        .chain(&meta.consequent)
        .map(|s| (s.dim_id.clone(), s.level_id.clone()))
        .collect();
    let mut rows = Vec::new();
    let mut weights = Vec::new();
    'facts: for fact in &warehouse.facts.rows {
        for p in &meta.context {
            let m = member_at(warehouse, &p.dim_id, &fact.members[&p.dim_id], &p.level_id).unwrap();
            if !p.members.contains(&m) {
                continue 'facts;
            }
        }
        rows.push(
            slots
                .iter()
                .map(|(d, l)| member_at(warehouse, d, &fact.members[d], l).unwrap())
                .collect(),
        );
        weights.push(match meta.aggregate {
            SupportAggregate::Count => 1.0,
            SupportAggregate::Sum => fact.measures[&meta.measure],
        });
    }
    let total = weights.iter().sum();
    Flat {
        slots,
        rows,
        weights,
        total,
    }
}

fn support_of(flat: &Flat, items: &ItemSet) -> f64 {
    let mut w = 0.0;
    for (row, weight) in flat.rows.iter().zip(&flat.weights) {
        let hit = items.iter().all(|(d, m)| {
            let s = flat.slots.iter().position(|(sd, _)| sd == d).unwrap();
            &row[s] == m
        });
        if hit {
            w += weight;
        }
    }
    w / flat.total
}

/// Every itemset with at most one member per slot and support at least
/// `min_support`, by enumerating all combinations.
pub fn brute_frequent(warehouse: &Warehouse, meta: &MetaRule, min_support: f64) -> BTreeMap<ItemSet, f64> {
    let flat = flatten(warehouse, meta);
    let choices: Vec<Vec<Option<String>>> = flat
        .slots
        .iter()
        .map(|(d, l)| {
            let level = warehouse
                .dimension_data(d)
                .unwrap()
                .levels
                .iter()
                .find(|x| &x.level_id == l)
                .unwrap();
            std::iter::once(None)
                .chain(level.instances.iter().map(|i| Some(i.id.clone())))
                .collect()
        })
        .collect();
    let mut combos: Vec<ItemSet> = vec![ItemSet::new()];
    for ((dim, _), options) in flat.slots.iter().zip(&choices) {
        let mut next = Vec::new();
        for set in &combos {
            for o in options {
                let mut s = set.clone();
                if let Some(m) = o {
                    s.insert((dim.clone(), m.clone()));
                }
                next.push(s);
            }
        }
        combos = next;
    }
    combos
        .into_iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| {
            let sup = support_of(&flat, &s);
            (sup >= min_support && sup > 0.0).then_some((s, sup))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteRule {
    pub antecedent: ItemSet,
    pub consequent: ItemSet,
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
    pub loevinger: Option<f64>,
}

/// Rules from the exhaustive frequent sets, with every support recounted
/// from the facts.
pub fn brute_rules(
    warehouse: &Warehouse,
    meta: &MetaRule,
    min_support: f64,
    min_confidence: f64,
) -> Vec<BruteRule> {
    let flat = flatten(warehouse, meta);
    let left: BTreeSet<&str> = meta.antecedent.iter().map(|s| s.dim_id.as_str()).collect();
    let mut out = Vec::new();
    for (z, sz) in brute_frequent(warehouse, meta, min_support) {
        let (x, y): (ItemSet, ItemSet) = z.iter().cloned().partition(|(d, _)| left.contains(d.as_str()));
        if x.is_empty() || y.is_empty() {
            continue;
        }
        let sx = support_of(&flat, &x);
        let sy = support_of(&flat, &y);
        let confidence = sz / sx;
        if confidence < min_confidence {
            continue;
        }
        out.push(BruteRule {
            antecedent: x,
            consequent: y,
            support: sz,
            confidence,
            lift: confidence / sy,
            loevinger: (sy < 1.0).then(|| (confidence - sy) / (1.0 - sy)),
        });
    }
    out
}

/// Fact rows as transactions of `dimension=member` strings.
pub fn transactions(warehouse: &Warehouse, meta: &MetaRule) -> Vec<BTreeSet<String>> {
    let flat = flatten(warehouse, meta);
    flat.rows
        .iter()
        .map(|row| {
            flat.slots
                .iter()
                .zip(row)
                .map(|((d, _), m)| format!("{}={}", d, m))
                .collect()
        })
        .collect()
}

/// Classical Apriori with relative count support.
pub fn classic_apriori(transactions: &[BTreeSet<String>], min_support: f64) -> BTreeMap<BTreeSet<String>, f64> {
    let n = transactions.len() as f64;
    let support = |set: &BTreeSet<String>| transactions.iter().filter(|t| set.is_subset(t)).count() as f64 / n;
    let mut result = BTreeMap::new();
    let items: BTreeSet<String> = transactions.iter().flatten().cloned().collect();
    let mut current: Vec<BTreeSet<String>> = items
        .into_iter()
        .map(|i| BTreeSet::from([i]))
        .filter(|s| support(s) >= min_support)
        .collect();
    while !current.is_empty() {
        for s in &current {
            result.insert(s.clone(), support(s));
        }
        let known: BTreeSet<&BTreeSet<String>> = current.iter().collect();
        let mut next = BTreeSet::new();
        for (i, a) in current.iter().enumerate() {
            for b in &current[i + 1..] {
                let union: BTreeSet<String> = a.union(b).cloned().collect();
                if union.len() != a.len() + 1 {
                    continue;
                }
                let all_subsets_frequent = union.iter().all(|drop| {
                    let mut sub = union.clone();
                    sub.remove(drop);
                    known.contains(&sub)
                });
                if all_subsets_frequent && support(&union) >= min_support {
                    next.insert(union);
                }
            }
        }
        current = next.into_iter().collect();
    }
    result
}
