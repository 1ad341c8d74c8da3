//! Inter-dimensional association rules mined from cube aggregates.
//!
//! A [`MetaRule`] fixes which (dimension, level) slots may appear on each
//! side of a rule and which facts form the context. Support is a SUM or
//! COUNT aggregate of a measure relative to the whole context.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cube::{matching_facts, AxisSpec, Predicate};
use crate::error::{Error, Result};
use crate::model::Warehouse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SupportAggregate {
    #[serde(alias = "sum")]
    Sum,
    #[default]
    #[serde(alias = "count")]
    Count,
}

impl std::str::FromStr for SupportAggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SUM" => Ok(SupportAggregate::Sum),
            "COUNT" => Ok(SupportAggregate::Count),
            _ => Err(Error::Invalid(format!("support aggregate must be SUM or COUNT, got `{}`", s))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaRule {
    #[serde(default)]
    pub context: Vec<Predicate>,
    pub antecedent: Vec<AxisSpec>,
    pub consequent: Vec<AxisSpec>,
    pub measure: String,
    #[serde(default)]
    pub aggregate: SupportAggregate,
}

impl MetaRule {
    pub fn slots(&self) -> impl Iterator<Item = &AxisSpec> {
        self.antecedent.iter().chain(&self.consequent)
    }

    pub fn validate(&self, warehouse: &Warehouse) -> Result<()> {
        if self.antecedent.is_empty() || self.consequent.is_empty() {
            return Err(Error::Invalid("a meta-rule needs antecedent and consequent slots".into()));
        }
        let mut dims = HashSet::new();
        for s in self.slots() {
            if !dims.insert(s.dim_id.as_str()) {
                return Err(Error::Invalid(format!(
                    "dimension `{}` appears in more than one slot",
                    s.dim_id
                )));
            }
            if !warehouse.model.facts.dimension_refs.contains(&s.dim_id) {
                return Err(Error::unknown("fact dimension", &s.dim_id));
            }
            let spec = warehouse.model.dimension_or_err(&s.dim_id)?;
            if spec.level(&s.level_id).is_none() {
                return Err(Error::unknown("level", &s.level_id));
            }
        }
        if warehouse.model.facts.measure(&self.measure).is_none() {
            return Err(Error::unknown("measure", &self.measure));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Item {
    pub dim: String,
    pub level: String,
    pub member: String,
}

impl std::fmt::Display for Item {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}={}", self.level, self.member)
    }
}

/// Items in meta-rule slot order, at most one per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequentItemset {
    pub items: Vec<Item>,
    pub support: f64,
}

/// Facts of the context reduced to one interned member per slot, with
/// their weights.
pub struct Transactions {
    pub slots: Vec<AxisSpec>,
    pub members: Vec<Vec<String>>,
    pub rows: Vec<Vec<u32>>,
    pub weights: Vec<f64>,
    pub total: f64,
}

pub fn transactions(warehouse: &Warehouse, meta: &MetaRule) -> Result<Transactions> {
    meta.validate(warehouse)?;
    let slots: Vec<AxisSpec> = meta.slots().cloned().collect();
    let mut lookups = Vec::new();
    let mut members = Vec::new();
    for s in &slots {
        let h = warehouse.hierarchy(&s.dim_id)?;
        let level = h.level_index(&s.level_id)?;
        let names: Vec<String> = h.members(level).to_vec();
        let index: HashMap<String, u32> = names.iter().enumerate().map(|(i, m)| (m.clone(), i as u32)).collect();
        let lookup: HashMap<String, u32> = h
            .finest_to(level)
            .into_iter()
            .map(|(f, m)| (f.to_string(), index[m]))
            .collect();
        lookups.push(lookup);
        members.push(names);
    }
    let mut rows = Vec::new();
    let mut weights = Vec::new();
    for i in matching_facts(warehouse, &meta.context)? {
        let fact = &warehouse.facts.rows[i];
        let w = match meta.aggregate {
            SupportAggregate::Count => 1.0,
            SupportAggregate::Sum => {
                let v = fact.measures.get(&meta.measure).copied().ok_or_else(|| {
                    Error::Invalid(format!("fact {} has no value for `{}`", i + 1, meta.measure))
                })?;
                if v < 0.0 {
                    return Err(Error::Invalid(format!(
                        "fact {} has negative `{}`; SUM support needs nonnegative values",
                        i + 1,
                        meta.measure
                    )));
                }
                v
            }
        };
        let row = slots
            .iter()
            .zip(&lookups)
            .map(|(s, l)| {
                fact.members
                    .get(&s.dim_id)
                    .and_then(|m| l.get(m))
                    .copied()
                    .ok_or_else(|| Error::Invalid(format!("fact {} does not roll up to `{}`", i + 1, s.level_id)))
            })
            .collect::<Result<Vec<u32>>>()?;
        rows.push(row);
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    if rows.is_empty() || total <= 0.0 {
        return Err(Error::Invalid("the meta-rule context holds no weight".into()));
    }
    Ok(Transactions {
        slots,
        members,
        rows,
        weights,
        total,
    })
}

type Key = Vec<(usize, u32)>;

fn weight_of(tx: &Transactions, key: &Key) -> f64 {
    tx.rows
        .iter()
        .zip(&tx.weights)
        .filter(|(row, _)| key.iter().all(|(s, m)| row[*s] == *m))
        .map(|(_, w)| w)
        .sum()
}

/// Levelwise search: frequent single items, then joins of frequent
/// `k`-itemsets that share their first `k - 1` items, pruned by the
/// frequency of every `k`-subset.
pub fn mine_frequent(warehouse: &Warehouse, meta: &MetaRule, min_support: f64) -> Result<Vec<FrequentItemset>> {
    if !(min_support > 0.0 && min_support <= 1.0) {
        return Err(Error::Invalid(format!("minimum support {} outside (0, 1]", min_support)));
    }
    let tx = transactions(warehouse, meta)?;
    let mut frequent: Vec<(Key, f64)> = Vec::new();
    let mut level: Vec<Key> = Vec::new();
    for s in 0..tx.slots.len() {
        let mut acc = vec![0.0; tx.members[s].len()];
        for (row, w) in tx.rows.iter().zip(&tx.weights) {
            acc[row[s] as usize] += w;
        }
        for (m, w) in acc.into_iter().enumerate() {
            let support = w / tx.total;
            if w > 0.0 && support >= min_support {
                level.push(vec![(s, m as u32)]);
                frequent.push((vec![(s, m as u32)], support));
            }
        }
    }
    while !level.is_empty() {
        let known: HashSet<&Key> = level.iter().collect();
        let mut next = Vec::new();
        for (i, a) in level.iter().enumerate() {
            for b in &level[i + 1..] {
                let k = a.len();
                if a[..k - 1] != b[..k - 1] || a[k - 1].0 >= b[k - 1].0 {
                    continue;
                }
                let mut cand = a.clone();
                cand.push(b[k - 1]);
                let pruned = (0..cand.len()).any(|drop| {
                    let mut sub = cand.clone();
                    sub.remove(drop);
                    !known.contains(&sub)
                });
                if pruned {
                    continue;
                }
                let support = weight_of(&tx, &cand) / tx.total;
                if support >= min_support {
                    next.push(cand);
                    frequent.push((next.last().unwrap().clone(), support));
                }
            }
        }
        level = next;
    }
    Ok(frequent
        .into_iter()
        .map(|(key, support)| FrequentItemset {
            items: key
                .iter()
                .map(|(s, m)| Item {
                    dim: tx.slots[*s].dim_id.clone(),
                    level: tx.slots[*s].level_id.clone(),
                    member: tx.members[*s][*m as usize].clone(),
                })
                .collect(),
            support,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationRule {
    pub antecedent: Vec<Item>,
    pub consequent: Vec<Item>,
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
    /// Absent when the consequent's support is 1.
    pub loevinger: Option<f64>,
}

impl AssociationRule {
    pub fn render(&self) -> String {
        let side = |items: &[Item]| items.iter().map(Item::to_string).collect::<Vec<_>>().join(", ");
        format!("{{{}}} -> {{{}}}", side(&self.antecedent), side(&self.consequent))
    }
}

/// Splits every frequent itemset along the meta-rule's sides.
pub fn derive_rules(frequent: &[FrequentItemset], meta: &MetaRule, min_confidence: f64) -> Vec<AssociationRule> {
    let left: HashSet<&str> = meta.antecedent.iter().map(|s| s.dim_id.as_str()).collect();
    let support: HashMap<&[Item], f64> = frequent.iter().map(|f| (f.items.as_slice(), f.support)).collect();
    let mut rules = Vec::new();
    for z in frequent {
        let (x, y): (Vec<Item>, Vec<Item>) = z.items.iter().cloned().partition(|i| left.contains(i.dim.as_str()));
        if x.is_empty() || y.is_empty() {
            continue;
        }
        let (Some(&sx), Some(&sy)) = (support.get(x.as_slice()), support.get(y.as_slice())) else {
            continue;
        };
        let confidence = z.support / sx;
        if confidence < min_confidence {
            continue;
        }
        rules.push(AssociationRule {
            antecedent: x,
            consequent: y,
            support: z.support,
            confidence,
            lift: confidence / sy,
            loevinger: (sy < 1.0).then(|| (confidence - sy) / (1.0 - sy)),
        });
    }
    sort_rules(&mut rules);
    rules
}

/// Loevinger descending (absent last), lift descending, then the rendered
/// rule text.
pub fn sort_rules(rules: &mut [AssociationRule]) {
    rules.sort_by(|a, b| {
        let lo = |r: &AssociationRule| r.loevinger.unwrap_or(f64::NEG_INFINITY);
        lo(b)
            .total_cmp(&lo(a))
            .then(b.lift.total_cmp(&a.lift))
            .then_with(|| a.render().cmp(&b.render()))
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleFormat {
    Table,
    Json,
}

impl std::str::FromStr for RuleFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(RuleFormat::Table),
            "json" => Ok(RuleFormat::Json),
            _ => Err(Error::Invalid(format!("unknown rule format `{}`", s))),
        }
    }
}

pub fn export_rules(rules: &[AssociationRule], format: RuleFormat) -> String {
    let mut sorted = rules.to_vec();
    sort_rules(&mut sorted);
    match format {
        RuleFormat::Json => serde_json::to_string_pretty(&sorted).expect("rules serialize"),
        RuleFormat::Table => {
            let mut out = String::from("antecedent\tconsequent\tsupport\tconfidence\tlift\tloevinger\n");
            for r in &sorted {
                let side = |items: &[Item]| items.iter().map(Item::to_string).collect::<Vec<_>>().join(" & ");
                let _ = writeln!(
                    out,
                    "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}",
                    side(&r.antecedent),
                    side(&r.consequent),
                    r.support,
                    r.confidence,
                    r.lift,
                    r.loevinger.map_or("-".to_string(), |l| format!("{:.6}", l))
                );
            }
            out
        }
    }
}

/// Mining output of one meta-rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleMining {
    pub frequent: Vec<FrequentItemset>,
    pub rules: Vec<AssociationRule>,
}

pub fn mine_rules(warehouse: &Warehouse, meta: &MetaRule, min_support: f64, min_confidence: f64) -> Result<RuleMining> {
    if !(0.0..=1.0).contains(&min_confidence) {
        return Err(Error::Invalid(format!("minimum confidence {} outside [0, 1]", min_confidence)));
    }
    let frequent = mine_frequent(warehouse, meta, min_support)?;
    let rules = derive_rules(&frequent, meta, min_confidence);
    Ok(RuleMining { frequent, rules })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(conf: f64, sy: f64) -> AssociationRule {
        AssociationRule {
            antecedent: vec![],
            consequent: vec![],
            support: 0.1,
            confidence: conf,
            lift: conf / sy,
            loevinger: (sy < 1.0).then(|| (conf - sy) / (1.0 - sy)),
        }
    }

    #[test]
    fn lift_and_loevinger_arithmetic() {
        let r = rule(0.8, 0.5);
        assert!((r.lift - 1.6).abs() < 1e-12);
        assert!((r.loevinger.unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(rule(0.8, 1.0).loevinger, None);
    }

    #[test]
    fn empty_export_is_header_only() {
        assert_eq!(export_rules(&[], RuleFormat::Table).lines().count(), 1);
        assert_eq!(export_rules(&[], RuleFormat::Json).trim(), "[]");
    }
}
