//! Cube cells by direct fact scans.

use std::collections::BTreeMap;

use xdw::cube::Aggregate;
use xdw::model::FactRow;
use xdw::Warehouse;

/// Follows `Roll-up` attributes from a finest-level member up to `level_id`.
pub fn member_at(warehouse: &Warehouse, dim_id: &str, finest: &str, level_id: &str) -> Option<String> {
    let data = warehouse.dimension_data(dim_id)?;
    let mut current = finest.to_string();
    for level in &data.levels {
        if level.level_id == level_id {
            return Some(current);
        }
        let inst = level.instances.iter().find(|i| i.id == current)?;
        current = inst.roll_up.clone()?;
    }
    None
}

pub fn aggregate(values: &[f64], agg: Aggregate) -> f64 {
    match agg {
        Aggregate::Sum => values.iter().sum(),
        Aggregate::Count => values.len() as f64,
        Aggregate::Avg => values.iter().sum::<f64>() / values.len() as f64,
        Aggregate::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
        Aggregate::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Every non-empty cell of the cube over `axes` (dimension, level), keeping
/// the facts accepted by `keep`.
pub fn brute_cells(
    warehouse: &Warehouse,
    axes: &[(String, String)],
    measure: &str,
    agg: Aggregate,
    keep: &dyn Fn(&FactRow) -> bool,
) -> BTreeMap<Vec<String>, f64> {
    let mut groups: BTreeMap<Vec<String>, Vec<f64>> = BTreeMap::new();
    for row in &warehouse.facts.rows {
        if !keep(row) {
            continue;
        }
        let coord: Option<Vec<String>> = axes
            .iter()
            .map(|(d, l)| member_at(warehouse, d, row.members.get(d)?, l))
            .collect();
        let coord = coord.expect("every fact rolls up");
        groups.entry(coord).or_default().push(row.measures[measure]);
    }
    groups.into_iter().map(|(k, v)| (k, aggregate(&v, agg))).collect()
}

pub fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}
