//! Seeded random warehouses and rule sets.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xdw::ingest::WarehouseBuilder;
use xdw::model::{
    AttributeSpec, AttributeType, DimensionSpec, FactSpec, LevelSpec, MeasureSpec, MeasureType,
};
use xdw::{Warehouse, WarehouseModel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_dims: usize,
    pub max_levels: usize,
    pub max_facts: usize,
    /// Upper bound on children per parent and on coarsest-level members.
    pub fan_out: usize,
    pub allow_negative: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            max_dims: 3,
            max_levels: 3,
            max_facts: 500,
            fan_out: 3,
            allow_negative: true,
        }
    }
}

/// A valid warehouse with dimensions `d0..`, levels `d0-l0..` (finest
/// first), members named after their level, a `name` attribute equal to the
/// member id, an integer `qty` and a real `amount` measure.
pub fn random_warehouse(seed: u64, shape: Shape) -> Warehouse {
    let mut r = rng(seed);
    let dims = r.gen_range(1..=shape.max_dims);
    let mut dimensions = Vec::new();
    for d in 0..dims {
        let levels = r.gen_range(1..=shape.max_levels);
        dimensions.push(DimensionSpec {
            id: format!("d{}", d),
            path: format!("dim-d{}.xml", d),
            levels: (0..levels)
                .map(|l| LevelSpec {
                    id: format!("d{}-l{}", d, l),
                    attributes: vec![
                        AttributeSpec {
                            name: "name".into(),
                            ty: AttributeType::String,
                        },
                        AttributeSpec {
                            name: "rank".into(),
                            ty: AttributeType::Integer,
                        },
                    ],
                })
                .collect(),
        });
    }
    let model = WarehouseModel {
        facts: FactSpec {
            id: "facts".into(),
            path: "facts.xml".into(),
            measures: vec![
                MeasureSpec {
                    id: "qty".into(),
                    ty: MeasureType::Integer,
                },
                MeasureSpec {
                    id: "amount".into(),
                    ty: MeasureType::Real,
                },
            ],
            dimension_refs: dimensions.iter().map(|d| d.id.clone()).collect(),
        },
        dimensions,
    };
    let mut b = WarehouseBuilder::new(model.clone());
    let mut finest: Vec<Vec<String>> = Vec::new();
    for spec in &model.dimensions {
        let top = spec.levels.len() - 1;
        let mut parents: Vec<String> = Vec::new();
        for l in (0..=top).rev() {
            let level = &spec.levels[l];
            let mut members = Vec::new();
            let groups: Vec<Option<String>> = if l == top {
                vec![None]
            } else {
                parents.iter().cloned().map(Some).collect()
            };
            for parent in groups {
                for _ in 0..r.gen_range(1..=shape.fan_out) {
                    let id = format!("{}m{}", level.id, members.len());
                    let rank = r.gen_range(0..100).to_string();
                    b.member(&spec.id, &level.id, &id, &[("name", &id), ("rank", &rank)], parent.as_deref())
                        .expect("generated member");
                    members.push(id);
                }
            }
            parents = members;
        }
        finest.push(parents);
    }
    let facts = r.gen_range(0..=shape.max_facts);
    for _ in 0..facts {
        let members: Vec<(&str, &str)> = model
            .dimensions
            .iter()
            .zip(&finest)
            .map(|(d, f)| (d.id.as_str(), f.choose(&mut r).expect("members").as_str()))
            .collect();
        let lo = if shape.allow_negative { -5 } else { 0 };
        let qty = r.gen_range(lo..=20) as f64;
        let amount: f64 = if r.gen_bool(0.1) {
            0.0
        } else {
            r.gen_range(lo as f64..100.0)
        };
        b.fact(&members, &[("qty", qty), ("amount", amount)]);
    }
    b.build().expect("generated warehouse is valid")
}

/// A rule set grouping the members of a random level of a random dimension.
/// Groups never straddle two parents, so the rules always apply. Returns the
/// rule text and the dimension id.
pub fn random_grouping_rules(warehouse: &Warehouse, seed: u64) -> (String, String) {
    let mut r = rng(seed);
    let spec = warehouse.model.dimensions.choose(&mut r).expect("dimensions");
    let data = warehouse.dimension_data(&spec.id).expect("data");
    let l = r.gen_range(0..spec.levels.len());
    let level = &data.levels[l];
    let mut by_parent: Vec<(Option<String>, Vec<String>)> = Vec::new();
    for inst in &level.instances {
        match by_parent.iter_mut().find(|(p, _)| *p == inst.roll_up) {
            Some((_, v)) => v.push(inst.id.clone()),
            None => by_parent.push((inst.roll_up.clone(), vec![inst.id.clone()])),
        }
    }
    let mut groups: Vec<Vec<String>> = Vec::new();
    for (_, mut members) in by_parent {
        members.shuffle(&mut r);
        let k = r.gen_range(1..=members.len());
        let mut parts: Vec<Vec<String>> = vec![Vec::new(); k];
        for (i, m) in members.into_iter().enumerate() {
            let slot = if i < k { i } else { r.gen_range(0..k) };
            parts[slot].push(m);
        }
        groups.extend(parts);
    }
    let target = format!("{}-grp", level.level_id);
    let mut text = format!(
        "if ConditionOn({}, {{name}}) then Generate({}, {{grp}})\n",
        level.level_id, target
    );
    for (g, members) in groups.iter().enumerate() {
        let values: Vec<String> = members.iter().map(|m| format!("'{}'", m)).collect();
        text.push_str(&format!("if name in {{{}}} then grp={{g{}}}\n", values.join(", "), g));
    }
    (text, spec.id.clone())
}
