//! In-memory form of the three warehouse document kinds.
//!
//! Levels are ordered finest first: level `i` rolls up to level `i + 1`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeType {
    String,
    Boolean,
    Integer,
    Real,
}

impl AttributeType {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributeType::String => "string",
            AttributeType::Boolean => "boolean",
            AttributeType::Integer => "integer",
            AttributeType::Real => "real",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "string" => Some(AttributeType::String),
            "boolean" => Some(AttributeType::Boolean),
            "integer" => Some(AttributeType::Integer),
            "real" => Some(AttributeType::Real),
            _ => None,
        }
    }

    /// Whether `value` is a lexically valid literal of this type.
    pub fn accepts(self, value: &str) -> bool {
        match self {
            AttributeType::String => true,
            AttributeType::Boolean => matches!(value, "true" | "false" | "1" | "0"),
            AttributeType::Integer => value.parse::<i64>().is_ok(),
            AttributeType::Real => value.parse::<f64>().map(f64::is_finite).unwrap_or(false),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureType {
    Integer,
    Real,
}

impl MeasureType {
    pub fn as_str(self) -> &'static str {
        match self {
            MeasureType::Integer => "integer",
            MeasureType::Real => "real",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "integer" => Some(MeasureType::Integer),
            "real" => Some(MeasureType::Real),
            _ => None,
        }
    }

    /// Parses a measure literal. Integer measures must be exactly representable.
    pub fn parse_value(self, text: &str) -> Option<f64> {
        match self {
            MeasureType::Integer => text
                .trim()
                .parse::<i64>()
                .ok()
                .filter(|v| v.unsigned_abs() <= 1 << 53)
                .map(|v| v as f64),
            MeasureType::Real => text.trim().parse::<f64>().ok().filter(|v| v.is_finite()),
        }
    }

    pub fn format_value(self, value: f64) -> String {
        match self {
            MeasureType::Integer => format!("{}", value as i64),
            MeasureType::Real => format!("{}", value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: AttributeType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub id: String,
    pub attributes: Vec<AttributeSpec>,
}

impl LevelSpec {
    pub fn attribute(&self, name: &str) -> Option<&AttributeSpec> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionSpec {
    pub id: String,
    pub path: String,
    pub levels: Vec<LevelSpec>,
}

impl DimensionSpec {
    pub fn level_index(&self, level_id: &str) -> Option<usize> {
        self.levels.iter().position(|l| l.id == level_id)
    }

    pub fn level(&self, level_id: &str) -> Option<&LevelSpec> {
        self.levels.iter().find(|l| l.id == level_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub id: String,
    #[serde(rename = "type")]
    pub ty: MeasureType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactSpec {
    pub id: String,
    pub path: String,
    pub measures: Vec<MeasureSpec>,
    pub dimension_refs: Vec<String>,
}

impl FactSpec {
    pub fn measure(&self, id: &str) -> Option<&MeasureSpec> {
        self.measures.iter().find(|m| m.id == id)
    }
}

/// Schema metadata, the content of `dw-model.xml`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarehouseModel {
    pub dimensions: Vec<DimensionSpec>,
    pub facts: FactSpec,
}

impl WarehouseModel {
    pub fn dimension(&self, id: &str) -> Option<&DimensionSpec> {
        self.dimensions.iter().find(|d| d.id == id)
    }

    pub fn dimension_or_err(&self, id: &str) -> Result<&DimensionSpec> {
        self.dimension(id).ok_or_else(|| Error::unknown("dimension", id))
    }
}

/// One dimension member at one level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    /// Attribute name and value pairs, in document order.
    pub attributes: Vec<(String, String)>,
    pub roll_up: Option<String>,
    pub drill_down: Option<Vec<String>>,
}

impl Instance {
    pub fn new(id: impl Into<String>) -> Self {
        Instance {
            id: id.into(),
            attributes: Vec::new(),
            roll_up: None,
            drill_down: None,
        }
    }

    pub fn with_attribute(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.push((name.into(), value.into()));
        self
    }

    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn children(&self) -> &[String] {
        self.drill_down.as_deref().unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelInstances {
    pub level_id: String,
    pub instances: Vec<Instance>,
}

impl LevelInstances {
    pub fn instance(&self, id: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.id == id)
    }
}

/// Member data of one dimension, the content of a `dimensiond.xml` document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionData {
    pub dim_id: String,
    pub levels: Vec<LevelInstances>,
}

impl DimensionData {
    pub fn level(&self, level_id: &str) -> Option<&LevelInstances> {
        self.levels.iter().find(|l| l.level_id == level_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactRow {
    pub measures: BTreeMap<String, f64>,
    /// Dimension id to the referenced finest-level instance id.
    pub members: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactTable {
    pub fact_spec_id: String,
    pub rows: Vec<FactRow>,
}

/// A complete warehouse: schema, every dimension's members and the facts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warehouse {
    pub model: WarehouseModel,
    pub dimensions: Vec<DimensionData>,
    pub facts: FactTable,
}

impl Warehouse {
    pub fn dimension_data(&self, dim_id: &str) -> Option<&DimensionData> {
        self.dimensions.iter().find(|d| d.dim_id == dim_id)
    }

    /// Roll-up maps of one dimension. Requires the dimension to exist.
    pub fn hierarchy(&self, dim_id: &str) -> Result<Hierarchy> {
        let spec = self.model.dimension_or_err(dim_id)?;
        let data = self
            .dimension_data(dim_id)
            .ok_or_else(|| Error::unknown("dimension data", dim_id))?;
        Ok(Hierarchy::new(spec, data))
    }
}

/// Navigation index over one dimension's Roll-up links.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub dim_id: String,
    level_ids: Vec<String>,
    members: Vec<Vec<String>>,
    /// Per level, instance id to its parent id at the next level.
    parents: Vec<HashMap<String, String>>,
}

impl Hierarchy {
    pub fn new(spec: &DimensionSpec, data: &DimensionData) -> Self {
        let level_ids: Vec<String> = spec.levels.iter().map(|l| l.id.clone()).collect();
        let mut members = Vec::with_capacity(level_ids.len());
        let mut parents = Vec::with_capacity(level_ids.len());
        for id in &level_ids {
            let level = data.level(id);
            members.push(
                level
                    .map(|l| l.instances.iter().map(|i| i.id.clone()).collect())
                    .unwrap_or_default(),
            );
            parents.push(
                level
                    .map(|l| {
                        l.instances
                            .iter()
                            .filter_map(|i| i.roll_up.clone().map(|p| (i.id.clone(), p)))
                            .collect()
                    })
                    .unwrap_or_default(),
            );
        }
        Hierarchy {
            dim_id: spec.id.clone(),
            level_ids,
            members,
            parents,
        }
    }

    pub fn level_index(&self, level_id: &str) -> Result<usize> {
        self.level_ids
            .iter()
            .position(|l| l == level_id)
            .ok_or_else(|| Error::unknown("level", format!("{}/{}", self.dim_id, level_id)))
    }

    pub fn level_id(&self, index: usize) -> &str {
        &self.level_ids[index]
    }

    pub fn level_count(&self) -> usize {
        self.level_ids.len()
    }

    /// Instance ids of a level, in document order.
    pub fn members(&self, level: usize) -> &[String] {
        &self.members[level]
    }

    /// Walks Roll-up links from `member` at level `from` up to level `to`.
    pub fn ancestor<'a>(&'a self, member: &'a str, from: usize, to: usize) -> Option<&'a str> {
        let mut current = member;
        for level in from..to {
            current = self.parents[level].get(current)?.as_str();
        }
        Some(current)
    }

    /// Maps every finest-level instance to its ancestor at `level`.
    pub fn finest_to(&self, level: usize) -> HashMap<&str, &str> {
        self.members[0]
            .iter()
            .filter_map(|m| self.ancestor(m, 0, level).map(|a| (m.as_str(), a)))
            .collect()
    }
}
