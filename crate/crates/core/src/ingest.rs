//! Building warehouses from CSV and from code.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};
use crate::model::{
    AttributeSpec, AttributeType, DimensionData, DimensionSpec, FactRow, FactSpec, FactTable, Instance,
    LevelInstances, LevelSpec, MeasureSpec, MeasureType, Warehouse, WarehouseModel,
};
use crate::validate::validate_warehouse;

/// Accumulates members, hierarchy links and facts, then emits a validated
/// warehouse. Members keep their first-insertion order.
#[derive(Debug, Clone)]
pub struct WarehouseBuilder {
    model: WarehouseModel,
    levels: Vec<Vec<LevelAcc>>,
    facts: Vec<FactRow>,
}

#[derive(Debug, Clone, Default)]
struct LevelAcc {
    instances: Vec<Instance>,
    index: HashMap<String, usize>,
}

impl WarehouseBuilder {
    pub fn new(model: WarehouseModel) -> Self {
        let levels = model
            .dimensions
            .iter()
            .map(|d| vec![LevelAcc::default(); d.levels.len()])
            .collect();
        WarehouseBuilder {
            model,
            levels,
            facts: Vec::new(),
        }
    }

    pub fn model(&self) -> &WarehouseModel {
        &self.model
    }

    /// Adds a member, or checks a repeated one against what was recorded.
    /// `parent` is its member one level up.
    pub fn member(
        &mut self,
        dim_id: &str,
        level_id: &str,
        id: &str,
        attributes: &[(&str, &str)],
        parent: Option<&str>,
    ) -> Result<()> {
        let d = self
            .model
            .dimensions
            .iter()
            .position(|d| d.id == dim_id)
            .ok_or_else(|| Error::unknown("dimension", dim_id))?;
        let spec = &self.model.dimensions[d];
        let l = spec.level_index(level_id).ok_or_else(|| Error::unknown("level", level_id))?;
        if parent.is_some() && l + 1 == spec.levels.len() {
            return Err(Error::Invalid(format!(
                "`{}` is the coarsest level of `{}`; its members have no parent",
                level_id, dim_id
            )));
        }
        let acc = &mut self.levels[d][l];
        match acc.index.get(id) {
            Some(&k) => {
                let existing = &acc.instances[k];
                let same_attrs = attributes.iter().all(|(n, v)| existing.attribute(n) == Some(*v))
                    && existing.attributes.len() == attributes.len();
                if !same_attrs {
                    return Err(Error::Invalid(format!(
                        "member `{}` of `{}` seen with different attribute values",
                        id, level_id
                    )));
                }
                if existing.roll_up.as_deref() != parent {
                    return Err(Error::Invalid(format!(
                        "member `{}` of `{}` has two parents: `{}` and `{}`",
                        id,
                        level_id,
                        existing.roll_up.as_deref().unwrap_or(""),
                        parent.unwrap_or("")
                    )));
                }
            }
            None => {
                let mut inst = Instance::new(id);
                for (n, v) in attributes {
                    inst = inst.with_attribute(*n, *v);
                }
                inst.roll_up = parent.map(str::to_string);
                acc.index.insert(id.to_string(), acc.instances.len());
                acc.instances.push(inst);
            }
        }
        Ok(())
    }

    /// Adds a fact referencing finest-level members.
    pub fn fact(&mut self, members: &[(&str, &str)], measures: &[(&str, f64)]) {
        self.facts.push(FactRow {
            members: members.iter().map(|(d, m)| (d.to_string(), m.to_string())).collect(),
            measures: measures.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        });
    }

    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }

    pub fn build(self) -> Result<Warehouse> {
        let mut dimensions = Vec::new();
        for (spec, levels) in self.model.dimensions.iter().zip(self.levels) {
            let mut out: Vec<LevelInstances> = Vec::new();
            for (l, acc) in levels.into_iter().enumerate() {
                let mut instances = acc.instances;
                if l > 0 {
                    let below = &out[l - 1].instances;
                    for inst in &mut instances {
                        inst.drill_down = Some(
                            below
                                .iter()
                                .filter(|c| c.roll_up.as_deref() == Some(inst.id.as_str()))
                                .map(|c| c.id.clone())
                                .collect(),
                        );
                    }
                }
                out.push(LevelInstances {
                    level_id: spec.levels[l].id.clone(),
                    instances,
                });
            }
            dimensions.push(DimensionData {
                dim_id: spec.id.clone(),
                levels: out,
            });
        }
        let warehouse = Warehouse {
            facts: FactTable {
                fact_spec_id: self.model.facts.id.clone(),
                rows: self.facts,
            },
            model: self.model,
            dimensions,
        };
        let report = validate_warehouse(&warehouse);
        if let Some(f) = report.errors().next() {
            return Err(Error::Invalid(format!(
                "built warehouse is invalid ({} error(s)), first: {}",
                report.errors().count(),
                f.message
            )));
        }
        Ok(warehouse)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeBinding {
    pub column: String,
    pub name: String,
    #[serde(rename = "type", default = "default_attribute_type")]
    pub ty: AttributeType,
}

fn default_attribute_type() -> AttributeType {
    AttributeType::String
}

/// One level of a dimension: the column holding its member ids and the
/// columns holding its attributes. For every level but the finest, the
/// member column doubles as the parent column of the level below.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelBinding {
    pub id: String,
    pub member: String,
    #[serde(default)]
    pub attributes: Vec<AttributeBinding>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionBinding {
    pub id: String,
    pub path: String,
    /// Finest first.
    pub levels: Vec<LevelBinding>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureBinding {
    pub column: String,
    pub id: String,
    #[serde(rename = "type", default = "default_measure_type")]
    pub ty: MeasureType,
}

fn default_measure_type() -> MeasureType {
    MeasureType::Real
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactBinding {
    pub id: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestionMapping {
    pub facts: FactBinding,
    pub dimensions: Vec<DimensionBinding>,
    pub measures: Vec<MeasureBinding>,
}

impl IngestionMapping {
    pub fn model(&self) -> WarehouseModel {
        WarehouseModel {
            dimensions: self
                .dimensions
                .iter()
                .map(|d| DimensionSpec {
                    id: d.id.clone(),
                    path: d.path.clone(),
                    levels: d
                        .levels
                        .iter()
                        .map(|l| LevelSpec {
                            id: l.id.clone(),
                            attributes: l
                                .attributes
                                .iter()
                                .map(|a| AttributeSpec {
                                    name: a.name.clone(),
                                    ty: a.ty,
                                })
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
            facts: FactSpec {
                id: self.facts.id.clone(),
                path: self.facts.path.clone(),
                measures: self
                    .measures
                    .iter()
                    .map(|m| MeasureSpec {
                        id: m.id.clone(),
                        ty: m.ty,
                    })
                    .collect(),
                dimension_refs: self.dimensions.iter().map(|d| d.id.clone()).collect(),
            },
        }
    }

    fn check(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for d in &self.dimensions {
            if !seen.insert(("dimension", d.id.as_str())) {
                return Err(Error::Invalid(format!("dimension `{}` bound twice", d.id)));
            }
            if d.levels.is_empty() {
                return Err(Error::Invalid(format!("dimension `{}` has no levels", d.id)));
            }
        }
        for m in &self.measures {
            if !seen.insert(("measure", m.id.as_str())) {
                return Err(Error::Invalid(format!("measure `{}` bound twice", m.id)));
            }
        }
        Ok(())
    }
}

fn row_error(line: u64, message: String) -> Error {
    Error::Parse {
        location: Location::at(line as usize, 1),
        message,
    }
}

/// Loads comma-separated text with a header row.
pub fn ingest(csv_text: &str, mapping: &IngestionMapping) -> Result<Warehouse> {
    mapping.check()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| row_error(1, format!("unreadable header: {}", e)))?
        .clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| row_error(1, format!("header has no column `{}`", name)))
    };
    struct Level {
        id: String,
        member: usize,
        attributes: Vec<(String, usize, AttributeType)>,
    }
    let mut dims: Vec<(String, Vec<Level>)> = Vec::new();
    for d in &mapping.dimensions {
        let mut levels = Vec::new();
        for l in &d.levels {
            levels.push(Level {
                id: l.id.clone(),
                member: column(&l.member)?,
                attributes: l
                    .attributes
                    .iter()
                    .map(|a| Ok((a.name.clone(), column(&a.column)?, a.ty)))
                    .collect::<Result<_>>()?,
            });
        }
        dims.push((d.id.clone(), levels));
    }
    let measures: Vec<(String, usize, MeasureType)> = mapping
        .measures
        .iter()
        .map(|m| Ok((m.id.clone(), column(&m.column)?, m.ty)))
        .collect::<Result<_>>()?;

    let mut builder = WarehouseBuilder::new(mapping.model());
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            row_error(line, format!("unreadable row: {}", e))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |i: usize, what: &str| -> Result<&str> {
            match record.get(i) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(row_error(line, format!("row has no value for `{}`", what))),
            }
        };
        let mut fact_members: Vec<(String, String)> = Vec::new();
        for (dim_id, levels) in &dims {
            for (k, level) in levels.iter().enumerate() {
                let id = cell(level.member, &level.id)?;
                let mut attrs = Vec::new();
                for (name, col, ty) in &level.attributes {
                    let v = cell(*col, name)?;
                    if !ty.accepts(v) {
                        return Err(row_error(
                            line,
                            format!("`{}` is not a valid {} for `{}`", v, ty.as_str(), name),
                        ));
                    }
                    attrs.push((name.as_str(), v));
                }
                let parent = match levels.get(k + 1) {
                    Some(up) => Some(cell(up.member, &up.id)?),
                    None => None,
                };
                builder
                    .member(dim_id, &level.id, id, &attrs, parent)
                    .map_err(|e| row_error(line, e.to_string()))?;
            }
            fact_members.push((dim_id.clone(), cell(levels[0].member, &levels[0].id)?.to_string()));
        }
        let mut values: BTreeMap<&str, f64> = BTreeMap::new();
        for (id, col, ty) in &measures {
            let text = cell(*col, id)?;
            let v = ty
                .parse_value(text)
                .ok_or_else(|| row_error(line, format!("`{}` is not a valid {} for `{}`", text, ty.as_str(), id)))?;
            values.insert(id.as_str(), v);
        }
        let members: Vec<(&str, &str)> = fact_members.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let values: Vec<(&str, f64)> = values.into_iter().collect();
        builder.fact(&members, &values);
    }
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mapping() -> IngestionMapping {
        serde_json::from_str(
            r#"{
              "facts": {"id": "facts", "path": "facts.xml"},
              "dimensions": [
                {"id": "time-d", "path": "dim-time.xml", "levels": [
                  {"id": "location-in-transcription", "member": "location",
                   "attributes": [{"column": "location", "name": "location"}]}]},
                {"id": "transcription-d", "path": "dim-transcript.xml", "levels": [
                  {"id": "token", "member": "token", "attributes": [{"column": "token", "name": "term"}]},
                  {"id": "transcription", "member": "transcription",
                   "attributes": [{"column": "transcription", "name": "transcription-name"}]}]}
              ],
              "measures": [{"column": "frequency", "id": "frequency"}]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn loads_and_deduplicates() {
        let csv = "location,token,transcription,frequency\nbegin,hello,t1,2\nend,hello,t1,3\nend,bye,t2,1\n";
        let w = ingest(csv, &mapping()).unwrap();
        assert_eq!(w.facts.rows.len(), 3);
        let tokens = &w.dimension_data("transcription-d").unwrap().levels[0].instances;
        assert_eq!(tokens.len(), 2);
        let t1 = w.dimension_data("transcription-d").unwrap().levels[1].instance("t1").unwrap();
        assert_eq!(t1.children(), ["hello"]);
    }

    #[test]
    fn conflicting_parents_fail_with_line() {
        let csv = "location,token,transcription,frequency\nbegin,hello,t1,2\nend,hello,t2,3\n";
        let err = ingest(csv, &mapping()).unwrap_err();
        assert_eq!(err.location().unwrap().line, 3);
        assert!(err.to_string().contains("two parents"));
    }

    #[test]
    fn bad_measure_and_missing_cell() {
        let csv = "location,token,transcription,frequency\nbegin,hello,t1,lots\n";
        assert!(ingest(csv, &mapping()).unwrap_err().to_string().contains("lots"));
        let csv = "location,token,transcription,frequency\nbegin,,t1,2\n";
        assert!(ingest(csv, &mapping()).unwrap_err().to_string().contains("no value"));
        let csv = "location,token,frequency\nbegin,hello,2\n";
        assert!(ingest(csv, &mapping()).unwrap_err().to_string().contains("transcription"));
    }
}
