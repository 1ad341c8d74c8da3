//! Readers and writers for `dw-model.xml`, `dimensiond.xml` and `factsf.xml`.
//!
//! `Drill-Down` holds a whitespace-separated list of child instance ids.
//! Facts are written as
//! `<fact><measure idref=".." value=".."/><dimension idref=".." instance=".."/></fact>`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{
    AttributeSpec, AttributeType, DimensionData, DimensionSpec, FactRow, FactSpec, FactTable,
    Instance, LevelInstances, LevelSpec, MeasureSpec, MeasureType, Warehouse, WarehouseModel,
};
use crate::xml::{self, Element, Writer};

/// Conventional name of the schema document.
pub const MODEL_FILE: &str = "dw-model.xml";

fn expect_root(root: &Element, name: &str) -> Result<()> {
    if root.name != name {
        return Err(Error::parse(
            root.location.clone(),
            format!("expected root element <{}>, found <{}>", name, root.name),
        ));
    }
    Ok(())
}

fn duplicate(el: &Element, what: &str, id: &str) -> Error {
    Error::parse(el.location.clone(), format!("duplicate {} `{}`", what, id))
}

pub fn parse_model(doc: &str) -> Result<WarehouseModel> {
    let root = xml::parse(doc)?;
    expect_root(&root, "DW-model")?;
    root.expect_attrs(&[])?;
    let mut dimensions: Vec<DimensionSpec> = Vec::new();
    let mut facts: Option<FactSpec> = None;
    for child in &root.children {
        match child.name.as_str() {
            "dimension" => {
                let dim = parse_dimension_spec(child)?;
                if dimensions.iter().any(|d| d.id == dim.id) {
                    return Err(duplicate(child, "dimension id", &dim.id));
                }
                dimensions.push(dim);
            }
            "FactDoc" => {
                if facts.is_some() {
                    return Err(Error::parse(
                        child.location.clone(),
                        "only one <FactDoc> is supported",
                    ));
                }
                facts = Some(parse_fact_spec(child)?);
            }
            _ => return Err(root.unknown_child(child)),
        }
    }
    let facts = facts
        .ok_or_else(|| Error::parse(root.location.clone(), "<DW-model> has no <FactDoc>"))?;
    Ok(WarehouseModel { dimensions, facts })
}

fn parse_dimension_spec(el: &Element) -> Result<DimensionSpec> {
    el.expect_attrs(&["id", "path"])?;
    let id = el.required("id")?.to_string();
    let path = el.required("path")?.to_string();
    let mut levels: Vec<LevelSpec> = Vec::new();
    for child in &el.children {
        if child.name != "Level" {
            return Err(el.unknown_child(child));
        }
        child.expect_attrs(&["id"])?;
        let level_id = child.required("id")?.to_string();
        if levels.iter().any(|l| l.id == level_id) {
            return Err(duplicate(child, "level id", &level_id));
        }
        let mut attributes: Vec<AttributeSpec> = Vec::new();
        for a in &child.children {
            if a.name != "attribute" {
                return Err(child.unknown_child(a));
            }
            a.expect_attrs(&["name", "type"])?;
            let name = a.required("name")?.to_string();
            let ty_text = a.required("type")?;
            let ty = AttributeType::parse(ty_text).ok_or_else(|| {
                Error::parse(
                    a.location.clone(),
                    format!("unknown attribute type `{}`", ty_text),
                )
            })?;
            if attributes.iter().any(|x| x.name == name) {
                return Err(duplicate(a, "attribute name", &name));
            }
            attributes.push(AttributeSpec { name, ty });
        }
        levels.push(LevelSpec {
            id: level_id,
            attributes,
        });
    }
    Ok(DimensionSpec { id, path, levels })
}

fn parse_fact_spec(el: &Element) -> Result<FactSpec> {
    el.expect_attrs(&["id", "path"])?;
    let id = el.required("id")?.to_string();
    let path = el.required("path")?.to_string();
    let mut measures: Vec<MeasureSpec> = Vec::new();
    let mut dimension_refs: Vec<String> = Vec::new();
    for child in &el.children {
        match child.name.as_str() {
            "measure" => {
                child.expect_attrs(&["id", "type"])?;
                let mid = child.required("id")?.to_string();
                let ty_text = child.required("type")?;
                let ty = MeasureType::parse(ty_text).ok_or_else(|| {
                    Error::parse(
                        child.location.clone(),
                        format!("unknown measure type `{}`", ty_text),
                    )
                })?;
                if measures.iter().any(|m| m.id == mid) {
                    return Err(duplicate(child, "measure id", &mid));
                }
                measures.push(MeasureSpec { id: mid, ty });
            }
            "dimension" => {
                child.expect_attrs(&["idref"])?;
                let r = child.required("idref")?.to_string();
                if dimension_refs.contains(&r) {
                    return Err(duplicate(child, "dimension reference", &r));
                }
                dimension_refs.push(r);
            }
            _ => return Err(el.unknown_child(child)),
        }
    }
    Ok(FactSpec {
        id,
        path,
        measures,
        dimension_refs,
    })
}

/// Parses a dimension data document against its declared spec.
///
/// Dangling Roll-up/Drill-Down targets are accepted here and reported by
/// [`crate::validate::validate_warehouse`].
pub fn parse_dimension(doc: &str, spec: &DimensionSpec) -> Result<DimensionData> {
    let root = xml::parse(doc)?;
    expect_root(&root, "dimension")?;
    root.expect_attrs(&["dim-id"])?;
    let dim_id = root.required("dim-id")?;
    if dim_id != spec.id {
        return Err(Error::parse(
            root.location.clone(),
            format!("dim-id `{}` does not match dimension `{}`", dim_id, spec.id),
        ));
    }
    let mut levels: Vec<LevelInstances> = Vec::new();
    for level_el in &root.children {
        if level_el.name != "Level" {
            return Err(root.unknown_child(level_el));
        }
        level_el.expect_attrs(&["id"])?;
        let level_id = level_el.required("id")?;
        let level_spec = spec.level(level_id).ok_or_else(|| {
            Error::parse(
                level_el.location.clone(),
                format!("level `{}` is not declared for dimension `{}`", level_id, spec.id),
            )
        })?;
        if levels.iter().any(|l| l.level_id == level_id) {
            return Err(duplicate(level_el, "level", level_id));
        }
        let mut instances = Vec::with_capacity(level_el.children.len());
        for inst_el in &level_el.children {
            if inst_el.name != "Instance" {
                return Err(level_el.unknown_child(inst_el));
            }
            instances.push(parse_instance(inst_el, level_spec)?);
        }
        levels.push(LevelInstances {
            level_id: level_id.to_string(),
            instances,
        });
    }
    // Document order is free; store levels in roll-up order.
    levels.sort_by_key(|l| spec.level_index(&l.level_id));
    Ok(DimensionData {
        dim_id: spec.id.clone(),
        levels,
    })
}

fn parse_instance(el: &Element, level: &LevelSpec) -> Result<Instance> {
    el.expect_attrs(&["id", "Roll-up", "Drill-Down"])?;
    let mut inst = Instance::new(el.required("id")?);
    inst.roll_up = el.attr("Roll-up").map(str::to_string);
    inst.drill_down = el
        .attr("Drill-Down")
        .map(|v| v.split_whitespace().map(str::to_string).collect());
    for a in &el.children {
        if a.name != "attribute" {
            return Err(el.unknown_child(a));
        }
        a.expect_attrs(&["id", "value"])?;
        let name = a.required("id")?;
        let value = a.required("value")?;
        if level.attribute(name).is_none() {
            return Err(Error::parse(
                a.location.clone(),
                format!("attribute `{}` is not declared for level `{}`", name, level.id),
            ));
        }
        if inst.attribute(name).is_some() {
            return Err(duplicate(a, "attribute", name));
        }
        inst.attributes.push((name.to_string(), value.to_string()));
    }
    Ok(inst)
}

pub fn parse_facts(doc: &str, spec: &FactSpec) -> Result<FactTable> {
    let root = xml::parse(doc)?;
    expect_root(&root, "FactDoc")?;
    root.expect_attrs(&["id"])?;
    if let Some(id) = root.attr("id") {
        if id != spec.id {
            return Err(Error::parse(
                root.location.clone(),
                format!("FactDoc id `{}` does not match fact spec `{}`", id, spec.id),
            ));
        }
    }
    let mut rows = Vec::with_capacity(root.children.len());
    for (index, fact) in root.children.iter().enumerate() {
        if fact.name != "fact" {
            return Err(root.unknown_child(fact));
        }
        fact.expect_attrs(&[])?;
        let mut measures = BTreeMap::new();
        let mut members = BTreeMap::new();
        for b in &fact.children {
            match b.name.as_str() {
                "measure" => {
                    b.expect_attrs(&["idref", "value"])?;
                    let id = b.required("idref")?;
                    let m = spec.measure(id).ok_or_else(|| {
                        Error::parse(
                            b.location.clone(),
                            format!("fact {}: unknown measure `{}`", index, id),
                        )
                    })?;
                    let text = b.required("value")?;
                    let value = m.ty.parse_value(text).ok_or_else(|| {
                        Error::parse(
                            b.location.clone(),
                            format!(
                                "fact {}: measure `{}` value `{}` is not a valid {}",
                                index,
                                id,
                                text,
                                m.ty.as_str()
                            ),
                        )
                    })?;
                    if measures.insert(id.to_string(), value).is_some() {
                        return Err(duplicate(b, "measure binding", id));
                    }
                }
                "dimension" => {
                    b.expect_attrs(&["idref", "instance"])?;
                    let id = b.required("idref")?;
                    if !spec.dimension_refs.iter().any(|d| d == id) {
                        return Err(Error::parse(
                            b.location.clone(),
                            format!("fact {}: dimension `{}` is not referenced by the fact spec", index, id),
                        ));
                    }
                    let inst = b.required("instance")?;
                    if members.insert(id.to_string(), inst.to_string()).is_some() {
                        return Err(duplicate(b, "dimension binding", id));
                    }
                }
                _ => return Err(fact.unknown_child(b)),
            }
        }
        for m in &spec.measures {
            if !measures.contains_key(&m.id) {
                return Err(Error::parse(
                    fact.location.clone(),
                    format!("fact {}: missing measure `{}`", index, m.id),
                ));
            }
        }
        for d in &spec.dimension_refs {
            if !members.contains_key(d) {
                return Err(Error::parse(
                    fact.location.clone(),
                    format!("fact {}: missing dimension `{}`", index, d),
                ));
            }
        }
        rows.push(FactRow { measures, members });
    }
    Ok(FactTable {
        fact_spec_id: spec.id.clone(),
        rows,
    })
}

pub fn serialize_model(model: &WarehouseModel) -> String {
    let mut w = Writer::new();
    w.start("DW-model", &[]);
    for dim in &model.dimensions {
        w.start("dimension", &[("id", &dim.id), ("path", &dim.path)]);
        for level in &dim.levels {
            w.start("Level", &[("id", &level.id)]);
            for a in &level.attributes {
                w.empty("attribute", &[("name", &a.name), ("type", a.ty.as_str())]);
            }
            w.end("Level");
        }
        w.end("dimension");
    }
    let f = &model.facts;
    w.start("FactDoc", &[("id", &f.id), ("path", &f.path)]);
    for m in &f.measures {
        w.empty("measure", &[("id", &m.id), ("type", m.ty.as_str())]);
    }
    for d in &f.dimension_refs {
        w.empty("dimension", &[("idref", d)]);
    }
    w.end("FactDoc");
    w.end("DW-model");
    w.finish()
}

pub fn serialize_dimension(data: &DimensionData) -> String {
    let mut w = Writer::new();
    w.start("dimension", &[("dim-id", &data.dim_id)]);
    for level in &data.levels {
        w.start("Level", &[("id", &level.level_id)]);
        for inst in &level.instances {
            let drill = inst.drill_down.as_ref().map(|c| c.join(" "));
            let mut attrs: Vec<(&str, &str)> = vec![("id", &inst.id)];
            if let Some(p) = &inst.roll_up {
                attrs.push(("Roll-up", p));
            }
            if let Some(d) = &drill {
                attrs.push(("Drill-Down", d));
            }
            if inst.attributes.is_empty() {
                w.empty("Instance", &attrs);
                continue;
            }
            w.start("Instance", &attrs);
            for (k, v) in &inst.attributes {
                w.empty("attribute", &[("id", k), ("value", v)]);
            }
            w.end("Instance");
        }
        w.end("Level");
    }
    w.end("dimension");
    w.finish()
}

pub fn serialize_facts(table: &FactTable, spec: &FactSpec) -> String {
    let mut w = Writer::new();
    if table.rows.is_empty() {
        w.empty("FactDoc", &[("id", &table.fact_spec_id)]);
        return w.finish();
    }
    w.start("FactDoc", &[("id", &table.fact_spec_id)]);
    for row in &table.rows {
        w.start("fact", &[]);
        for m in &spec.measures {
            if let Some(v) = row.measures.get(&m.id) {
                w.empty("measure", &[("idref", &m.id), ("value", &m.ty.format_value(*v))]);
            }
        }
        for d in &spec.dimension_refs {
            if let Some(inst) = row.members.get(d) {
                w.empty("dimension", &[("idref", d), ("instance", inst)]);
            }
        }
        w.end("fact");
    }
    w.end("FactDoc");
    w.finish()
}

/// Writes every document of the warehouse as `(file name, XML text)`.
///
/// The schema comes first under [`MODEL_FILE`], then dimension documents in
/// model order, then the fact document.
pub fn serialize_warehouse(warehouse: &Warehouse) -> Vec<(String, String)> {
    let mut out = vec![(MODEL_FILE.to_string(), serialize_model(&warehouse.model))];
    for spec in &warehouse.model.dimensions {
        if let Some(data) = warehouse.dimension_data(&spec.id) {
            out.push((spec.path.clone(), serialize_dimension(data)));
        }
    }
    out.push((
        warehouse.model.facts.path.clone(),
        serialize_facts(&warehouse.facts, &warehouse.model.facts),
    ));
    out
}

/// Parses a full warehouse from its documents, looked up by file name.
pub fn parse_warehouse<'a, F>(model_doc: &str, mut lookup: F) -> Result<Warehouse>
where
    F: FnMut(&str) -> Result<std::borrow::Cow<'a, str>>,
{
    let model = parse_model(model_doc).map_err(|e| e.with_file(MODEL_FILE))?;
    let mut dimensions = Vec::with_capacity(model.dimensions.len());
    for spec in &model.dimensions {
        let text = lookup(&spec.path)?;
        dimensions.push(parse_dimension(&text, spec).map_err(|e| e.with_file(&spec.path))?);
    }
    let text = lookup(&model.facts.path)?;
    let facts = parse_facts(&text, &model.facts).map_err(|e| e.with_file(&model.facts.path))?;
    Ok(Warehouse {
        model,
        dimensions,
        facts,
    })
}

/// Reads a warehouse from a directory holding `dw-model.xml`.
pub fn read_warehouse_dir(dir: &std::path::Path) -> Result<Warehouse> {
    let read = |name: &str| -> Result<String> {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    };
    let model_doc = read(MODEL_FILE)?;
    parse_warehouse(&model_doc, |name| read(name).map(std::borrow::Cow::Owned))
}

/// Writes every document of `warehouse` into `dir`, creating it if needed.
/// Files are overwritten in place; see the service crate for atomic writes.
pub fn write_warehouse_dir(warehouse: &Warehouse, dir: &std::path::Path) -> Result<()> {
    let io = |path: &std::path::Path| {
        let path = path.display().to_string();
        move |source| Error::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    for (name, text) in serialize_warehouse(warehouse) {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(io(&path))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"<DW-model>
  <dimension id="d" path="dim-d.xml">
    <Level id="l">
      <attribute name="a" type="string" />
    </Level>
  </dimension>
  <FactDoc id="f" path="f.xml">
    <measure id="m" type="integer" />
    <dimension idref="d" />
  </FactDoc>
</DW-model>"#;

    #[test]
    fn minimal_model() {
        let m = parse_model(MINIMAL).unwrap();
        assert_eq!(m.dimensions.len(), 1);
        assert_eq!(m.dimensions[0].levels.len(), 1);
        assert_eq!(m.facts.measures.len(), 1);
    }

    #[test]
    fn model_errors_name_location() {
        let bad = MINIMAL.replace("<Level id=\"l\">", "<Level>");
        let err = parse_model(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("missing required attribute `id`"), "{msg}");
        assert_eq!(err.location().unwrap().line, 3);

        let bad = MINIMAL.replace("<measure id", "<metric id");
        assert!(parse_model(&bad).unwrap_err().to_string().contains("unknown element <metric>"));

        let bad = MINIMAL.replace(
            "<dimension idref=\"d\" />",
            "<dimension idref=\"d\" />\n<dimension idref=\"d\" />",
        );
        assert!(parse_model(&bad).unwrap_err().to_string().contains("duplicate"));

        assert!(parse_model("<DW-model><dimension").is_err());
    }

    fn spec() -> DimensionSpec {
        parse_model(MINIMAL).unwrap().dimensions.remove(0)
    }

    #[test]
    fn flat_dimension() {
        let doc = r#"<dimension dim-id="d"><Level id="l"><Instance id="x"><attribute id="a" value="1"/></Instance></Level></dimension>"#;
        let data = parse_dimension(doc, &spec()).unwrap();
        assert_eq!(data.levels[0].instances[0].attribute("a"), Some("1"));
        assert!(data.levels[0].instances[0].roll_up.is_none());
    }

    #[test]
    fn dimension_errors() {
        let wrong_id = r#"<dimension dim-id="e"/>"#;
        assert!(parse_dimension(wrong_id, &spec()).unwrap_err().to_string().contains("does not match"));
        let wrong_level = r#"<dimension dim-id="d"><Level id="zz"/></dimension>"#;
        assert!(parse_dimension(wrong_level, &spec()).unwrap_err().to_string().contains("not declared"));
        let wrong_attr = r#"<dimension dim-id="d"><Level id="l"><Instance id="x"><attribute id="b" value="1"/></Instance></Level></dimension>"#;
        assert!(parse_dimension(wrong_attr, &spec()).unwrap_err().to_string().contains("`b` is not declared"));
    }

    #[test]
    fn dangling_roll_up_parses() {
        let doc = r#"<dimension dim-id="d"><Level id="l"><Instance id="x" Roll-up="nowhere"/></Level></dimension>"#;
        let data = parse_dimension(doc, &spec()).unwrap();
        assert_eq!(data.levels[0].instances[0].roll_up.as_deref(), Some("nowhere"));
    }

    #[test]
    fn facts_parse_and_errors() {
        let fspec = parse_model(MINIMAL).unwrap().facts;
        let doc = r#"<FactDoc id="f">
  <fact><measure idref="m" value="3"/><dimension idref="d" instance="x"/></fact>
  <fact><measure idref="m" value="4"/><dimension idref="d" instance="y"/></fact>
</FactDoc>"#;
        assert_eq!(parse_facts(doc, &fspec).unwrap().rows.len(), 2);
        assert!(parse_facts(r#"<FactDoc id="f"/>"#, &fspec).unwrap().rows.is_empty());

        let missing = r#"<FactDoc id="f"><fact><measure idref="m" value="3"/></fact></FactDoc>"#;
        let msg = parse_facts(missing, &fspec).unwrap_err().to_string();
        assert!(msg.contains("fact 0") && msg.contains("missing dimension `d`"), "{msg}");

        let nan = r#"<FactDoc id="f"><fact><measure idref="m" value="lots"/><dimension idref="d" instance="x"/></fact></FactDoc>"#;
        assert!(parse_facts(nan, &fspec).unwrap_err().to_string().contains("not a valid integer"));
    }

    #[test]
    fn empty_fact_table_is_self_closing() {
        let fspec = parse_model(MINIMAL).unwrap().facts;
        let table = FactTable {
            fact_spec_id: "f".into(),
            rows: vec![],
        };
        let text = serialize_facts(&table, &fspec);
        assert!(text.contains("<FactDoc id=\"f\" />"));
        assert_eq!(parse_facts(&text, &fspec).unwrap(), table);
    }
}
