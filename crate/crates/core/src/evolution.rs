//! Rule-driven hierarchy evolution.
//!
//! A [`RuleSet`] is one structure rule naming the source level and the level
//! to create, followed by data rules, each of which defines one instance of
//! the new level:
//!
//! ```text
//! if ConditionOn(location-in-transcription, {location}) then Generate(group-of-location-in-transcription, {location-group})
//! (1) if location in {'begin', 'end'} then location-group={extreme}
//! (2) if location not in {'begin', 'end'} then location-group={middle}
//! ```
//!
//! The full grammar is in `docs/rules.ebnf`. Applying a rule set is a pure
//! rewrite: a new model and new dimension data come out, facts are untouched.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};
use crate::model::{
    AttributeSpec, AttributeType, DimensionSpec, Instance, LevelInstances, LevelSpec, Warehouse,
    WarehouseModel,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureRule {
    pub source_level: String,
    pub condition_attributes: Vec<String>,
    pub target_level: String,
    pub target_attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Condition {
    In { attr: String, values: Vec<String> },
    NotIn { attr: String, values: Vec<String> },
    Eq { attr: String, value: String },
}

impl Condition {
    pub fn attribute(&self) -> &str {
        match self {
            Condition::In { attr, .. } | Condition::NotIn { attr, .. } | Condition::Eq { attr, .. } => attr,
        }
    }

    /// Exact, case-sensitive comparison. An instance lacking the attribute
    /// satisfies no condition on it.
    pub fn holds(&self, instance: &Instance) -> bool {
        let Some(v) = instance.attribute(self.attribute()) else {
            return false;
        };
        match self {
            Condition::In { values, .. } => values.iter().any(|x| x == v),
            Condition::NotIn { values, .. } => !values.iter().any(|x| x == v),
            Condition::Eq { value, .. } => value == v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataRule {
    /// Conjunction.
    pub conditions: Vec<Condition>,
    /// Target attribute name to value.
    pub target: BTreeMap<String, String>,
}

impl DataRule {
    pub fn matches(&self, instance: &Instance) -> bool {
        self.conditions.iter().all(|c| c.holds(instance))
    }

    /// Id of the instance this rule creates: the value of the alphabetically
    /// first target attribute, made into an XML name.
    pub fn instance_id(&self) -> String {
        sanitize_name(self.target.values().next().map(String::as_str).unwrap_or(""))
    }
}

fn sanitize_name(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len() + 1);
    for (i, ch) in raw.chars().enumerate() {
        let ok = ch.is_alphanumeric() || matches!(ch, '_' | '-' | '.');
        if i == 0 && !(ch.is_alphabetic() || ch == '_') {
            out.push('_');
            if ok {
                out.push(ch);
                continue;
            }
        }
        out.push(if ok { ch } else { '_' });
    }
    if out.is_empty() {
        out.push('_');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    /// Dimension owning the source level; inferred from the model when absent.
    #[serde(default, rename = "dim", skip_serializing_if = "Option::is_none")]
    pub dim_id: Option<String>,
    pub structure: StructureRule,
    pub data: Vec<DataRule>,
}

fn quote(v: &str) -> String {
    format!("'{}'", v.replace('\\', "\\\\").replace('\'', "\\'"))
}

fn bare_or_quoted(v: &str) -> String {
    if !v.is_empty() && v.chars().all(is_ident_char) && !is_keyword(v) {
        v.to_string()
    } else {
        quote(v)
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.structure;
        writeln!(
            f,
            "if ConditionOn({}, {{{}}}) then Generate({}, {{{}}})",
            s.source_level,
            s.condition_attributes.join(", "),
            s.target_level,
            s.target_attributes.join(", ")
        )?;
        for (n, rule) in self.data.iter().enumerate() {
            let conds: Vec<String> = rule
                .conditions
                .iter()
                .map(|c| match c {
                    Condition::In { attr, values } => format!(
                        "{} in {{{}}}",
                        attr,
                        values.iter().map(|v| quote(v)).collect::<Vec<_>>().join(", ")
                    ),
                    Condition::NotIn { attr, values } => format!(
                        "{} not in {{{}}}",
                        attr,
                        values.iter().map(|v| quote(v)).collect::<Vec<_>>().join(", ")
                    ),
                    Condition::Eq { attr, value } => format!("{} = {}", attr, quote(value)),
                })
                .collect();
            let targets: Vec<String> = rule
                .target
                .iter()
                .map(|(k, v)| format!("{}={{{}}}", k, bare_or_quoted(v)))
                .collect();
            writeln!(
                f,
                "({}) if {} then {}",
                n + 1,
                conds.join(" and "),
                targets.join(", ")
            )?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Parsing

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '@')
}

fn is_keyword(w: &str) -> bool {
    matches!(w, "if" | "then" | "in" | "not" | "and")
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Punct(char),
}

struct Lexer<'a> {
    line: usize,
    chars: Vec<(usize, char)>,
    pos: usize,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, line: usize, col_offset: usize) -> Self {
        Lexer {
            line,
            chars: src.char_indices().map(|(i, c)| (i + col_offset, c)).collect(),
            pos: 0,
            _src: src,
        }
    }

    fn loc(&self) -> Location {
        let col = self
            .chars
            .get(self.pos)
            .map(|(i, _)| *i)
            .unwrap_or_else(|| self.chars.last().map(|(i, _)| i + 1).unwrap_or(0));
        Location::at(self.line, col + 1)
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|(_, c)| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<Option<(Location, Tok)>> {
        self.skip_ws();
        let loc = self.loc();
        let Some(&(_, c)) = self.chars.get(self.pos) else {
            return Ok(None);
        };
        if c == '\'' || c == '"' {
            self.pos += 1;
            let mut s = String::new();
            loop {
                match self.chars.get(self.pos) {
                    None => return Err(Error::parse(loc, "unterminated string")),
                    Some(&(_, '\\')) => {
                        self.pos += 1;
                        match self.chars.get(self.pos) {
                            Some(&(_, e)) => s.push(e),
                            None => return Err(Error::parse(loc, "unterminated string")),
                        }
                    }
                    Some(&(_, q)) if q == c => {
                        self.pos += 1;
                        break;
                    }
                    Some(&(_, other)) => s.push(other),
                }
                self.pos += 1;
            }
            return Ok(Some((loc, Tok::Str(s))));
        }
        if matches!(c, '(' | ')' | '{' | '}' | ',' | '=') {
            self.pos += 1;
            return Ok(Some((loc, Tok::Punct(c))));
        }
        if is_ident_char(c) {
            let mut s = String::new();
            while let Some(&(_, ch)) = self.chars.get(self.pos) {
                if !is_ident_char(ch) {
                    break;
                }
                s.push(ch);
                self.pos += 1;
            }
            return Ok(Some((loc, Tok::Word(s))));
        }
        Err(Error::parse(loc, format!("unexpected character `{}`", c)))
    }
}

struct LineParser<'a> {
    toks: Vec<(Location, Tok)>,
    pos: usize,
    end: Location,
    _lexer: std::marker::PhantomData<&'a ()>,
}

impl<'a> LineParser<'a> {
    fn new(text: &'a str, line: usize, col_offset: usize) -> Result<Self> {
        let mut lexer = Lexer::new(text, line, col_offset);
        let mut toks = Vec::new();
        while let Some(t) = lexer.next()? {
            toks.push(t);
        }
        Ok(LineParser {
            toks,
            pos: 0,
            end: lexer.loc(),
            _lexer: std::marker::PhantomData,
        })
    }

    fn here(&self) -> Location {
        self.toks
            .get(self.pos)
            .map(|(l, _)| l.clone())
            .unwrap_or_else(|| self.end.clone())
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn describe(t: Option<&Tok>) -> String {
        match t {
            None => "end of line".into(),
            Some(Tok::Word(w)) => format!("`{}`", w),
            Some(Tok::Str(s)) => format!("string '{}'", s),
            Some(Tok::Punct(p)) => format!("`{}`", p),
        }
    }

    fn fail<T>(&self, expected: &str) -> Result<T> {
        Err(Error::parse(
            self.here(),
            format!("expected {}, found {}", expected, Self::describe(self.peek())),
        ))
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        match self.peek() {
            Some(Tok::Word(w)) if w == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => self.fail(&format!("`{}`", kw)),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w == kw)
    }

    fn punct(&mut self, p: char) -> Result<()> {
        match self.peek() {
            Some(Tok::Punct(c)) if *c == p => {
                self.pos += 1;
                Ok(())
            }
            _ => self.fail(&format!("`{}`", p)),
        }
    }

    fn at_punct(&self, p: char) -> bool {
        matches!(self.peek(), Some(Tok::Punct(c)) if *c == p)
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Word(w)) if !is_keyword(w) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.fail("an identifier"),
        }
    }

    fn value(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(Tok::Word(w)) if !is_keyword(w) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.fail("a value"),
        }
    }

    fn list<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        self.punct('{')?;
        let mut out = vec![item(self)?];
        while self.at_punct(',') {
            self.pos += 1;
            out.push(item(self)?);
        }
        self.punct('}')?;
        Ok(out)
    }

    fn finish(&self) -> Result<()> {
        if self.pos < self.toks.len() {
            return self.fail("end of line");
        }
        Ok(())
    }

    fn structure(&mut self) -> Result<StructureRule> {
        self.keyword("if")?;
        self.keyword("ConditionOn")?;
        self.punct('(')?;
        let source_level = self.ident()?;
        self.punct(',')?;
        let condition_attributes = self.list(Self::ident)?;
        self.punct(')')?;
        self.keyword("then")?;
        self.keyword("Generate")?;
        self.punct('(')?;
        let target_level = self.ident()?;
        self.punct(',')?;
        let target_attributes = self.list(Self::ident)?;
        self.punct(')')?;
        self.finish()?;
        Ok(StructureRule {
            source_level,
            condition_attributes,
            target_level,
            target_attributes,
        })
    }

    fn condition(&mut self) -> Result<Condition> {
        let attr = self.ident()?;
        if self.at_keyword("in") {
            self.pos += 1;
            let values = self.list(Self::value)?;
            return Ok(Condition::In { attr, values });
        }
        if self.at_keyword("not") {
            self.pos += 1;
            self.keyword("in")?;
            let values = self.list(Self::value)?;
            return Ok(Condition::NotIn { attr, values });
        }
        if self.at_punct('=') {
            self.pos += 1;
            let value = self.value()?;
            return Ok(Condition::Eq { attr, value });
        }
        self.fail("`in`, `not in` or `=`")
    }

    fn data(&mut self) -> Result<DataRule> {
        self.keyword("if")?;
        let mut conditions = vec![self.condition()?];
        while self.at_keyword("and") {
            self.pos += 1;
            conditions.push(self.condition()?);
        }
        self.keyword("then")?;
        let mut target = BTreeMap::new();
        loop {
            let loc = self.here();
            let attr = self.ident()?;
            self.punct('=')?;
            let value = if self.at_punct('{') {
                let mut v = self.list(Self::value)?;
                if v.len() != 1 {
                    return Err(Error::parse(loc, format!("`{}` must be given exactly one value", attr)));
                }
                v.remove(0)
            } else {
                self.value()?
            };
            if target.insert(attr.clone(), value).is_some() {
                return Err(Error::parse(loc, format!("`{}` is assigned twice", attr)));
            }
            if !self.at_punct(',') {
                break;
            }
            self.pos += 1;
        }
        self.finish()?;
        Ok(DataRule { conditions, target })
    }
}

/// Length of a list marker such as `-`, `*`, `(1)`, `1.` or `1)` at the start of `s`.
fn list_marker(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    if matches!(b.first(), Some(b'-' | b'*')) && b.get(1).is_some_and(|c| c.is_ascii_whitespace()) {
        i = 1;
        while b.get(i).is_some_and(|c| c.is_ascii_whitespace()) {
            i += 1;
        }
    }
    let rest = &b[i..];
    let (open, start) = if rest.first() == Some(&b'(') { (true, 1) } else { (false, 0) };
    let digits = rest[start..].iter().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 {
        return i;
    }
    let close = start + digits;
    let ok = match rest.get(close) {
        Some(b')') => true,
        Some(b'.') => !open,
        _ => false,
    };
    if !ok {
        return i;
    }
    let mut j = i + close + 1;
    while b.get(j).is_some_and(|c| c.is_ascii_whitespace()) {
        j += 1;
    }
    j
}

/// Parses rule text: one structure rule line, then one data rule per line.
///
/// Blank lines, `#` comments and section labels ending in `:` are ignored;
/// data rules may carry list markers such as `(1)` or `- (2)`.
pub fn parse_rules(text: &str) -> Result<RuleSet> {
    let mut structure: Option<StructureRule> = None;
    let mut data = Vec::new();
    let mut last_line = 1;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        last_line = line_no;
        let indent = raw.len() - raw.trim_start().len();
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.ends_with(':') && !line.contains(" if ") && !line.starts_with("if") {
            continue;
        }
        let skip = list_marker(line);
        let body = &line[skip..];
        let mut p = LineParser::new(body, line_no, indent + skip)?;
        match &structure {
            None => {
                if !body.contains("ConditionOn") {
                    return Err(Error::parse(
                        Location::at(line_no, indent + 1),
                        "expected a structure rule `if ConditionOn(..) then Generate(..)` first",
                    ));
                }
                structure = Some(p.structure()?);
            }
            Some(_) => {
                if body.contains("ConditionOn") || body.contains("Generate") {
                    return Err(Error::parse(
                        Location::at(line_no, indent + 1),
                        "only one structure rule is allowed per rule set",
                    ));
                }
                data.push(p.data()?);
            }
        }
    }
    let structure = structure
        .ok_or_else(|| Error::parse(Location::at(1, 1), "no structure rule found"))?;
    if data.is_empty() {
        return Err(Error::parse(Location::at(last_line + 1, 1), "no data rules found"));
    }
    Ok(RuleSet {
        dim_id: None,
        structure,
        data,
    })
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleFindingKind {
    UnknownDimension,
    AmbiguousSourceLevel,
    SourceLevelMissing,
    TargetLevelExists,
    InvalidTargetLevel,
    UndeclaredConditionAttribute,
    ConditionOutsideStructure,
    EmptyTargetAttributes,
    UnboundTargetAttribute,
    UnknownTargetAttribute,
    NoDataRules,
    DuplicateTargetInstance,
    EmptyRule,
    Incomplete,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleFinding {
    pub kind: RuleFindingKind,
    /// 1-based data rule number, when the finding concerns one rule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<String>,
    pub findings: Vec<RuleFinding>,
    /// Preview of the groups the rules would create: instance id and members.
    pub groups: Vec<Group>,
}

impl RuleReport {
    pub fn is_ok(&self) -> bool {
        self.findings.is_empty()
    }

    fn push(&mut self, kind: RuleFindingKind, rule: Option<usize>, message: String) {
        self.findings.push(RuleFinding { kind, rule, message });
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub instance: String,
    pub members: Vec<String>,
}

impl RuleSet {
    /// Finds the dimension holding the source level.
    pub fn resolve_dimension<'m>(&self, model: &'m WarehouseModel) -> Result<&'m DimensionSpec, RuleFinding> {
        let level = &self.structure.source_level;
        if let Some(d) = &self.dim_id {
            return model.dimension(d).ok_or_else(|| RuleFinding {
                kind: RuleFindingKind::UnknownDimension,
                rule: None,
                message: format!("unknown dimension `{}`", d),
            });
        }
        let owners: Vec<&DimensionSpec> = model
            .dimensions
            .iter()
            .filter(|d| d.level(level).is_some())
            .collect();
        match owners.as_slice() {
            [one] => Ok(one),
            [] => Err(RuleFinding {
                kind: RuleFindingKind::SourceLevelMissing,
                rule: None,
                message: format!("source level `{}` does not exist", level),
            }),
            many => Err(RuleFinding {
                kind: RuleFindingKind::AmbiguousSourceLevel,
                rule: None,
                message: format!(
                    "source level `{}` exists in several dimensions ({}); name the dimension",
                    level,
                    many.iter().map(|d| d.id.as_str()).collect::<Vec<_>>().join(", ")
                ),
            }),
        }
    }
}

pub fn validate_ruleset(rules: &RuleSet, warehouse: &Warehouse) -> RuleReport {
    let mut report = RuleReport::default();
    let s = &rules.structure;
    let spec = match rules.resolve_dimension(&warehouse.model) {
        Ok(spec) => spec,
        Err(f) => {
            report.findings.push(f);
            return report;
        }
    };
    report.dim = Some(spec.id.clone());
    let Some(source) = spec.level(&s.source_level) else {
        report.push(
            RuleFindingKind::SourceLevelMissing,
            None,
            format!("source level `{}` does not exist in `{}`", s.source_level, spec.id),
        );
        return report;
    };
    if spec.level(&s.target_level).is_some() {
        report.push(
            RuleFindingKind::TargetLevelExists,
            None,
            format!("level `{}` already exists in `{}`", s.target_level, spec.id),
        );
    }
    if s.target_level.is_empty() || s.target_level.chars().any(char::is_whitespace) {
        report.push(
            RuleFindingKind::InvalidTargetLevel,
            None,
            format!("`{}` is not a valid level id", s.target_level),
        );
    }
    for a in &s.condition_attributes {
        if source.attribute(a).is_none() {
            report.push(
                RuleFindingKind::UndeclaredConditionAttribute,
                None,
                format!("`{}` is not an attribute of `{}`", a, s.source_level),
            );
        }
    }
    if s.target_attributes.is_empty() {
        report.push(RuleFindingKind::EmptyTargetAttributes, None, "no target attributes".into());
    }
    if rules.data.is_empty() {
        report.push(RuleFindingKind::NoDataRules, None, "no data rules".into());
    }
    let mut ids: BTreeMap<String, usize> = BTreeMap::new();
    for (n, rule) in rules.data.iter().enumerate() {
        let no = n + 1;
        for c in &rule.conditions {
            if !s.condition_attributes.iter().any(|a| a == c.attribute()) {
                report.push(
                    RuleFindingKind::ConditionOutsideStructure,
                    Some(no),
                    format!("rule {} conditions on `{}`, which the structure rule does not declare", no, c.attribute()),
                );
            }
        }
        for a in &s.target_attributes {
            if !rule.target.contains_key(a) {
                report.push(
                    RuleFindingKind::UnboundTargetAttribute,
                    Some(no),
                    format!("rule {} does not assign `{}`", no, a),
                );
            }
        }
        for a in rule.target.keys() {
            if !s.target_attributes.contains(a) {
                report.push(
                    RuleFindingKind::UnknownTargetAttribute,
                    Some(no),
                    format!("rule {} assigns undeclared attribute `{}`", no, a),
                );
            }
        }
        let id = rule.instance_id();
        if let Some(prev) = ids.insert(id.clone(), no) {
            report.push(
                RuleFindingKind::DuplicateTargetInstance,
                Some(no),
                format!("rules {} and {} both create instance `{}`", prev, no, id),
            );
        }
    }

    let instances = warehouse
        .dimension_data(&spec.id)
        .and_then(|d| d.level(&s.source_level))
        .map(|l| l.instances.as_slice())
        .unwrap_or(&[]);
    let mut groups: Vec<Group> = rules
        .data
        .iter()
        .map(|r| Group {
            instance: r.instance_id(),
            members: Vec::new(),
        })
        .collect();
    for inst in instances {
        let hits: Vec<usize> = rules
            .data
            .iter()
            .enumerate()
            .filter(|(_, r)| r.matches(inst))
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [] => report.push(
                RuleFindingKind::Incomplete,
                None,
                format!("incomplete: {} unmatched", inst.id),
            ),
            [one] => groups[*one].members.push(inst.id.clone()),
            many => report.push(
                RuleFindingKind::Ambiguous,
                None,
                format!(
                    "ambiguous: {} matched by rules {}",
                    inst.id,
                    many.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(", ")
                ),
            ),
        }
    }
    for (n, (rule, g)) in rules.data.iter().zip(&groups).enumerate() {
        if !instances.iter().any(|i| rule.matches(i)) {
            report.push(
                RuleFindingKind::EmptyRule,
                Some(n + 1),
                format!("rule {} (`{}`) matches no instance of `{}`", n + 1, g.instance, s.source_level),
            );
        }
    }
    report.groups = groups;
    report
}

// ---------------------------------------------------------------------------
// Application

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeSummary {
    pub dim: String,
    pub source_level: String,
    pub new_level: String,
    /// The pre-existing coarser level the new level was inserted below.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inserted_below: Option<String>,
    pub groups: Vec<Group>,
    /// Canonical text of the applied rule set.
    pub rules: String,
}

/// Rewrites the model and the affected dimension data to add the new level.
pub fn apply_ruleset(warehouse: &Warehouse, rules: &RuleSet) -> Result<(Warehouse, ChangeSummary)> {
    let report = validate_ruleset(rules, warehouse);
    if !report.is_ok() {
        let msgs: Vec<&str> = report.findings.iter().map(|f| f.message.as_str()).collect();
        return Err(Error::RulesRejected(msgs.join("; ")));
    }
    let s = &rules.structure;
    let dim_id = report.dim.clone().expect("validated rule set has a dimension");
    let spec = warehouse.model.dimension_or_err(&dim_id)?;
    let source_index = spec.level_index(&s.source_level).expect("validated");
    let parent_level = spec.levels.get(source_index + 1).map(|l| l.id.clone());

    let mut model = warehouse.model.clone();
    let dim_spec = model
        .dimensions
        .iter_mut()
        .find(|d| d.id == dim_id)
        .expect("validated");
    dim_spec.levels.insert(
        source_index + 1,
        LevelSpec {
            id: s.target_level.clone(),
            attributes: s
                .target_attributes
                .iter()
                .map(|a| AttributeSpec {
                    name: a.clone(),
                    ty: AttributeType::String,
                })
                .collect(),
        },
    );

    let mut data = warehouse
        .dimension_data(&dim_id)
        .cloned()
        .ok_or_else(|| Error::unknown("dimension data", &dim_id))?;
    let source_pos = data
        .levels
        .iter()
        .position(|l| l.level_id == s.source_level)
        .ok_or_else(|| Error::unknown("level data", &s.source_level))?;

    let mut new_instances: Vec<Instance> = Vec::with_capacity(rules.data.len());
    for (rule, group) in rules.data.iter().zip(&report.groups) {
        let mut inst = Instance::new(group.instance.clone());
        for a in &s.target_attributes {
            inst.attributes.push((a.clone(), rule.target[a].clone()));
        }
        inst.drill_down = Some(group.members.clone());
        if parent_level.is_some() {
            let source = &data.levels[source_pos];
            let mut parents: Vec<&str> = Vec::new();
            for m in &group.members {
                let p = source
                    .instance(m)
                    .and_then(|i| i.roll_up.as_deref())
                    .unwrap_or("");
                if !parents.contains(&p) {
                    parents.push(p);
                }
            }
            if parents.len() > 1 {
                return Err(Error::NonHomogeneousParent {
                    instance: group.instance.clone(),
                    parents: parents.join(", "),
                });
            }
            inst.roll_up = parents.first().map(|p| p.to_string());
        }
        new_instances.push(inst);
    }

    let owner: BTreeMap<&str, &str> = report
        .groups
        .iter()
        .flat_map(|g| g.members.iter().map(move |m| (m.as_str(), g.instance.as_str())))
        .collect();
    for inst in &mut data.levels[source_pos].instances {
        inst.roll_up = owner.get(inst.id.as_str()).map(|p| p.to_string());
    }
    if let Some(parent) = data.levels.get_mut(source_pos + 1) {
        for p in &mut parent.instances {
            let children: Vec<String> = new_instances
                .iter()
                .filter(|n| n.roll_up.as_deref() == Some(p.id.as_str()))
                .map(|n| n.id.clone())
                .collect();
            p.drill_down = if children.is_empty() && p.drill_down.is_none() {
                None
            } else {
                Some(children)
            };
        }
    }
    data.levels.insert(
        source_pos + 1,
        LevelInstances {
            level_id: s.target_level.clone(),
            instances: new_instances,
        },
    );

    let dimensions = warehouse
        .dimensions
        .iter()
        .map(|d| if d.dim_id == dim_id { data.clone() } else { d.clone() })
        .collect();
    let mut applied = rules.clone();
    applied.dim_id = Some(dim_id.clone());
    let summary = ChangeSummary {
        dim: dim_id,
        source_level: s.source_level.clone(),
        new_level: s.target_level.clone(),
        inserted_below: parent_level,
        groups: report.groups,
        rules: applied.to_string(),
    };
    Ok((
        Warehouse {
            model,
            dimensions,
            facts: warehouse.facts.clone(),
        },
        summary,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const LABELED_RULES: &str = "\
Structure rule:
if ConditionOn(location-in-transcription, {location}) then Generate(group-of-location, {group-location})
Data rules:
- (1) if location in {'begin', 'end'} then group-location={extreme}
- (2) if location not in {'begin', 'end'} then group-location={middle}
";

    #[test]
    fn parses_the_listed_rules() {
        let rs = parse_rules(LABELED_RULES).unwrap();
        assert_eq!(rs.structure.source_level, "location-in-transcription");
        assert_eq!(rs.structure.condition_attributes, vec!["location"]);
        assert_eq!(rs.structure.target_level, "group-of-location");
        assert_eq!(rs.structure.target_attributes, vec!["group-location"]);
        assert_eq!(rs.data.len(), 2);
        assert_eq!(
            rs.data[0].conditions,
            vec![Condition::In {
                attr: "location".into(),
                values: vec!["begin".into(), "end".into()]
            }]
        );
        assert!(matches!(rs.data[1].conditions[0], Condition::NotIn { .. }));
        assert_eq!(rs.data[0].instance_id(), "extreme");
        assert_eq!(rs.data[1].instance_id(), "middle");
    }

    #[test]
    fn single_equality_rule() {
        let rs = parse_rules("if ConditionOn(l, {location}) then Generate(g, {g})\nif location = 'begin' then g={b}").unwrap();
        assert_eq!(rs.data.len(), 1);
        assert_eq!(
            rs.data[0].conditions[0],
            Condition::Eq {
                attr: "location".into(),
                value: "begin".into()
            }
        );
    }

    #[test]
    fn missing_generate_is_a_syntax_error() {
        let err = parse_rules("if ConditionOn(l, {a}) then\nif a = 'x' then g={y}").unwrap_err();
        let loc = err.location().unwrap();
        assert_eq!(loc.line, 1);
        assert!(err.to_string().contains("expected `Generate`"), "{err}");
    }

    #[test]
    fn syntax_error_column_points_at_token() {
        let err = parse_rules("if ConditionOn(l, {a}) then Generate(g, {b})\n(1) if a maybe {'x'} then b={y}").unwrap_err();
        let loc = err.location().unwrap();
        assert_eq!((loc.line, loc.column), (2, 10), "{err}");
    }

    #[test]
    fn conjunctions_and_display_round_trip() {
        let text = "if ConditionOn(l, {a, b}) then Generate(g, {x, y})\nif a in {'1', \"it's\"} and b = z then x={'p q'}, y=w";
        let rs = parse_rules(text).unwrap();
        assert_eq!(rs.data[0].conditions.len(), 2);
        assert_eq!(rs.data[0].target["x"], "p q");
        let again = parse_rules(&rs.to_string()).unwrap();
        assert_eq!(again, rs);
    }

    #[test]
    fn rejects_second_structure_rule_and_empty_sets() {
        let two = "if ConditionOn(l, {a}) then Generate(g, {b})\nif ConditionOn(l, {a}) then Generate(h, {b})";
        assert!(parse_rules(two).is_err());
        assert!(parse_rules("if ConditionOn(l, {a}) then Generate(g, {b})").is_err());
        assert!(parse_rules("").is_err());
    }

    #[test]
    fn instance_ids_are_xml_names() {
        assert_eq!(sanitize_name("extreme"), "extreme");
        assert_eq!(sanitize_name("two words"), "two_words");
        assert_eq!(sanitize_name("9lives"), "_9lives");
        assert_eq!(sanitize_name(""), "_");
    }

    #[test]
    fn list_markers() {
        assert_eq!(list_marker("(1) if"), 4);
        assert_eq!(list_marker("- (2) if"), 6);
        assert_eq!(list_marker("3. if"), 3);
        assert_eq!(list_marker("if"), 0);
    }
}
