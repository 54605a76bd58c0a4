//! Condition features and the per-kind training tables fed to the trees.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::html::{Document, ElementNode, SourceSpan};
use crate::pattern::CodePattern;

/// Which token a table, tree or pattern predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Tag,
    Attribute,
    Value,
}

impl TargetKind {
    pub const ALL: [TargetKind; 3] = [TargetKind::Tag, TargetKind::Attribute, TargetKind::Value];

    pub fn as_str(self) -> &'static str {
        match self {
            TargetKind::Tag => "tag",
            TargetKind::Attribute => "attribute",
            TargetKind::Value => "value",
        }
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tag" => Ok(TargetKind::Tag),
            "attribute" => Ok(TargetKind::Attribute),
            "value" => Ok(TargetKind::Value),
            other => Err(format!("unknown target kind `{other}`")),
        }
    }
}

/// A condition feature column. Variant order is the column order of a table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FeatureKey {
    ParentTag,
    ParentAttr(String),
    CurrentTag,
    PrecedingAttribute,
}

impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureKey::ParentTag => f.write_str("parent_tag"),
            FeatureKey::ParentAttr(name) => write!(f, "parent_attr:{name}"),
            FeatureKey::CurrentTag => f.write_str("current_tag"),
            FeatureKey::PrecedingAttribute => f.write_str("preceding_attribute"),
        }
    }
}

impl FromStr for FeatureKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parent_tag" => Ok(FeatureKey::ParentTag),
            "current_tag" => Ok(FeatureKey::CurrentTag),
            "preceding_attribute" => Ok(FeatureKey::PrecedingAttribute),
            _ => match s.strip_prefix("parent_attr:") {
                Some(name) if !name.is_empty() => Ok(FeatureKey::ParentAttr(name.to_string())),
                _ => Err(format!("unknown feature key `{s}`")),
            },
        }
    }
}

impl From<FeatureKey> for String {
    fn from(key: FeatureKey) -> String {
        key.to_string()
    }
}

impl TryFrom<String> for FeatureKey {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// `None` is the absent value, rendered as [`ABSENT`].
pub type FeatureValue = Option<String>;

/// Rendering of an absent feature value.
pub const ABSENT: &str = "\u{2205}";

/// Renders a value for display, escaping literal occurrences of the sentinel.
pub fn render_value(value: &FeatureValue) -> String {
    match value {
        None => ABSENT.to_string(),
        Some(v) if v == ABSENT || v.starts_with('\\') => format!("\\{v}"),
        Some(v) => v.clone(),
    }
}

pub type FeatureMap = BTreeMap<FeatureKey, FeatureValue>;

/// A present-valued condition such as `parent_tag = figure`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "WireCondition", try_from = "WireCondition")]
pub struct Condition {
    pub key: FeatureKey,
    pub value: String,
}

impl Condition {
    pub fn new(key: FeatureKey, value: impl Into<String>) -> Self {
        Condition {
            key,
            value: value.into(),
        }
    }

    pub fn parent_tag(tag: &str) -> Self {
        Self::new(FeatureKey::ParentTag, tag)
    }

    pub fn parent_attr(name: &str, value: &str) -> Self {
        Self::new(FeatureKey::ParentAttr(name.to_string()), value)
    }

    pub fn current_tag(tag: &str) -> Self {
        Self::new(FeatureKey::CurrentTag, tag)
    }

    pub fn preceding_attribute(name: &str) -> Self {
        Self::new(FeatureKey::PrecedingAttribute, name)
    }

    pub fn holds(&self, features: &FeatureMap) -> bool {
        matches!(features.get(&self.key), Some(Some(v)) if *v == self.value)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.key, self.value)
    }
}

/// JSON shape of a condition in pattern files and API bodies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireCondition {
    pub key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attr_name: Option<String>,
    pub value: String,
}

impl From<Condition> for WireCondition {
    fn from(c: Condition) -> Self {
        let (key, attr_name) = match c.key {
            FeatureKey::ParentTag => ("parent_tag", None),
            FeatureKey::ParentAttr(name) => ("parent_attr", Some(name)),
            FeatureKey::CurrentTag => ("current_tag", None),
            FeatureKey::PrecedingAttribute => ("preceding_attribute", None),
        };
        WireCondition {
            key: key.to_string(),
            attr_name,
            value: c.value,
        }
    }
}

impl TryFrom<WireCondition> for Condition {
    type Error = String;

    fn try_from(w: WireCondition) -> Result<Self, Self::Error> {
        let key = match w.key.as_str() {
            "parent_tag" => FeatureKey::ParentTag,
            "current_tag" => FeatureKey::CurrentTag,
            "preceding_attribute" => FeatureKey::PrecedingAttribute,
            "parent_attr" => match w.attr_name {
                Some(name) if !name.trim().is_empty() => {
                    FeatureKey::ParentAttr(name.trim().to_ascii_lowercase())
                }
                _ => return Err("parent_attr condition needs a non-empty attr_name".into()),
            },
            other => return Err(format!("unknown condition key `{other}`")),
        };
        Ok(Condition { key, value: w.value })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRow {
    pub features: FeatureMap,
    pub target: String,
    pub origin: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTable {
    pub kind: TargetKind,
    pub columns: Vec<FeatureKey>,
    pub rows: Vec<TrainingRow>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("pattern {id} predicts {pattern_kind} but the table holds {table_kind} rows")]
    KindMismatch {
        id: String,
        pattern_kind: TargetKind,
        table_kind: TargetKind,
    },
}

/// Features describing a site: the parent's tag and attributes, plus the
/// current tag and attribute name when given. Only present values are stored;
/// lookups of missing keys mean absent.
pub fn context_features(
    parent: Option<&ElementNode>,
    current_tag: Option<&str>,
    preceding_attribute: Option<&str>,
) -> FeatureMap {
    let mut features = FeatureMap::new();
    features.insert(FeatureKey::ParentTag, parent.map(|p| p.tag.clone()));
    if let Some(parent) = parent {
        for attr in &parent.attributes {
            features.insert(
                FeatureKey::ParentAttr(attr.name.clone()),
                Some(attr.value.clone()),
            );
        }
    }
    if let Some(tag) = current_tag {
        features.insert(FeatureKey::CurrentTag, Some(tag.to_string()));
    }
    if let Some(name) = preceding_attribute {
        features.insert(FeatureKey::PrecedingAttribute, Some(name.to_string()));
    }
    features
}

impl TrainingTable {
    pub fn empty(kind: TargetKind) -> Self {
        TrainingTable {
            kind,
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Builds the table for one target kind from every element of the document.
    pub fn build(doc: &Document, kind: TargetKind) -> TrainingTable {
        let parent_attrs: BTreeSet<&str> = doc
            .elements()
            .filter(|(_, n)| !n.children.is_empty())
            .flat_map(|(_, n)| n.attributes.iter().map(|a| a.name.as_str()))
            .collect();

        let mut columns = vec![FeatureKey::ParentTag];
        columns.extend(
            parent_attrs
                .iter()
                .map(|name| FeatureKey::ParentAttr(name.to_string())),
        );
        if kind != TargetKind::Tag {
            columns.push(FeatureKey::CurrentTag);
        }
        if kind == TargetKind::Value {
            columns.push(FeatureKey::PrecedingAttribute);
        }

        let row = |parent, current: Option<&str>, preceding: Option<&str>, target: &str, origin| {
            let present = context_features(parent, current, preceding);
            let features = columns
                .iter()
                .map(|key| (key.clone(), present.get(key).cloned().flatten()))
                .collect();
            TrainingRow {
                features,
                target: target.to_string(),
                origin,
            }
        };

        let mut rows = Vec::new();
        for (id, node) in doc.elements() {
            let parent = doc.parent(id);
            match kind {
                TargetKind::Tag => {
                    if parent.is_some() {
                        rows.push(row(parent, None, None, &node.tag, node.span));
                    }
                }
                TargetKind::Attribute => {
                    for attr in &node.attributes {
                        rows.push(row(parent, Some(&node.tag), None, &attr.name, node.span));
                    }
                }
                TargetKind::Value => {
                    for attr in node.attributes.iter().filter(|a| !a.value.is_empty()) {
                        rows.push(row(
                            parent,
                            Some(&node.tag),
                            Some(&attr.name),
                            &attr.value,
                            node.span,
                        ));
                    }
                }
            }
        }

        TrainingTable {
            kind,
            columns,
            rows,
        }
    }

    /// Drops every row matched by a blacklisted pattern (conditions and target).
    pub fn prune(&self, blacklist: &[CodePattern]) -> Result<TrainingTable, TableError> {
        if let Some(p) = blacklist.iter().find(|p| p.kind != self.kind) {
            return Err(TableError::KindMismatch {
                id: p.id.to_string(),
                pattern_kind: p.kind,
                table_kind: self.kind,
            });
        }
        let rows = self
            .rows
            .iter()
            .filter(|row| {
                !blacklist
                    .iter()
                    .any(|p| p.target == row.target && p.applies(&row.features))
            })
            .cloned()
            .collect();
        Ok(TrainingTable {
            kind: self.kind,
            columns: self.columns.clone(),
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV dump: one column per feature key in column order, then target and origin.
    pub fn to_csv(&self) -> String {
        let mut out = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = self.columns.iter().map(|k| k.to_string()).collect();
        header.push("target".into());
        header.push("origin".into());
        out.write_record(&header).expect("write to memory");
        for row in &self.rows {
            let mut record: Vec<String> = self
                .columns
                .iter()
                .map(|k| render_value(row.features.get(k).unwrap_or(&None)))
                .collect();
            record.push(row.target.clone());
            record.push(format!("{}:{}", row.origin.start_line, row.origin.start_col));
            out.write_record(&record).expect("write to memory");
        }
        String::from_utf8(out.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }
}

pub fn build_table(doc: &Document, kind: TargetKind) -> TrainingTable {
    TrainingTable::build(doc, kind)
}

pub fn prune_rows(
    table: &TrainingTable,
    blacklist: &[CodePattern],
) -> Result<TrainingTable, TableError> {
    table.prune(blacklist)
}
