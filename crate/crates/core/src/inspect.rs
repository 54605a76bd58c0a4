//! Pattern inspector: classifies document sites against one pattern.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::features::{context_features, render_value, Condition, FeatureKey, FeatureMap, TargetKind};
use crate::html::{Document, ElementNode, SourceSpan};
use crate::pattern::{CodePattern, PatternId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Positive,
    Similar,
    Violation,
}

impl Classification {
    pub fn level(self) -> &'static str {
        match self {
            Classification::Positive => "POSITIVE",
            Classification::Similar => "SIMILAR",
            Classification::Violation => "VIOLATION",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionSite {
    pub span: SourceSpan,
    pub classification: Classification,
    pub pattern_id: PatternId,
    pub rule: String,
    pub witness: String,
}

impl fmt::Display for InspectionSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} \u{201c}{}\u{201d} {}",
            self.classification.level(),
            self.span,
            self.pattern_id,
            self.rule,
            self.witness
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionResult {
    pub pattern_id: PatternId,
    pub sites: Vec<InspectionSite>,
}

impl InspectionResult {
    pub fn count(&self, classification: Classification) -> usize {
        self.sites
            .iter()
            .filter(|s| s.classification == classification)
            .count()
    }

    pub fn of(&self, classification: Classification) -> impl Iterator<Item = &InspectionSite> {
        self.sites
            .iter()
            .filter(move |s| s.classification == classification)
    }
}

/// A place where the pattern could apply, with its features and whether the
/// target is present there.
struct Site {
    span: SourceSpan,
    features: FeatureMap,
    present: bool,
    witness_present: String,
    witness_missing: String,
}

fn children_tags(doc: &Document, node: &ElementNode) -> Vec<String> {
    node.children.iter().map(|&c| doc.node(c).tag.clone()).collect()
}

fn sites(doc: &Document, pattern: &CodePattern) -> Vec<Site> {
    let target = pattern.target.as_str();
    let mut out = Vec::new();
    for (id, node) in doc.elements() {
        match pattern.kind {
            TargetKind::Tag => {
                let found = node
                    .children
                    .iter()
                    .map(|&c| doc.node(c))
                    .find(|c| c.tag == target);
                let children = children_tags(doc, node);
                out.push(Site {
                    span: node.span,
                    features: context_features(Some(node), None, None),
                    present: found.is_some(),
                    witness_present: found
                        .map(|c| format!("child <{target}> at {}:{}", c.span.start_line, c.span.start_col))
                        .unwrap_or_default(),
                    witness_missing: if children.is_empty() {
                        format!("no child <{target}>; element is empty")
                    } else {
                        format!("no child <{target}>; children: {}", children.join(", "))
                    },
                });
            }
            TargetKind::Attribute => {
                let parent = doc.parent(id);
                out.push(Site {
                    span: node.start_tag,
                    features: context_features(parent, Some(&node.tag), None),
                    present: node.attribute(target).is_some(),
                    witness_present: format!("<{}> has attribute `{target}`", node.tag),
                    witness_missing: format!("<{}> lacks attribute `{target}`", node.tag),
                });
            }
            TargetKind::Value => {
                let parent = doc.parent(id);
                for attr in &node.attributes {
                    out.push(Site {
                        span: node.start_tag,
                        features: context_features(parent, Some(&node.tag), Some(&attr.name)),
                        present: attr.value == target,
                        witness_present: format!("{}=\"{}\"", attr.name, attr.value),
                        witness_missing: format!("{}=\"{}\", expected \"{target}\"", attr.name, attr.value),
                    });
                }
            }
        }
    }
    out
}

fn is_parent_attr(c: &Condition) -> bool {
    matches!(c.key, FeatureKey::ParentAttr(_))
}

fn classify(pattern: &CodePattern, site: &Site) -> Option<(Classification, String)> {
    let exact = pattern.applies(&site.features);
    if exact {
        return Some(if site.present {
            (Classification::Positive, site.witness_present.clone())
        } else {
            (Classification::Violation, site.witness_missing.clone())
        });
    }
    let others_hold = pattern
        .conditions
        .iter()
        .filter(|c| !is_parent_attr(c))
        .all(|c| c.holds(&site.features));
    if !others_hold || !site.present {
        return None;
    }
    let differing: Vec<String> = pattern
        .conditions
        .iter()
        .filter(|c| is_parent_attr(c) && !c.holds(&site.features))
        .map(|c| format!("{} = {}", c.key, render_value(&site.features.get(&c.key).cloned().flatten())))
        .collect();
    Some((
        Classification::Similar,
        format!("{}; differs in {}", site.witness_present, differing.join(", ")),
    ))
}

pub fn inspect(doc: &Document, pattern: &CodePattern) -> InspectionResult {
    let rule = pattern.rule();
    let mut seen: BTreeSet<(SourceSpan, Classification)> = BTreeSet::new();
    let mut result: Vec<InspectionSite> = Vec::new();
    for site in sites(doc, pattern) {
        let Some((classification, witness)) = classify(pattern, &site) else {
            continue;
        };
        if !seen.insert((site.span, classification)) {
            continue;
        }
        result.push(InspectionSite {
            span: site.span,
            classification,
            pattern_id: pattern.id.clone(),
            rule: rule.clone(),
            witness,
        });
    }
    // a start tag with one matching attribute is not also a violation
    let positive: BTreeSet<SourceSpan> = seen
        .iter()
        .filter(|(_, c)| *c == Classification::Positive)
        .map(|(s, _)| *s)
        .collect();
    result.retain(|s| s.classification != Classification::Violation || !positive.contains(&s.span));
    result.sort_by(|a, b| a.span.cmp(&b.span).then(a.classification.cmp(&b.classification)));
    InspectionResult {
        pattern_id: pattern.id.clone(),
        sites: result,
    }
}

/// Violations of every given pattern, one per (span, pattern), ordered by span.
pub fn lint<'p>(doc: &Document, patterns: impl IntoIterator<Item = &'p CodePattern>) -> Vec<InspectionSite> {
    let mut seen: BTreeSet<(SourceSpan, PatternId)> = BTreeSet::new();
    let mut out: Vec<InspectionSite> = patterns
        .into_iter()
        .flat_map(|p| inspect(doc, p).sites)
        .filter(|s| s.classification == Classification::Violation)
        .filter(|s| seen.insert((s.span, s.pattern_id.clone())))
        .collect();
    out.sort_by(|a, b| a.span.cmp(&b.span).then_with(|| a.pattern_id.cmp(&b.pattern_id)));
    out
}
