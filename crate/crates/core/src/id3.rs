//! ID3 decision trees over categorical training tables.
//!
//! Splits maximize information gain (Shannon entropy, base 2). Gain ties go to
//! the earliest column of the table. Growth stops when a node is pure, every
//! column has been used on the path, or no remaining column has positive gain.
//! There is no pruning or depth limit.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::features::{Condition, FeatureKey, FeatureMap, FeatureValue, TargetKind, TrainingTable};
use crate::html::SourceSpan;
use crate::pattern::CodePattern;

/// Gains closer than this are treated as equal.
const GAIN_EPSILON: f64 = 1e-9;

/// A label and the training rows that carry it at a node.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelCount {
    pub label: String,
    pub count: usize,
    /// Table index of the first row with this label.
    pub first_row: usize,
    pub origins: Vec<SourceSpan>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecisionNode {
    Internal {
        split: FeatureKey,
        branches: BTreeMap<FeatureValue, DecisionNode>,
        /// Label counts of every row reaching this node, for unseen values.
        fallback: Vec<LabelCount>,
    },
    Leaf {
        labels: Vec<LabelCount>,
    },
}

impl DecisionNode {
    pub fn labels(&self) -> &[LabelCount] {
        match self {
            DecisionNode::Internal { fallback, .. } => fallback,
            DecisionNode::Leaf { labels } => labels,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub kind: TargetKind,
    pub root: DecisionNode,
    pub trained_on_version: u64,
    pub columns: Vec<FeatureKey>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: String,
    pub confidence: f64,
    pub origins: Vec<SourceSpan>,
}

/// Result of walking the tree for one context.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionPath {
    /// Split keys and the branch values taken.
    pub path: Vec<(FeatureKey, FeatureValue)>,
    /// False when an unseen value sent the walk to a node's fallback.
    pub reached_leaf: bool,
    pub predictions: Vec<Prediction>,
}

/// Ordered label counts: descending count, then earliest row.
fn label_counts(table: &TrainingTable, rows: &[usize]) -> Vec<LabelCount> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut counts: Vec<LabelCount> = Vec::new();
    for &r in rows {
        let row = &table.rows[r];
        let slot = *index.entry(row.target.as_str()).or_insert_with(|| {
            counts.push(LabelCount {
                label: row.target.clone(),
                count: 0,
                first_row: r,
                origins: Vec::new(),
            });
            counts.len() - 1
        });
        counts[slot].count += 1;
        counts[slot].origins.push(row.origin);
    }
    counts.sort_by(|a, b| b.count.cmp(&a.count).then(a.first_row.cmp(&b.first_row)));
    counts
}

pub fn entropy(counts: impl IntoIterator<Item = usize>) -> f64 {
    let counts: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

fn label_entropy(table: &TrainingTable, rows: &[usize]) -> f64 {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for &r in rows {
        *counts.entry(table.rows[r].target.as_str()).or_default() += 1;
    }
    entropy(counts.into_values())
}

fn value_of<'t>(table: &'t TrainingTable, row: usize, key: &FeatureKey) -> &'t FeatureValue {
    table.rows[row].features.get(key).unwrap_or(&None)
}

fn partition(
    table: &TrainingTable,
    rows: &[usize],
    key: &FeatureKey,
) -> BTreeMap<FeatureValue, Vec<usize>> {
    let mut parts: BTreeMap<FeatureValue, Vec<usize>> = BTreeMap::new();
    for &r in rows {
        parts
            .entry(value_of(table, r, key).clone())
            .or_default()
            .push(r);
    }
    parts
}

/// Information gain of splitting `rows` on `key`.
pub fn information_gain(table: &TrainingTable, rows: &[usize], key: &FeatureKey) -> f64 {
    let total = rows.len() as f64;
    let remainder: f64 = partition(table, rows, key)
        .values()
        .map(|part| part.len() as f64 / total * label_entropy(table, part))
        .sum();
    label_entropy(table, rows) - remainder
}

/// The column with maximal gain, earliest column on ties, if any gain is positive.
pub fn best_split<'k>(
    table: &TrainingTable,
    rows: &[usize],
    candidates: &[&'k FeatureKey],
) -> Option<&'k FeatureKey> {
    let mut best: Option<(&FeatureKey, f64)> = None;
    for &key in candidates {
        let gain = information_gain(table, rows, key);
        if best.is_none_or(|(_, g)| gain > g + GAIN_EPSILON) {
            best = Some((key, gain));
        }
    }
    best.filter(|&(_, g)| g > GAIN_EPSILON).map(|(k, _)| k)
}

fn grow(table: &TrainingTable, rows: &[usize], candidates: &[&FeatureKey]) -> DecisionNode {
    let labels = label_counts(table, rows);
    if labels.len() <= 1 {
        return DecisionNode::Leaf { labels };
    }
    let Some(split) = best_split(table, rows, candidates) else {
        return DecisionNode::Leaf { labels };
    };
    let remaining: Vec<&FeatureKey> = candidates.iter().copied().filter(|&k| k != split).collect();
    let branches = partition(table, rows, split)
        .into_iter()
        .map(|(value, part)| (value, grow(table, &part, &remaining)))
        .collect();
    DecisionNode::Internal {
        split: split.clone(),
        branches,
        fallback: labels,
    }
}

impl DecisionTree {
    pub fn train(table: &TrainingTable, version: u64) -> DecisionTree {
        let rows: Vec<usize> = (0..table.rows.len()).collect();
        let candidates: Vec<&FeatureKey> = table.columns.iter().collect();
        DecisionTree {
            kind: table.kind,
            root: grow(table, &rows, &candidates),
            trained_on_version: version,
            columns: table.columns.clone(),
        }
    }

    pub fn predict(&self, context: &FeatureMap) -> Vec<Prediction> {
        self.predict_path(context).predictions
    }

    pub fn predict_path(&self, context: &FeatureMap) -> PredictionPath {
        let mut node = &self.root;
        let mut path = Vec::new();
        let mut reached_leaf = true;
        while let DecisionNode::Internal {
            split, branches, ..
        } = node
        {
            let value = context.get(split).cloned().flatten();
            match branches.get(&value) {
                Some(next) => {
                    path.push((split.clone(), value));
                    node = next;
                }
                None => {
                    reached_leaf = false;
                    break;
                }
            }
        }
        let labels = node.labels();
        let total: usize = labels.iter().map(|l| l.count).sum();
        let predictions = labels
            .iter()
            .map(|l| Prediction {
                label: l.label.clone(),
                confidence: l.count as f64 / total as f64,
                origins: l.origins.clone(),
            })
            .collect();
        PredictionPath {
            path,
            reached_leaf,
            predictions,
        }
    }

    /// One standard pattern per (root-to-leaf path, leaf label), in branch
    /// order and then leaf label order.
    pub fn extract_rules(&self) -> Vec<CodePattern> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect_rules(&self.root, &mut path, &mut out);
        out
    }

    fn collect_rules(
        &self,
        node: &DecisionNode,
        path: &mut Vec<(FeatureKey, FeatureValue)>,
        out: &mut Vec<CodePattern>,
    ) {
        match node {
            DecisionNode::Internal {
                split, branches, ..
            } => {
                for (value, child) in branches {
                    path.push((split.clone(), value.clone()));
                    self.collect_rules(child, path, out);
                    path.pop();
                }
            }
            DecisionNode::Leaf { labels } => {
                let (conditions, absent) = split_path(path);
                let total: usize = labels.iter().map(|l| l.count).sum();
                for l in labels {
                    out.push(CodePattern::learned(
                        self.kind,
                        conditions.clone(),
                        absent.clone(),
                        l.label.clone(),
                        l.count,
                        l.count as f64 / total as f64,
                    ));
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn depth(node: &DecisionNode) -> usize {
            match node {
                DecisionNode::Leaf { .. } => 0,
                DecisionNode::Internal { branches, .. } => {
                    1 + branches.values().map(depth).max().unwrap_or(0)
                }
            }
        }
        depth(&self.root)
    }
}

/// Separates a tree path into present-valued conditions and absent keys.
pub fn split_path(
    path: &[(FeatureKey, FeatureValue)],
) -> (BTreeSet<Condition>, BTreeSet<FeatureKey>) {
    let mut conditions = BTreeSet::new();
    let mut absent = BTreeSet::new();
    for (key, value) in path {
        match value {
            Some(v) => {
                conditions.insert(Condition::new(key.clone(), v.clone()));
            }
            None => {
                absent.insert(key.clone());
            }
        }
    }
    (conditions, absent)
}

pub fn train(table: &TrainingTable, version: u64) -> DecisionTree {
    DecisionTree::train(table, version)
}

pub fn predict(tree: &DecisionTree, context: &FeatureMap) -> Vec<Prediction> {
    tree.predict(context)
}

pub fn extract_rules(tree: &DecisionTree) -> Vec<CodePattern> {
    tree.extract_rules()
}
