//! Code patterns: IF/THEN rules over condition features.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::features::{Condition, FeatureKey, FeatureMap, TargetKind};

/// Stable identity derived from kind, conditions and target.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatternId(String);

impl PatternId {
    pub fn compute<'c>(
        kind: TargetKind,
        conditions: impl IntoIterator<Item = &'c Condition>,
        target: &str,
    ) -> PatternId {
        let sorted: BTreeSet<&Condition> = conditions.into_iter().collect();
        let mut hasher = Sha256::new();
        let mut field = |s: &str| {
            hasher.update((s.len() as u64).to_le_bytes());
            hasher.update(s.as_bytes());
        };
        field(kind.as_str());
        for c in sorted {
            field(&c.key.to_string());
            field(&c.value);
        }
        field(target);
        let digest = hasher.finalize();
        PatternId(digest[..8].iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PatternId {
    fn from(s: &str) -> Self {
        PatternId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternState {
    Standard,
    Prioritized,
    Blacklisted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternSource {
    Learned,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodePattern {
    pub id: PatternId,
    pub kind: TargetKind,
    pub conditions: BTreeSet<Condition>,
    /// Keys the learned tree path required to be absent. Not part of the
    /// displayed rule or the identity.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub absent: BTreeSet<FeatureKey>,
    pub target: String,
    pub state: PatternState,
    pub source: PatternSource,
    pub support: usize,
    pub confidence: f64,
}

impl CodePattern {
    pub fn learned(
        kind: TargetKind,
        conditions: BTreeSet<Condition>,
        absent: BTreeSet<FeatureKey>,
        target: impl Into<String>,
        support: usize,
        confidence: f64,
    ) -> CodePattern {
        let target = target.into();
        CodePattern {
            id: PatternId::compute(kind, &conditions, &target),
            kind,
            conditions,
            absent,
            target,
            state: PatternState::Standard,
            source: PatternSource::Learned,
            support,
            confidence,
        }
    }

    /// A hand-written pattern in the prioritized state, stats zeroed.
    pub fn custom(
        kind: TargetKind,
        conditions: impl IntoIterator<Item = Condition>,
        target: impl Into<String>,
    ) -> CodePattern {
        let conditions: BTreeSet<Condition> = conditions.into_iter().collect();
        let target = target.into();
        CodePattern {
            id: PatternId::compute(kind, &conditions, &target),
            kind,
            conditions,
            absent: BTreeSet::new(),
            target,
            state: PatternState::Prioritized,
            source: PatternSource::Custom,
            support: 0,
            confidence: 0.0,
        }
    }

    pub fn with_state(mut self, state: PatternState) -> Self {
        self.state = state;
        self
    }

    pub fn is_unconditional(&self) -> bool {
        self.conditions.is_empty()
    }

    /// Whether every stated condition holds for the given features.
    pub fn applies(&self, features: &FeatureMap) -> bool {
        self.conditions.iter().all(|c| c.holds(features))
    }

    /// Like [`applies`](Self::applies), but also checks the implicit absence
    /// conditions of the tree path the pattern came from.
    pub fn matches_path(&self, features: &FeatureMap) -> bool {
        self.applies(features)
            && self
                .absent
                .iter()
                .all(|k| features.get(k).is_none_or(|v| v.is_none()))
    }

    /// The human-readable rule, e.g. `IF parent_tag = figure THEN tag figcaption`.
    pub fn rule(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CodePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("IF ")?;
        if self.conditions.is_empty() {
            f.write_str("always")?;
        }
        for (i, c) in self.conditions.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, " THEN {} {}", self.kind, self.target)
    }
}
