//! The pattern lists of a document session and their lifecycle.
//!
//! Learned patterns live in the standard list and are replaced wholesale on
//! every retrain. Prioritized and blacklisted patterns persist across
//! retraining until the user votes them elsewhere.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{Condition, TargetKind, TrainingTable};
use crate::pattern::{CodePattern, PatternId, PatternSource, PatternState};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StoreError {
    #[error("no pattern with id {0}")]
    NotFound(PatternId),
    #[error("invalid pattern: {0}")]
    Validation(String),
    #[error("cannot import pattern file: {0}")]
    Import(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoteDirection {
    Up,
    Down,
}

/// Standard patterns sharing kind and conditions, most confident first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictGroup {
    pub kind: TargetKind,
    pub conditions: BTreeSet<Condition>,
    pub members: Vec<CodePattern>,
}

impl ConflictGroup {
    pub fn primary(&self) -> &CodePattern {
        &self.members[0]
    }

    pub fn alternatives(&self) -> &[CodePattern] {
        &self.members[1..]
    }

    pub fn is_conflict(&self) -> bool {
        self.members.len() > 1
    }
}

/// A pattern as written to an exported file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternRecord {
    pub kind: TargetKind,
    pub conditions: Vec<Condition>,
    pub target: String,
    pub source: PatternSource,
}

impl PatternRecord {
    fn from_pattern(p: &CodePattern) -> Self {
        PatternRecord {
            kind: p.kind,
            conditions: p.conditions.iter().cloned().collect(),
            target: p.target.clone(),
            source: p.source,
        }
    }

    fn into_pattern(self, state: PatternState) -> Result<CodePattern, StoreError> {
        if self.target.trim().is_empty() {
            return Err(StoreError::Import(format!(
                "{} pattern has an empty target",
                self.kind
            )));
        }
        if self.source == PatternSource::Custom && self.conditions.is_empty() {
            return Err(StoreError::Import(format!(
                "custom pattern for `{}` has no conditions",
                self.target
            )));
        }
        let mut p = CodePattern::custom(self.kind, self.conditions, self.target);
        p.source = self.source;
        p.state = state;
        Ok(p)
    }
}

/// Exported prioritized and blacklisted patterns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternFile {
    pub format_version: u32,
    pub prioritized: Vec<PatternRecord>,
    pub blacklisted: Vec<PatternRecord>,
}

impl PatternFile {
    pub fn from_json(json: &str) -> Result<PatternFile, StoreError> {
        serde_json::from_str(json).map_err(|e| StoreError::Import(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pattern file serializes")
    }

    pub fn is_empty(&self) -> bool {
        self.prioritized.is_empty() && self.blacklisted.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct PatternStore {
    standard: IndexMap<PatternId, CodePattern>,
    prioritized: IndexMap<PatternId, CodePattern>,
    blacklisted: IndexMap<PatternId, CodePattern>,
    blacklist_epoch: u64,
}

impl PatternStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bumped whenever blacklist membership changes.
    pub fn blacklist_epoch(&self) -> u64 {
        self.blacklist_epoch
    }

    /// Replaces the standard patterns of `kind`, skipping ids the user owns.
    pub fn refresh(&mut self, kind: TargetKind, learned: Vec<CodePattern>) {
        self.standard.retain(|_, p| p.kind != kind);
        for mut p in learned {
            if self.prioritized.contains_key(&p.id) || self.blacklisted.contains_key(&p.id) {
                continue;
            }
            p.state = PatternState::Standard;
            self.standard.entry(p.id.clone()).or_insert(p);
        }
    }

    /// Recomputes support and confidence of user-owned patterns of the
    /// table's kind: support counts rows matching conditions and target,
    /// confidence divides it by the rows matching the conditions.
    pub fn reevaluate(&mut self, table: &TrainingTable) {
        for p in self
            .prioritized
            .values_mut()
            .chain(self.blacklisted.values_mut())
            .filter(|p| p.kind == table.kind)
        {
            let applicable: Vec<_> = table
                .rows
                .iter()
                .filter(|r| p.applies(&r.features))
                .collect();
            p.support = applicable.iter().filter(|r| r.target == p.target).count();
            p.confidence = if applicable.is_empty() {
                0.0
            } else {
                p.support as f64 / applicable.len() as f64
            };
        }
    }

    pub fn get(&self, id: &PatternId) -> Option<&CodePattern> {
        self.standard
            .get(id)
            .or_else(|| self.prioritized.get(id))
            .or_else(|| self.blacklisted.get(id))
    }

    pub fn standard(&self, kind: TargetKind) -> impl Iterator<Item = &CodePattern> {
        self.standard.values().filter(move |p| p.kind == kind)
    }

    pub fn prioritized(&self, kind: TargetKind) -> impl Iterator<Item = &CodePattern> {
        self.prioritized.values().filter(move |p| p.kind == kind)
    }

    pub fn blacklisted(&self, kind: TargetKind) -> impl Iterator<Item = &CodePattern> {
        self.blacklisted.values().filter(move |p| p.kind == kind)
    }

    pub fn len(&self) -> usize {
        self.standard.len() + self.prioritized.len() + self.blacklisted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Standard patterns of `kind` grouped by shared conditions.
    pub fn groups(&self, kind: TargetKind) -> Vec<ConflictGroup> {
        let mut groups: IndexMap<&BTreeSet<Condition>, Vec<CodePattern>> = IndexMap::new();
        for p in self.standard(kind) {
            groups.entry(&p.conditions).or_default().push(p.clone());
        }
        groups
            .into_iter()
            .map(|(conditions, mut members)| {
                // stable: equal confidence keeps tree order
                members.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
                ConflictGroup {
                    kind,
                    conditions: conditions.clone(),
                    members,
                }
            })
            .collect()
    }

    fn take(&mut self, id: &PatternId) -> Option<CodePattern> {
        if let Some(p) = self.standard.shift_remove(id) {
            return Some(p);
        }
        if let Some(p) = self.prioritized.shift_remove(id) {
            return Some(p);
        }
        self.blacklisted.shift_remove(id).inspect(|_| {
            self.blacklist_epoch += 1;
        })
    }

    fn put(&mut self, mut p: CodePattern, state: PatternState) {
        p.state = state;
        let list = match state {
            PatternState::Standard => &mut self.standard,
            PatternState::Prioritized => &mut self.prioritized,
            PatternState::Blacklisted => {
                self.blacklist_epoch += 1;
                &mut self.blacklisted
            }
        };
        list.insert(p.id.clone(), p);
    }

    /// Moves a pattern one step along blacklisted, standard, prioritized.
    pub fn vote(&mut self, id: &PatternId, direction: VoteDirection) -> Result<PatternState, StoreError> {
        let current = self
            .get(id)
            .map(|p| p.state)
            .ok_or_else(|| StoreError::NotFound(id.clone()))?;
        let next = match (current, direction) {
            (PatternState::Blacklisted, VoteDirection::Up) => PatternState::Standard,
            (PatternState::Standard, VoteDirection::Up) => PatternState::Prioritized,
            (PatternState::Prioritized, VoteDirection::Up) => PatternState::Prioritized,
            (PatternState::Prioritized, VoteDirection::Down) => PatternState::Standard,
            (PatternState::Standard, VoteDirection::Down) => PatternState::Blacklisted,
            (PatternState::Blacklisted, VoteDirection::Down) => PatternState::Blacklisted,
        };
        if next != current {
            let p = self.take(id).expect("pattern present");
            self.put(p, next);
        }
        Ok(next)
    }

    /// Adds a hand-written pattern as prioritized. An existing pattern with the
    /// same identity is moved to prioritized instead.
    pub fn add_custom(
        &mut self,
        kind: TargetKind,
        conditions: impl IntoIterator<Item = Condition>,
        target: &str,
    ) -> Result<CodePattern, StoreError> {
        let target = target.trim();
        let conditions: Vec<Condition> = conditions.into_iter().collect();
        if target.is_empty() || conditions.is_empty() {
            return Err(StoreError::Validation(
                "a pattern must have a target and at least one condition".into(),
            ));
        }
        if let Some(c) = conditions.iter().find(|c| c.value.is_empty()) {
            return Err(StoreError::Validation(format!(
                "condition on {} has an empty value",
                c.key
            )));
        }
        let pattern = CodePattern::custom(kind, conditions, target);
        let pattern = match self.take(&pattern.id) {
            Some(existing) => existing,
            None => pattern,
        };
        let id = pattern.id.clone();
        self.put(pattern, PatternState::Prioritized);
        Ok(self.prioritized[&id].clone())
    }

    pub fn export(&self) -> PatternFile {
        PatternFile {
            format_version: FORMAT_VERSION,
            prioritized: self.prioritized.values().map(PatternRecord::from_pattern).collect(),
            blacklisted: self.blacklisted.values().map(PatternRecord::from_pattern).collect(),
        }
    }

    /// Merges a pattern file by id; incoming state wins. On error the store is
    /// left unchanged.
    pub fn import(&mut self, file: &PatternFile) -> Result<(), StoreError> {
        if file.format_version != FORMAT_VERSION {
            return Err(StoreError::Import(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                file.format_version
            )));
        }
        let mut incoming = Vec::new();
        for (records, state) in [
            (&file.prioritized, PatternState::Prioritized),
            (&file.blacklisted, PatternState::Blacklisted),
        ] {
            for r in records {
                incoming.push(r.clone().into_pattern(state)?);
            }
        }
        let mut states: IndexMap<&PatternId, PatternState> = IndexMap::new();
        for p in &incoming {
            if states.insert(&p.id, p.state).is_some_and(|s| s != p.state) {
                return Err(StoreError::Import(format!(
                    "pattern `{p}` is listed as both prioritized and blacklisted"
                )));
            }
        }
        for p in incoming {
            let list = match p.state {
                PatternState::Prioritized => &mut self.prioritized,
                _ => &mut self.blacklisted,
            };
            if let Some(existing) = list.get_mut(&p.id) {
                existing.source = p.source;
                continue;
            }
            self.take(&p.id);
            let state = p.state;
            self.put(p, state);
        }
        Ok(())
    }
}
