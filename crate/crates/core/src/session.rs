//! A document with its pattern store and tree cache.

use serde::{Deserialize, Serialize};

use crate::completion::{complete, CompletionList, CompletionQuery, TreeCache};
use crate::features::{Condition, TargetKind, TrainingTable};
use crate::html::{Document, PositionError};
use crate::inspect::{inspect, lint, InspectionResult, InspectionSite};
use crate::pattern::{CodePattern, PatternId, PatternState};
use crate::store::{ConflictGroup, PatternFile, PatternStore, StoreError, VoteDirection};

/// Default `min_support` for [`Session::lint`].
pub const LINT_MIN_SUPPORT: usize = 2;

/// The pattern tables for one target kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternListing {
    pub kind: TargetKind,
    pub prioritized: Vec<CodePattern>,
    pub standard: Vec<ConflictGroup>,
    pub blacklisted: Vec<CodePattern>,
    pub document_version: u64,
}

#[derive(Debug, Clone)]
pub struct Session {
    doc: Document,
    store: PatternStore,
    trees: TreeCache,
}

impl Session {
    pub fn new(text: impl Into<String>) -> Session {
        Session {
            doc: Document::parse(text),
            store: PatternStore::new(),
            trees: TreeCache::new(),
        }
    }

    pub fn doc(&self) -> &Document {
        &self.doc
    }

    pub fn store(&self) -> &PatternStore {
        &self.store
    }

    pub fn trees(&self) -> &TreeCache {
        &self.trees
    }

    pub fn version(&self) -> u64 {
        self.doc.version()
    }

    pub fn set_text(&mut self, text: impl Into<String>) -> u64 {
        self.doc = self.doc.with_text(text);
        self.doc.version()
    }

    pub fn replace_range(
        &mut self,
        start: (usize, usize),
        end: (usize, usize),
        text: &str,
    ) -> Result<u64, PositionError> {
        self.doc = self.doc.with_replaced_range(start, end, text)?;
        Ok(self.doc.version())
    }

    pub fn completions(&mut self, line: usize, col: usize) -> Result<CompletionList, PositionError> {
        let query = CompletionQuery {
            doc: &self.doc,
            line,
            col,
        };
        complete(&query, &mut self.store, &mut self.trees)
    }

    /// Trains every stale tree so the store reflects the current document.
    pub fn learn(&mut self) {
        for kind in TargetKind::ALL {
            self.trees.ensure(kind, &self.doc, &mut self.store);
        }
    }

    pub fn table(&self, kind: TargetKind) -> TrainingTable {
        TrainingTable::build(&self.doc, kind)
    }

    pub fn patterns(&mut self, kind: TargetKind) -> PatternListing {
        self.trees.ensure(kind, &self.doc, &mut self.store);
        PatternListing {
            kind,
            prioritized: self.store.prioritized(kind).cloned().collect(),
            standard: self.store.groups(kind),
            blacklisted: self.store.blacklisted(kind).cloned().collect(),
            document_version: self.doc.version(),
        }
    }

    pub fn vote(&mut self, id: &PatternId, direction: VoteDirection) -> Result<PatternState, StoreError> {
        self.store.vote(id, direction)
    }

    pub fn add_pattern(
        &mut self,
        kind: TargetKind,
        conditions: Vec<Condition>,
        target: &str,
    ) -> Result<CodePattern, StoreError> {
        let id = self.store.add_custom(kind, conditions, target)?.id;
        self.trees.ensure(kind, &self.doc, &mut self.store);
        Ok(self.store.get(&id).cloned().expect("just added"))
    }

    pub fn inspect(&self, id: &PatternId) -> Result<InspectionResult, StoreError> {
        let pattern = self
            .store
            .get(id)
            .ok_or_else(|| StoreError::NotFound(id.clone()))?;
        Ok(inspect(&self.doc, pattern))
    }

    /// Violations of prioritized patterns and of conditional standard
    /// patterns seen at least `min_support` times.
    pub fn lint(&mut self, min_support: usize) -> Vec<InspectionSite> {
        self.learn();
        let patterns: Vec<&CodePattern> = TargetKind::ALL
            .into_iter()
            .flat_map(|k| {
                self.store.prioritized(k).chain(
                    self.store
                        .standard(k)
                        .filter(|p| !p.is_unconditional() && p.support >= min_support),
                )
            })
            .collect();
        lint(&self.doc, patterns)
    }

    pub fn export(&self) -> PatternFile {
        self.store.export()
    }

    pub fn import(&mut self, file: &PatternFile) -> Result<(), StoreError> {
        self.store.import(file)?;
        for kind in TargetKind::ALL {
            if self.trees.get(kind).is_some() {
                self.trees.ensure(kind, &self.doc, &mut self.store);
            }
        }
        Ok(())
    }
}
