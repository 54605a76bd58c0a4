//! Learning HTML code patterns from a document and using them for
//! completion and inspection.
//!
//! A [`Document`] is parsed into element nodes, turned into one
//! [`TrainingTable`] per [`TargetKind`], and fed to an ID3 [`DecisionTree`].
//! Root-to-leaf paths become [`CodePattern`]s that users can vote on, add to,
//! export and import through a [`PatternStore`].

pub mod completion;
pub mod features;
pub mod html;
pub mod id3;
pub mod inspect;
pub mod pattern;
pub mod session;
pub mod store;

pub use completion::{
    analyze_prefix, classify_target, complete, tokenize_line, CompletionItem, CompletionList,
    CompletionQuery, CursorContext, ItemOrigin, LineToken, TokenClass, TreeCache,
};
pub use features::{Condition, FeatureKey, FeatureMap, FeatureValue, TargetKind, TrainingRow, TrainingTable};
pub use html::{Document, NodeId, PositionError, SourceSpan};
pub use id3::{DecisionNode, DecisionTree, Prediction};
pub use inspect::{inspect, lint, Classification, InspectionResult, InspectionSite};
pub use pattern::{CodePattern, PatternId, PatternSource, PatternState};
pub use session::{PatternListing, Session, LINT_MIN_SUPPORT};
pub use store::{ConflictGroup, PatternFile, PatternRecord, PatternStore, StoreError, VoteDirection};
