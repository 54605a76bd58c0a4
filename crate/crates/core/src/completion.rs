//! Autocomplete: line tokenizing, target classification, lazy retraining and
//! ranking.
//!
//! The target type is decided from the last two tokens of the current line
//! up to the cursor:
//!
//! | tokens before the cursor            | target    | typed prefix      |
//! |-------------------------------------|-----------|-------------------|
//! | `<`                                 | tag       | empty             |
//! | `<` tag-name                        | tag       | the partial name  |
//! | tag-name / value / attribute, space | attribute | empty             |
//! | space, attribute                    | attribute | the partial name  |
//! | attribute, `=`                      | value     | empty             |
//! | `=`, open value (`"wid`, `wid`)     | value     | text after quote  |
//! | anything else (text, `>`, `/`, `</`)| none      |                   |

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::features::{context_features, FeatureMap, TargetKind, TrainingTable};
use crate::html::{Document, NodeId, PositionError};
use crate::id3::DecisionTree;
use crate::id3::split_path;
use crate::pattern::{CodePattern, PatternId};
use crate::store::PatternStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenClass {
    TagOpen,
    TagName,
    Attribute,
    Equals,
    Value,
    Whitespace,
    TagClose,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineToken {
    pub class: TokenClass,
    pub lexeme: String,
    /// 1-based columns, end exclusive.
    pub start_col: usize,
    pub end_col: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum LexState {
    Outside,
    TagName,
    InTag,
    AfterEquals,
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '-' | '_' | ':' | '.')
}

fn is_attr_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '=' | '>' | '/' | '<' | '"' | '\'')
}

/// Splits a line prefix into tokens whose lexemes concatenate back to it.
pub fn tokenize_line(prefix: &str) -> Vec<LineToken> {
    let chars: Vec<char> = prefix.chars().collect();
    let mut tokens: Vec<LineToken> = Vec::new();
    let mut push = |class: TokenClass, start: usize, end: usize| {
        let lexeme: String = chars[start..end].iter().collect();
        match tokens.last_mut() {
            Some(last) if class == TokenClass::Text && last.class == TokenClass::Text => {
                last.lexeme.push_str(&lexeme);
                last.end_col = end + 1;
            }
            _ => tokens.push(LineToken {
                class,
                lexeme,
                start_col: start + 1,
                end_col: end + 1,
            }),
        }
    };
    let run = |from: usize, pred: &dyn Fn(char) -> bool| {
        let mut i = from;
        while i < chars.len() && pred(chars[i]) {
            i += 1;
        }
        i
    };
    let quoted = |from: usize| {
        let q = chars[from];
        match chars[from + 1..].iter().position(|&c| c == q) {
            Some(p) => from + 1 + p + 1,
            None => chars.len(),
        }
    };

    let mut state = LexState::Outside;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '<' && state != LexState::AfterEquals {
            match chars.get(i + 1) {
                None => {
                    push(TokenClass::TagOpen, i, i + 1);
                    i += 1;
                    state = LexState::TagName;
                    continue;
                }
                Some('/') => {
                    push(TokenClass::TagOpen, i, i + 2);
                    i += 2;
                    state = LexState::TagName;
                    continue;
                }
                Some(&n) if n.is_alphabetic() => {
                    push(TokenClass::TagOpen, i, i + 1);
                    i += 1;
                    state = LexState::TagName;
                    continue;
                }
                Some(_) if state == LexState::Outside => {
                    push(TokenClass::Text, i, i + 1);
                    i += 1;
                    continue;
                }
                Some(_) => {}
            }
        }
        match state {
            LexState::Outside => {
                let end = run(i, &|c| c != '<').max(i + 1);
                push(TokenClass::Text, i, end);
                i = end;
            }
            LexState::TagName => {
                let end = run(i, &is_name_char);
                if end > i {
                    push(TokenClass::TagName, i, end);
                    i = end;
                }
                state = LexState::InTag;
            }
            LexState::InTag | LexState::AfterEquals => {
                let after_equals = state == LexState::AfterEquals;
                if c.is_whitespace() {
                    let end = run(i, &char::is_whitespace);
                    push(TokenClass::Whitespace, i, end);
                    i = end;
                } else if c == '>' {
                    push(TokenClass::TagClose, i, i + 1);
                    i += 1;
                    state = LexState::Outside;
                } else if c == '"' || c == '\'' {
                    let end = quoted(i);
                    push(TokenClass::Value, i, end);
                    i = end;
                    state = LexState::InTag;
                } else if after_equals {
                    let end = run(i, &|c| !c.is_whitespace() && c != '>');
                    push(TokenClass::Value, i, end);
                    i = end;
                    state = LexState::InTag;
                } else if c == '/' {
                    if matches!(chars.get(i + 1), Some('>')) {
                        push(TokenClass::TagClose, i, i + 2);
                        i += 2;
                        state = LexState::Outside;
                    } else if i + 1 == chars.len() {
                        push(TokenClass::TagClose, i, i + 1);
                        i += 1;
                    } else {
                        push(TokenClass::Text, i, i + 1);
                        i += 1;
                    }
                } else if c == '=' {
                    push(TokenClass::Equals, i, i + 1);
                    i += 1;
                    state = LexState::AfterEquals;
                } else if c == '<' {
                    push(TokenClass::Text, i, i + 1);
                    i += 1;
                } else {
                    let end = run(i, &is_attr_char);
                    push(TokenClass::Attribute, i, end);
                    i = end;
                }
            }
        }
    }
    tokens
}

/// What the cursor is completing, derived from the line prefix alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CursorContext {
    pub kind: TargetKind,
    pub typed_prefix: String,
    /// Tag of the element whose start tag holds the cursor.
    pub current_tag: Option<String>,
    /// Attribute whose value is being completed.
    pub attribute: Option<String>,
    /// Attribute names already written in the start tag before the cursor.
    pub written_attributes: Vec<String>,
    /// 1-based column of the `<` that opened the tag.
    pub tag_open_col: usize,
}

fn open_value_text(lexeme: &str) -> Option<&str> {
    let mut chars = lexeme.chars();
    match chars.next() {
        Some(q @ ('"' | '\'')) => {
            let rest = &lexeme[1..];
            (!rest.ends_with(q) || rest.is_empty()).then_some(rest)
        }
        Some(_) => Some(lexeme),
        None => None,
    }
}

pub fn analyze_prefix(prefix: &str) -> Option<CursorContext> {
    use TokenClass::*;
    let tokens = tokenize_line(prefix);
    let last = tokens.last()?;
    let prev = tokens.len().checked_sub(2).map(|i| &tokens[i]);
    let (kind, typed_prefix) = match (prev.map(|t| t.class), last.class) {
        (_, TagOpen) if last.lexeme == "<" => (TargetKind::Tag, String::new()),
        (Some(TagOpen), TagName) if prev?.lexeme == "<" => (TargetKind::Tag, last.lexeme.clone()),
        (Some(TagName | Value | Attribute), Whitespace) => {
            if prev?.class == Value && open_value_text(&prev?.lexeme).is_some()
                && prev?.lexeme.starts_with(['"', '\''])
            {
                return None;
            }
            (TargetKind::Attribute, String::new())
        }
        (Some(Whitespace), Attribute) => (TargetKind::Attribute, last.lexeme.clone()),
        (Some(Attribute), Equals) => (TargetKind::Value, String::new()),
        (Some(Equals), Value) => (TargetKind::Value, open_value_text(&last.lexeme)?.to_string()),
        _ => return None,
    };

    // find the start tag holding the cursor
    let open = tokens.iter().rposition(|t| t.class == TagOpen)?;
    if tokens[open].lexeme != "<" || tokens[open + 1..].iter().any(|t| t.class == TagClose) {
        return None;
    }
    let in_tag = &tokens[open + 1..];
    let current_tag = in_tag
        .first()
        .filter(|t| t.class == TagName)
        .map(|t| t.lexeme.to_ascii_lowercase());
    if kind != TargetKind::Tag && current_tag.is_none() {
        return None;
    }
    let mut written: Vec<String> = in_tag
        .iter()
        .filter(|t| t.class == Attribute)
        .map(|t| t.lexeme.to_ascii_lowercase())
        .collect();
    let attribute = match kind {
        TargetKind::Value => {
            let eq = in_tag.iter().rposition(|t| t.class == Equals)?;
            Some(in_tag[eq.checked_sub(1)?].lexeme.to_ascii_lowercase())
        }
        _ => None,
    };
    if kind == TargetKind::Attribute && last.class == Attribute {
        written.pop();
    }
    Some(CursorContext {
        kind,
        typed_prefix,
        current_tag: if kind == TargetKind::Tag { None } else { current_tag },
        attribute,
        written_attributes: written,
        tag_open_col: tokens[open].start_col,
    })
}

/// Target type for the cursor at the end of `line_prefix`, if any.
pub fn classify_target(line_prefix: &str) -> Option<TargetKind> {
    analyze_prefix(line_prefix).map(|c| c.kind)
}

#[derive(Debug, Clone)]
struct CachedTree {
    tree: DecisionTree,
    blacklist_epoch: u64,
}

/// Per-kind trees, retrained when the document version or blacklist changes.
#[derive(Debug, Clone, Default)]
pub struct TreeCache {
    trees: BTreeMap<TargetKind, CachedTree>,
    retrain_count: usize,
}

impl TreeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_fresh(&self, kind: TargetKind, doc: &Document, store: &PatternStore) -> bool {
        self.trees.get(&kind).is_some_and(|c| {
            c.tree.trained_on_version == doc.version() && c.blacklist_epoch == store.blacklist_epoch()
        })
    }

    /// Returns the tree for `kind`, rebuilding table, pruning and retraining
    /// first if it is stale. A rebuild also refreshes the store's standard
    /// patterns for that kind.
    pub fn ensure(&mut self, kind: TargetKind, doc: &Document, store: &mut PatternStore) -> &DecisionTree {
        if !self.is_fresh(kind, doc, store) {
            let table = TrainingTable::build(doc, kind);
            let blacklist: Vec<CodePattern> = store.blacklisted(kind).cloned().collect();
            let pruned = table.prune(&blacklist).expect("blacklist filtered by kind");
            let tree = DecisionTree::train(&pruned, doc.version());
            store.refresh(kind, tree.extract_rules());
            store.reevaluate(&table);
            self.retrain_count += 1;
            self.trees.insert(
                kind,
                CachedTree {
                    tree,
                    blacklist_epoch: store.blacklist_epoch(),
                },
            );
        }
        &self.trees[&kind].tree
    }

    pub fn get(&self, kind: TargetKind) -> Option<&DecisionTree> {
        self.trees.get(&kind).map(|c| &c.tree)
    }

    /// How many times any tree has been (re)trained.
    pub fn retrain_count(&self) -> usize {
        self.retrain_count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemOrigin {
    Prioritized,
    Learned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionItem {
    pub label: String,
    pub confidence: f64,
    pub origin: ItemOrigin,
    pub pattern_id: Option<PatternId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionList {
    pub target_kind: Option<TargetKind>,
    pub typed_prefix: String,
    pub items: Vec<CompletionItem>,
    /// The pattern explaining `items[0]`.
    pub current_pattern: Option<CodePattern>,
    /// Version of the document the tree answering this list was trained on.
    pub document_version: u64,
}

impl CompletionList {
    fn empty(version: u64) -> Self {
        CompletionList {
            target_kind: None,
            typed_prefix: String::new(),
            items: Vec::new(),
            current_pattern: None,
            document_version: version,
        }
    }

    pub fn labels(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.label.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CompletionQuery<'d> {
    pub doc: &'d Document,
    pub line: usize,
    pub col: usize,
}

/// The completion context: what the cursor completes and the features it sees.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryContext {
    pub cursor: CursorContext,
    pub parent: Option<NodeId>,
    pub features: FeatureMap,
}

/// Resolves the cursor's target and condition features against the document.
pub fn query_context(query: &CompletionQuery) -> Result<Option<QueryContext>, PositionError> {
    let doc = query.doc;
    let cursor_offset = doc.offset_of(query.line, query.col)?;
    let line_start = doc.offset_of(query.line, 1)?;
    let Some(cursor) = analyze_prefix(&doc.text()[line_start..cursor_offset]) else {
        return Ok(None);
    };
    let tag_offset = doc.offset_of(query.line, cursor.tag_open_col)?;
    // the element being typed starts at `tag_offset`; its parent is the
    // innermost element opened before it that still encloses it
    let parent = doc
        .elements()
        .filter(|(_, n)| {
            n.start_tag.end_offset <= tag_offset && n.span.contains_offset(tag_offset)
        })
        .min_by_key(|(_, n)| n.span.len())
        .map(|(id, _)| id);
    let features = context_features(
        parent.map(|p| doc.node(p)),
        cursor.current_tag.as_deref(),
        cursor.attribute.as_deref(),
    );
    Ok(Some(QueryContext {
        cursor,
        parent,
        features,
    }))
}

fn prefix_matches(label: &str, prefix: &str) -> bool {
    label.to_lowercase().starts_with(&prefix.to_lowercase())
}

pub fn complete(
    query: &CompletionQuery,
    store: &mut PatternStore,
    trees: &mut TreeCache,
) -> Result<CompletionList, PositionError> {
    let doc = query.doc;
    let Some(ctx) = query_context(query)? else {
        return Ok(CompletionList::empty(doc.version()));
    };
    let kind = ctx.cursor.kind;
    let tree = trees.ensure(kind, doc, store);
    let walk = tree.predict_path(&ctx.features);
    let version = tree.trained_on_version;

    let tag_offset = doc.offset_of(query.line, ctx.cursor.tag_open_col)?;
    let typed_element = doc
        .elements()
        .find(|(_, n)| n.span.start_offset == tag_offset)
        .map(|(_, n)| n);
    let mut existing: BTreeSet<&str> = BTreeSet::new();
    if kind == TargetKind::Attribute {
        existing.extend(ctx.cursor.written_attributes.iter().map(String::as_str));
        // attributes after the cursor on the element being typed
        if let Some(node) = typed_element {
            let cursor_offset = doc.offset_of(query.line, query.col)?;
            let after = &doc.text()[cursor_offset..node.start_tag.end_offset];
            existing.extend(
                node.attributes
                    .iter()
                    .map(|a| a.name.as_str())
                    .filter(|name| after.contains(name) && *name != ctx.cursor.typed_prefix),
            );
        }
    }

    let prioritized: Vec<&CodePattern> = store
        .prioritized(kind)
        .filter(|p| p.applies(&ctx.features))
        .collect();
    let blacklisted: BTreeSet<&str> = store
        .blacklisted(kind)
        .filter(|p| p.applies(&ctx.features))
        .map(|p| p.target.as_str())
        .collect();
    let keep = |label: &str| !existing.contains(label) && prefix_matches(label, &ctx.cursor.typed_prefix);

    let mut items: Vec<CompletionItem> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for p in &prioritized {
        if keep(&p.target) && seen.insert(p.target.clone()) {
            items.push(CompletionItem {
                label: p.target.clone(),
                confidence: p.confidence,
                origin: ItemOrigin::Prioritized,
                pattern_id: Some(p.id.clone()),
            });
        }
    }
    let (conditions, _) = split_path(&walk.path);
    for pred in &walk.predictions {
        if blacklisted.contains(pred.label.as_str()) || !keep(&pred.label) {
            continue;
        }
        // learned only from the half-typed element itself
        if typed_element.is_some_and(|n| pred.origins.iter().all(|o| *o == n.span)) {
            continue;
        }
        if !seen.insert(pred.label.clone()) {
            continue;
        }
        let pattern_id = walk
            .reached_leaf
            .then(|| PatternId::compute(kind, &conditions, &pred.label))
            .filter(|id| store.standard(kind).any(|p| &p.id == id));
        items.push(CompletionItem {
            label: pred.label.clone(),
            confidence: pred.confidence,
            origin: ItemOrigin::Learned,
            pattern_id,
        });
    }

    let current_pattern = items.first().and_then(|top| {
        let id = top.pattern_id.as_ref()?;
        store
            .get(id)
            .filter(|p| p.applies(&ctx.features) && p.target == top.label)
            .cloned()
    });

    Ok(CompletionList {
        target_kind: Some(kind),
        typed_prefix: ctx.cursor.typed_prefix,
        items,
        current_pattern,
        document_version: version,
    })
}
