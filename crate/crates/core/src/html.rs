//! Error-tolerant HTML parsing into an element-only AST.
//!
//! The parser is total: any input produces a [`Document`]. Text, comments and
//! doctype declarations are dropped since only elements and attributes feed
//! pattern mining. Unclosed elements are closed at the end of the enclosing
//! scope, void elements never receive children, and a start tag that is still
//! being typed (no `>` yet) ends where the next tag begins.
//!
//! Positions use 1-based lines and 1-based columns counted in characters.
//! Span ends are exclusive.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// HTML5 void elements.
pub const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "source", "track",
    "wbr",
];

/// Elements whose content is raw text up to the matching end tag.
const RAW_TEXT_ELEMENTS: &[&str] = &["script", "style", "textarea", "title"];

/// Start tags that implicitly close an open `<p>`.
const CLOSES_PARAGRAPH: &[&str] = &[
    "address", "article", "aside", "blockquote", "details", "div", "dl", "fieldset", "figcaption",
    "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "main", "nav",
    "ol", "p", "pre", "section", "table", "ul",
];

pub fn is_void(tag: &str) -> bool {
    VOID_ELEMENTS.contains(&tag)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("position {line}:{col} is outside the document")]
pub struct PositionError {
    pub line: usize,
    pub col: usize,
}

/// A region of the document text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceSpan {
    pub start_offset: usize,
    pub end_offset: usize,
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: usize,
    pub end_col: usize,
}

impl SourceSpan {
    pub fn contains_offset(&self, offset: usize) -> bool {
        self.start_offset <= offset && offset < self.end_offset
    }

    pub fn contains(&self, other: &SourceSpan) -> bool {
        self.start_offset <= other.start_offset && other.end_offset <= self.end_offset
    }

    pub fn overlaps(&self, other: &SourceSpan) -> bool {
        self.start_offset < other.end_offset && other.start_offset < self.end_offset
    }

    pub fn len(&self) -> usize {
        self.end_offset - self.start_offset
    }

    pub fn is_empty(&self) -> bool {
        self.start_offset == self.end_offset
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}\u{2013}{}:{}",
            self.start_line, self.start_col, self.end_line, self.end_col
        )
    }
}

/// An attribute as written on an element. Names are lowercased, quotes stripped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementNode {
    pub tag: String,
    pub attributes: Vec<Attribute>,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    /// The whole element, from `<` of the start tag to the end of its end tag.
    pub span: SourceSpan,
    /// Just the start tag.
    pub start_tag: SourceSpan,
}

impl ElementNode {
    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|a| a.name == name)
            .map(|a| a.value.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub span: SourceSpan,
    pub message: String,
}

/// Maps byte offsets to line/column positions and back.
#[derive(Debug, Clone, PartialEq, Eq)]
struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    fn new(text: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { starts }
    }

    fn line_count(&self) -> usize {
        self.starts.len()
    }

    fn position(&self, text: &str, offset: usize) -> (usize, usize) {
        let line = self.starts.partition_point(|&s| s <= offset) - 1;
        let col = text[self.starts[line]..offset].chars().count() + 1;
        (line + 1, col)
    }

    fn line_text<'t>(&self, text: &'t str, line: usize) -> &'t str {
        let start = self.starts[line - 1];
        let end = self
            .starts
            .get(line)
            .map(|&next| next - 1)
            .unwrap_or(text.len());
        &text[start..end]
    }

    fn offset(&self, text: &str, line: usize, col: usize) -> Result<usize, PositionError> {
        let err = PositionError { line, col };
        if line == 0 || col == 0 || line > self.line_count() {
            return Err(err);
        }
        let start = self.starts[line - 1];
        let content = self.line_text(text, line);
        let mut chars = content.char_indices();
        for _ in 1..col {
            if chars.next().is_none() {
                return Err(err);
            }
        }
        Ok(start + chars.next().map(|(i, _)| i).unwrap_or(content.len()))
    }

    fn span(&self, text: &str, start: usize, end: usize) -> SourceSpan {
        let (start_line, start_col) = self.position(text, start);
        let (end_line, end_col) = self.position(text, end);
        SourceSpan {
            start_offset: start,
            end_offset: end,
            start_line,
            start_col,
            end_line,
            end_col,
        }
    }
}

/// An immutable, parsed snapshot of the document text.
#[derive(Debug, Clone)]
pub struct Document {
    text: String,
    nodes: Vec<ElementNode>,
    roots: Vec<NodeId>,
    version: u64,
    diagnostics: Vec<Diagnostic>,
    lines: LineIndex,
}

impl PartialEq for Document {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
            && self.nodes == other.nodes
            && self.roots == other.roots
            && self.version == other.version
    }
}

impl Document {
    pub fn parse(text: impl Into<String>) -> Document {
        Self::parse_versioned(text.into(), 0)
    }

    fn parse_versioned(text: String, version: u64) -> Document {
        let lines = LineIndex::new(&text);
        let (nodes, roots, diagnostics) = {
            let mut parser = Parser::new(&text, &lines);
            parser.run();
            (parser.nodes, parser.roots, parser.diagnostics)
        };
        Document {
            text,
            nodes,
            roots,
            version,
            diagnostics,
            lines,
        }
    }

    /// Replaces the whole text, producing the next version.
    pub fn with_text(&self, text: impl Into<String>) -> Document {
        Self::parse_versioned(text.into(), self.version + 1)
    }

    /// Replaces the text between two positions, producing the next version.
    pub fn with_replaced_range(
        &self,
        start: (usize, usize),
        end: (usize, usize),
        replacement: &str,
    ) -> Result<Document, PositionError> {
        let from = self.offset_of(start.0, start.1)?;
        let to = self.offset_of(end.0, end.1)?;
        let (from, to) = (from.min(to), from.max(to));
        let mut text = String::with_capacity(self.text.len() + replacement.len());
        text.push_str(&self.text[..from]);
        text.push_str(replacement);
        text.push_str(&self.text[to..]);
        Ok(self.with_text(text))
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn node(&self, id: NodeId) -> &ElementNode {
        &self.nodes[id.0]
    }

    pub fn parent(&self, id: NodeId) -> Option<&ElementNode> {
        self.nodes[id.0].parent.map(|p| self.node(p))
    }

    /// All elements in document (pre-)order.
    pub fn elements(&self) -> impl Iterator<Item = (NodeId, &ElementNode)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn line_count(&self) -> usize {
        self.lines.line_count()
    }

    pub fn line(&self, line: usize) -> Option<&str> {
        (line >= 1 && line <= self.line_count()).then(|| self.lines.line_text(&self.text, line))
    }

    pub fn offset_of(&self, line: usize, col: usize) -> Result<usize, PositionError> {
        self.lines.offset(&self.text, line, col)
    }

    pub fn span_of(&self, start: usize, end: usize) -> SourceSpan {
        self.lines.span(&self.text, start, end)
    }

    pub fn slice(&self, span: &SourceSpan) -> &str {
        &self.text[span.start_offset..span.end_offset]
    }

    /// Innermost element containing the given position.
    pub fn element_at(&self, line: usize, col: usize) -> Result<Option<NodeId>, PositionError> {
        let offset = self.offset_of(line, col)?;
        Ok(self.element_at_offset(offset))
    }

    pub fn element_at_offset(&self, offset: usize) -> Option<NodeId> {
        let mut level = &self.roots;
        let mut found = None;
        while let Some(&id) = level
            .iter()
            .find(|&&id| self.node(id).span.contains_offset(offset))
        {
            found = Some(id);
            level = &self.node(id).children;
        }
        found
    }

    /// Serializes the element structure (tags and attributes, no text).
    pub fn to_html(&self) -> String {
        let mut out = String::new();
        for &root in &self.roots {
            self.write_element(root, &mut out);
        }
        out
    }

    fn write_element(&self, id: NodeId, out: &mut String) {
        let node = self.node(id);
        out.push('<');
        out.push_str(&node.tag);
        for attr in &node.attributes {
            out.push(' ');
            out.push_str(&attr.name);
            if !attr.value.is_empty() {
                out.push('=');
                if attr.value.contains('"') && attr.value.contains('\'') {
                    // only an unquoted source value can hold both quotes
                    out.push_str(&attr.value);
                } else {
                    let quote = if attr.value.contains('"') { '\'' } else { '"' };
                    out.push(quote);
                    out.push_str(&attr.value);
                    out.push(quote);
                }
            }
        }
        out.push('>');
        if is_void(&node.tag) {
            return;
        }
        for &child in &node.children {
            self.write_element(child, out);
        }
        out.push_str("</");
        out.push_str(&node.tag);
        out.push('>');
    }
}

pub fn parse(text: &str) -> Document {
    Document::parse(text)
}

fn is_name_start(b: u8) -> bool {
    b.is_ascii_alphabetic()
}

fn is_name_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b':' | b'.') || b >= 0x80
}

fn is_attr_name_char(b: u8) -> bool {
    !b.is_ascii_whitespace() && !matches!(b, b'=' | b'>' | b'/' | b'<' | b'"' | b'\'')
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    lines: &'a LineIndex,
    pos: usize,
    nodes: Vec<ElementNode>,
    roots: Vec<NodeId>,
    stack: Vec<NodeId>,
    diagnostics: Vec<Diagnostic>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, lines: &'a LineIndex) -> Self {
        Parser {
            text,
            bytes: text.as_bytes(),
            lines,
            pos: 0,
            nodes: Vec::new(),
            roots: Vec::new(),
            stack: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    fn span(&self, start: usize, end: usize) -> SourceSpan {
        self.lines.span(self.text, start, end)
    }

    fn diag(&mut self, start: usize, end: usize, message: impl Into<String>) {
        let span = self.span(start, end);
        self.diagnostics.push(Diagnostic {
            span,
            message: message.into(),
        });
    }

    fn find(&self, from: usize, needle: &[u8]) -> Option<usize> {
        self.bytes
            .get(from..)?
            .windows(needle.len())
            .position(|w| w == needle)
            .map(|i| from + i)
    }

    fn find_ignore_case(&self, from: usize, needle: &[u8]) -> Option<usize> {
        self.bytes
            .get(from..)?
            .windows(needle.len())
            .position(|w| w.eq_ignore_ascii_case(needle))
            .map(|i| from + i)
    }

    fn find_byte(&self, from: usize, b: u8) -> Option<usize> {
        self.bytes.get(from..)?.iter().position(|&c| c == b).map(|i| from + i)
    }

    fn run(&mut self) {
        let len = self.bytes.len();
        while let Some(lt) = self.find_byte(self.pos, b'<') {
            self.pos = lt;
            let rest = &self.bytes[lt..];
            if rest.starts_with(b"<!--") {
                match self.find(lt + 4, b"-->") {
                    Some(end) => self.pos = end + 3,
                    None => {
                        self.diag(lt, len, "unterminated comment");
                        self.pos = len;
                    }
                }
            } else if rest.starts_with(b"<!") || rest.starts_with(b"<?") {
                self.pos = self.find_byte(lt, b'>').map(|e| e + 1).unwrap_or(len);
            } else if rest.starts_with(b"</") {
                self.end_tag(lt);
            } else if rest.get(1).copied().is_some_and(is_name_start) {
                self.start_tag(lt);
            } else {
                self.pos = lt + 1;
            }
        }
        let open = std::mem::take(&mut self.stack);
        for id in open.into_iter().rev() {
            let start = self.nodes[id.0].span.start_offset;
            let tag = self.nodes[id.0].tag.clone();
            self.close(id, len);
            self.diag(start, len, format!("<{tag}> is never closed"));
        }
    }

    fn read_name(&self, from: usize) -> usize {
        let mut i = from;
        while i < self.bytes.len() && is_name_char(self.bytes[i]) {
            i += 1;
        }
        i
    }

    fn skip_whitespace(&self, from: usize) -> usize {
        let mut i = from;
        while i < self.bytes.len() && self.bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        i
    }

    fn end_of_line(&self, from: usize) -> usize {
        self.find_byte(from, b'\n').unwrap_or(self.bytes.len())
    }

    fn end_tag(&mut self, lt: usize) {
        let len = self.bytes.len();
        let name_end = self.read_name(lt + 2);
        if name_end == lt + 2 {
            // `</>` or `</ ...`: not an end tag
            let end = self.find_byte(lt, b'>').map(|e| e + 1).unwrap_or(len);
            self.diag(lt, end, "malformed end tag skipped");
            self.pos = end;
            return;
        }
        let name = self.text[lt + 2..name_end].to_ascii_lowercase();
        let next_lt = self.find_byte(lt + 1, b'<');
        let end = match self.find_byte(name_end, b'>') {
            Some(gt) if next_lt.is_none_or(|n| gt < n) => gt + 1,
            _ => {
                let end = next_lt.unwrap_or(len);
                self.diag(lt, end, format!("unterminated end tag </{name}>"));
                end
            }
        };
        self.pos = end;
        if is_void(&name) {
            self.diag(lt, end, format!("end tag for void element </{name}> ignored"));
            return;
        }
        let Some(depth) = self
            .stack
            .iter()
            .rposition(|&id| self.nodes[id.0].tag == name)
        else {
            self.diag(lt, end, format!("stray end tag </{name}> ignored"));
            return;
        };
        while self.stack.len() > depth + 1 {
            let inner = self.stack.pop().expect("stack deeper than depth");
            let start = self.nodes[inner.0].span.start_offset;
            let tag = self.nodes[inner.0].tag.clone();
            self.close(inner, lt);
            self.diag(start, lt, format!("<{tag}> closed implicitly by </{name}>"));
        }
        let id = self.stack.pop().expect("matched element on stack");
        self.close(id, end);
    }

    fn close(&mut self, id: NodeId, end: usize) {
        let start = self.nodes[id.0].span.start_offset;
        self.nodes[id.0].span = self.span(start, end);
    }

    fn start_tag(&mut self, lt: usize) {
        let len = self.bytes.len();
        let name_end = self.read_name(lt + 1);
        let tag = self.text[lt + 1..name_end].to_ascii_lowercase();
        let mut attributes: Vec<Attribute> = Vec::new();
        let mut self_closing = false;
        let mut i = name_end;
        let end = loop {
            i = self.skip_whitespace(i);
            if i >= len {
                self.diag(lt, len, format!("unterminated start tag <{tag}>"));
                break len;
            }
            match self.bytes[i] {
                b'>' => break i + 1,
                b'/' if self.bytes.get(i + 1) == Some(&b'>') => {
                    self_closing = true;
                    break i + 2;
                }
                b'/' | b'=' => i += 1,
                b'<' => {
                    self.diag(lt, i, format!("unterminated start tag <{tag}>"));
                    break i;
                }
                q @ (b'"' | b'\'') => {
                    // stray quoted string without an attribute name
                    i = self.find_byte(i + 1, q).map(|e| e + 1).unwrap_or(len);
                }
                _ => {
                    let name_start = i;
                    while i < len && is_attr_name_char(self.bytes[i]) {
                        i += 1;
                    }
                    let name = self.text[name_start..i].to_ascii_lowercase();
                    let mut value = String::new();
                    let after = self.skip_whitespace(i);
                    let mut truncated = false;
                    if self.bytes.get(after) == Some(&b'=') {
                        let v = self.skip_whitespace(after + 1);
                        match self.bytes.get(v).copied() {
                            Some(q @ (b'"' | b'\'')) => {
                                let close = self.find_byte(v + 1, q);
                                let eol = self.end_of_line(v + 1);
                                let runaway = close.is_some_and(|c| {
                                    c > eol && self.bytes[v + 1..c].contains(&b'<')
                                });
                                match close {
                                    Some(c) if !runaway => {
                                        value = self.text[v + 1..c].to_string();
                                        i = c + 1;
                                    }
                                    _ => {
                                        self.diag(v, eol, "unterminated attribute value");
                                        value = self.text[v + 1..eol].to_string();
                                        i = eol;
                                        truncated = true;
                                    }
                                }
                            }
                            Some(_) => {
                                let mut e = v;
                                while e < len
                                    && !self.bytes[e].is_ascii_whitespace()
                                    && !matches!(self.bytes[e], b'>' | b'<')
                                {
                                    e += 1;
                                }
                                value = self.text[v..e].to_string();
                                i = e;
                            }
                            None => i = v,
                        }
                    }
                    if attributes.iter().any(|a| a.name == name) {
                        self.diag(name_start, i, format!("duplicate attribute {name} ignored"));
                    } else {
                        attributes.push(Attribute { name, value });
                    }
                    if truncated {
                        break i;
                    }
                }
            }
        };
        self.pos = end;
        self.implied_end_tags(&tag, lt);

        let parent = self.stack.last().copied();
        let start_tag = self.span(lt, end);
        let id = NodeId(self.nodes.len());
        self.nodes.push(ElementNode {
            tag: tag.clone(),
            attributes,
            children: Vec::new(),
            parent,
            span: start_tag,
            start_tag,
        });
        match parent {
            Some(p) => self.nodes[p.0].children.push(id),
            None => self.roots.push(id),
        }

        if is_void(&tag) || self_closing {
            return;
        }
        if RAW_TEXT_ELEMENTS.contains(&tag.as_str()) {
            let closing = format!("</{tag}");
            match self.find_ignore_case(end, closing.as_bytes()) {
                Some(c) => {
                    let close_end = self.find_byte(c, b'>').map(|e| e + 1).unwrap_or(len);
                    self.close(id, close_end);
                    self.pos = close_end;
                }
                None => {
                    self.close(id, len);
                    self.diag(lt, len, format!("<{tag}> is never closed"));
                    self.pos = len;
                }
            }
            return;
        }
        self.stack.push(id);
    }

    /// Closes an open element that the new start tag cannot nest inside.
    fn implied_end_tags(&mut self, tag: &str, lt: usize) {
        let Some(&top) = self.stack.last() else {
            return;
        };
        let open = self.nodes[top.0].tag.as_str();
        let implied = match open {
            "p" => CLOSES_PARAGRAPH.contains(&tag),
            "li" => tag == "li",
            "dt" | "dd" => matches!(tag, "dt" | "dd"),
            "option" => matches!(tag, "option" | "optgroup"),
            "tr" => tag == "tr",
            "td" | "th" => matches!(tag, "td" | "th" | "tr"),
            _ => false,
        };
        if implied {
            self.stack.pop();
            self.close(top, lt);
        }
    }
}
