//! Wikitext with embedded annotation blocks.
//!
//! Two directives are recognised inside otherwise free text:
//!
//! ```text
//! {{#ann: type=Church | height=12.5}}
//! {{#rel: Dating | method="C14" | date={{#ann: year=850}} }}
//! ```
//!
//! `{{#ann:` is a simple annotation on the page subject, `{{#rel:` an n-ary
//! relation instance. Values may themselves be annotation blocks, which gives
//! recursive annotations. See `docs/annotation-syntax.md` for the grammar.

mod parser;
mod serialize;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rdf::{Datatype, Literal, DEFAULT_NAMESPACE};

pub use parser::{parse_bytes, parse_page, MAX_DEPTH};
pub use serialize::{serialize_page, strip_annotations};

/// Half-open byte range `[start, end)` into a page's text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PageSourceError {
    #[error("page title must not be empty")]
    EmptyTitle,
    #[error("page title {0:?} contains '/' or a control character")]
    BadTitle(String),
    #[error("namespace {0:?} is not a valid name")]
    BadNamespace(String),
    #[error("page text contains a NUL byte")]
    NulByte,
}

/// A page as authored: title, namespace and raw wikitext.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageSource {
    pub namespace: String,
    pub title: String,
    pub text: String,
}

impl PageSource {
    pub fn new(
        namespace: impl Into<String>,
        title: impl Into<String>,
        text: impl Into<String>,
    ) -> Result<PageSource, PageSourceError> {
        let source = PageSource { namespace: namespace.into(), title: title.into(), text: text.into() };
        validate_title(&source.title)?;
        if !is_valid_name(&source.namespace) {
            return Err(PageSourceError::BadNamespace(source.namespace));
        }
        if source.text.contains('\0') {
            return Err(PageSourceError::NulByte);
        }
        Ok(source)
    }

    /// A page in the default namespace.
    pub fn main(title: impl Into<String>, text: impl Into<String>) -> Result<PageSource, PageSourceError> {
        PageSource::new(DEFAULT_NAMESPACE, title, text)
    }
}

pub fn validate_title(title: &str) -> Result<(), PageSourceError> {
    if title.trim().is_empty() {
        return Err(PageSourceError::EmptyTitle);
    }
    if title.contains('/') || title.chars().any(char::is_control) || title.trim() != title {
        return Err(PageSourceError::BadTitle(title.to_owned()));
    }
    Ok(())
}

fn is_valid_name(ns: &str) -> bool {
    !ns.is_empty()
        && ns.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-')
}

/// `[A-Za-z_][A-Za-z0-9_]*`
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnnotationKind {
    Simple,
    NAry,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub key: String,
    pub value: Value,
    /// From the first byte of the key to the last byte of the value.
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Literal(Literal),
    PageRef(String),
    Nested(Box<AnnotationNode>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationNode {
    pub kind: AnnotationKind,
    /// Present iff `kind` is `NAry`.
    pub relation: Option<String>,
    pub pairs: Vec<Pair>,
    pub span: Span,
}

impl AnnotationNode {
    /// Equality ignoring spans.
    pub fn same_structure(&self, other: &AnnotationNode) -> bool {
        self.kind == other.kind
            && self.relation == other.relation
            && self.pairs.len() == other.pairs.len()
            && self.pairs.iter().zip(&other.pairs).all(|(a, b)| {
                a.key == b.key
                    && match (&a.value, &b.value) {
                        (Value::Nested(x), Value::Nested(y)) => x.same_structure(y),
                        (x, y) => x == y,
                    }
            })
    }

    /// Depth of the annotation tree rooted here (a leaf node has depth 1).
    pub fn depth(&self) -> usize {
        1 + self
            .pairs
            .iter()
            .filter_map(|p| match &p.value {
                Value::Nested(n) => Some(n.depth()),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Pre-order walk over this node and every nested node.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a AnnotationNode)) {
        visit(self);
        for pair in &self.pairs {
            if let Value::Nested(inner) = &pair.value {
                inner.walk(visit);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlainSegment {
    pub span: Span,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPage {
    pub source: PageSource,
    pub annotations: Vec<AnnotationNode>,
    pub plain_segments: Vec<PlainSegment>,
}

impl ParsedPage {
    /// Equality of annotation trees and free text, ignoring byte offsets.
    pub fn same_structure(&self, other: &ParsedPage) -> bool {
        self.annotations.len() == other.annotations.len()
            && self
                .annotations
                .iter()
                .zip(&other.annotations)
                .all(|(a, b)| a.same_structure(b))
            && self.plain_segments.len() == other.plain_segments.len()
            && self
                .plain_segments
                .iter()
                .zip(&other.plain_segments)
                .all(|(a, b)| a.text == b.text)
    }

    pub fn has_annotations(&self) -> bool {
        !self.annotations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DiagnosticKind {
    UnterminatedBlock,
    MissingKey,
    BadDatatypeLexical,
    UnknownDirective,
    NestingTooDeep,
    /// Any other malformed input inside a block.
    Syntax,
    InvalidUtf8,
    InvalidCharacter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub kind: DiagnosticKind,
    pub span: Span,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn offset(&self) -> usize {
        self.span.start
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at byte {}: {}", self.kind, self.span.start, self.message)
    }
}

/// How a bare (unquoted) value token is typed.
pub fn classify_bare(token: &str) -> Datatype {
    if token == "true" || token == "false" {
        Datatype::Boolean
    } else if crate::rdf::is_integer_lexical(token) {
        Datatype::Integer
    } else if crate::rdf::is_decimal_lexical(token) {
        Datatype::Decimal
    } else if looks_like_date(token) {
        Datatype::Date
    } else {
        Datatype::String
    }
}

/// `dddd-dd-dd`, regardless of calendar validity.
pub(crate) fn looks_like_date(token: &str) -> bool {
    let b = token.as_bytes();
    b.len() == 10
        && b.iter()
            .enumerate()
            .all(|(i, c)| if i == 4 || i == 7 { *c == b'-' } else { c.is_ascii_digit() })
}
