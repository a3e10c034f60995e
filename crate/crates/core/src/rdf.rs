//! RDF-style terms and quads, plus the IRI scheme used to name pages,
//! ontology terms and graphs.

use std::cmp::Ordering;
use std::fmt;

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BASE: &str = "http://wikibridge.example/";
pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

pub const PAGE_NS: &str = "http://wikibridge.example/page/";
pub const ONTO_NS: &str = "http://wikibridge.example/onto/";
pub const REL_NS: &str = "http://wikibridge.example/rel/";
pub const GRAPH_NS: &str = "http://wikibridge.example/graph/";
pub const META_NS: &str = "http://wikibridge.example/meta/";

pub const META_GRAPH: &str = "http://wikibridge.example/graph/meta";
pub const INFERRED_GRAPH: &str = "http://wikibridge.example/graph/inferred";

pub const META_FROM_PAGE: &str = "http://wikibridge.example/meta/fromPage";
pub const META_REVISION: &str = "http://wikibridge.example/meta/revision";
pub const META_AUTHOR: &str = "http://wikibridge.example/meta/author";
pub const META_TIMESTAMP: &str = "http://wikibridge.example/meta/timestamp";
/// Links a nested annotation node to the attribute it clarifies.
pub const META_CLARIFIES: &str = "http://wikibridge.example/meta/clarifies";

/// The namespace whose pages get unqualified IRIs.
pub const DEFAULT_NAMESPACE: &str = "Main";

// Everything except RFC 3986 unreserved characters.
const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("not an absolute IRI: {0:?}")]
    InvalidIri(String),
    #[error("invalid blank node label: {0:?}")]
    InvalidBlank(String),
    #[error("lexical form {lexical:?} is not a valid {datatype}")]
    InvalidLexical { lexical: String, datatype: Datatype },
    #[error("unsupported datatype <{0}>")]
    UnknownDatatype(String),
    #[error("{position} must be {expected}")]
    BadPosition { position: &'static str, expected: &'static str },
}

/// The five built-in literal datatypes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Datatype {
    String,
    Integer,
    Decimal,
    Boolean,
    Date,
}

impl Datatype {
    pub const ALL: [Datatype; 5] = [
        Datatype::String,
        Datatype::Integer,
        Datatype::Decimal,
        Datatype::Boolean,
        Datatype::Date,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Datatype::String => "string",
            Datatype::Integer => "integer",
            Datatype::Decimal => "decimal",
            Datatype::Boolean => "boolean",
            Datatype::Date => "date",
        }
    }

    pub fn from_name(name: &str) -> Option<Datatype> {
        Datatype::ALL.into_iter().find(|d| d.name() == name)
    }

    pub fn iri(self) -> &'static str {
        match self {
            Datatype::String => "http://www.w3.org/2001/XMLSchema#string",
            Datatype::Integer => "http://www.w3.org/2001/XMLSchema#integer",
            Datatype::Decimal => "http://www.w3.org/2001/XMLSchema#decimal",
            Datatype::Boolean => "http://www.w3.org/2001/XMLSchema#boolean",
            Datatype::Date => "http://www.w3.org/2001/XMLSchema#date",
        }
    }

    pub fn from_iri(iri: &str) -> Option<Datatype> {
        Datatype::ALL.into_iter().find(|d| d.iri() == iri)
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, Datatype::Integer | Datatype::Decimal)
    }

    /// Checks `lexical` against this datatype's lexical space.
    pub fn accepts(self, lexical: &str) -> bool {
        match self {
            Datatype::String => !lexical.contains('\0'),
            Datatype::Integer => is_integer_lexical(lexical),
            Datatype::Decimal => is_decimal_lexical(lexical),
            Datatype::Boolean => lexical == "true" || lexical == "false",
            Datatype::Date => is_date_lexical(lexical),
        }
    }
}

impl fmt::Display for Datatype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn strip_sign(s: &str) -> &str {
    s.strip_prefix(['+', '-']).unwrap_or(s)
}

pub fn is_integer_lexical(s: &str) -> bool {
    let digits = strip_sign(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

pub fn is_decimal_lexical(s: &str) -> bool {
    let body = strip_sign(s);
    match body.split_once('.') {
        None => is_integer_lexical(body) && !body.starts_with(['+', '-']),
        Some((int, frac)) => {
            !int.is_empty()
                && !frac.is_empty()
                && int.bytes().all(|b| b.is_ascii_digit())
                && frac.bytes().all(|b| b.is_ascii_digit())
        }
    }
}

/// `YYYY-MM-DD` naming a real calendar day.
pub fn is_date_lexical(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return false;
    }
    if !b
        .iter()
        .enumerate()
        .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit())
    {
        return false;
    }
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    lexical: String,
    datatype: Datatype,
}

impl Literal {
    pub fn new(lexical: impl Into<String>, datatype: Datatype) -> Result<Literal, TermError> {
        let lexical = lexical.into();
        if datatype.accepts(&lexical) {
            Ok(Literal { lexical, datatype })
        } else {
            Err(TermError::InvalidLexical { lexical, datatype })
        }
    }

    pub fn string(s: impl Into<String>) -> Literal {
        Literal { lexical: s.into(), datatype: Datatype::String }
    }

    pub fn integer(n: i64) -> Literal {
        Literal { lexical: n.to_string(), datatype: Datatype::Integer }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> Datatype {
        self.datatype
    }

    /// Compares two numeric literals by value. `None` unless both are
    /// integer or decimal.
    pub fn numeric_cmp(&self, other: &Literal) -> Option<Ordering> {
        if !self.datatype.is_numeric() || !other.datatype.is_numeric() {
            return None;
        }
        Some(ExactDecimal::parse(&self.lexical).cmp(&ExactDecimal::parse(&other.lexical)))
    }
}

/// Sign plus normalized digit strings; orders decimals exactly.
#[derive(Debug, PartialEq, Eq)]
struct ExactDecimal {
    negative: bool,
    int: String,
    frac: String,
}

impl ExactDecimal {
    fn parse(lexical: &str) -> ExactDecimal {
        let negative = lexical.starts_with('-');
        let body = strip_sign(lexical);
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        let int = int.trim_start_matches('0').to_owned();
        let frac = frac.trim_end_matches('0').to_owned();
        let zero = int.is_empty() && frac.is_empty();
        ExactDecimal { negative: negative && !zero, int, frac }
    }

    fn magnitude_cmp(&self, other: &ExactDecimal) -> Ordering {
        self.int
            .len()
            .cmp(&other.int.len())
            .then_with(|| self.int.cmp(&other.int))
            .then_with(|| self.frac.cmp(&other.frac))
    }
}

impl Ord for ExactDecimal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.negative, other.negative) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            (false, false) => self.magnitude_cmp(other),
            (true, true) => other.magnitude_cmp(self),
        }
    }
}

impl PartialOrd for ExactDecimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An RDF term. The derived ordering is the canonical term order:
/// blank nodes before IRIs before literals, then lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Blank(String),
    Iri(String),
    Literal(Literal),
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Result<Term, TermError> {
        let iri = iri.into();
        if is_absolute_iri(&iri) {
            Ok(Term::Iri(iri))
        } else {
            Err(TermError::InvalidIri(iri))
        }
    }

    pub fn blank(label: impl Into<String>) -> Result<Term, TermError> {
        let label = label.into();
        if is_blank_label(&label) {
            Ok(Term::Blank(label))
        } else {
            Err(TermError::InvalidBlank(label))
        }
    }

    pub fn literal(lexical: impl Into<String>, datatype: Datatype) -> Result<Term, TermError> {
        Literal::new(lexical, datatype).map(Term::Literal)
    }

    pub fn rdf_type() -> Term {
        Term::Iri(RDF_TYPE.to_owned())
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::Blank(_))
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    /// N-Quads rendering of the term.
    pub fn to_nquads(&self) -> String {
        let mut out = String::new();
        write_nquads_term(&mut out, self);
        out
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_nquads())
    }
}

impl From<Literal> for Term {
    fn from(l: Literal) -> Term {
        Term::Literal(l)
    }
}

pub(crate) fn write_nquads_term(out: &mut String, term: &Term) {
    match term {
        Term::Iri(i) => {
            out.push('<');
            out.push_str(i);
            out.push('>');
        }
        Term::Blank(b) => {
            out.push_str("_:");
            out.push_str(b);
        }
        Term::Literal(l) => {
            out.push('"');
            for c in l.lexical.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\r' => out.push_str("\\r"),
                    '\t' => out.push_str("\\t"),
                    c if c.is_control() => out.push_str(&format!("\\u{:04X}", c as u32)),
                    c => out.push(c),
                }
            }
            out.push_str("\"^^<");
            out.push_str(l.datatype.iri());
            out.push('>');
        }
    }
}

pub fn is_absolute_iri(s: &str) -> bool {
    let Some((scheme, rest)) = s.split_once(':') else {
        return false;
    };
    let mut sc = scheme.chars();
    let scheme_ok = sc.next().is_some_and(|c| c.is_ascii_alphabetic())
        && sc.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    scheme_ok
        && !rest.is_empty()
        && !rest.chars().any(|c| {
            c.is_control() || c.is_whitespace() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
        })
}

pub fn is_blank_label(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// A subject–predicate–object statement in a named graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quad {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
    pub graph: Term,
}

impl Quad {
    /// Builds a quad, checking the positional constraints: the subject is an
    /// IRI or blank node, predicate and graph are IRIs.
    pub fn new(subject: Term, predicate: Term, object: Term, graph: Term) -> Result<Quad, TermError> {
        if subject.is_literal() {
            return Err(TermError::BadPosition { position: "subject", expected: "an IRI or blank node" });
        }
        if !predicate.is_iri() {
            return Err(TermError::BadPosition { position: "predicate", expected: "an IRI" });
        }
        if !graph.is_iri() {
            return Err(TermError::BadPosition { position: "graph", expected: "an IRI" });
        }
        Ok(Quad { subject, predicate, object, graph })
    }

    pub fn is_well_formed(&self) -> bool {
        !self.subject.is_literal() && self.predicate.is_iri() && self.graph.is_iri()
    }

    pub fn to_nquads(&self) -> String {
        let mut out = String::new();
        for t in [&self.subject, &self.predicate, &self.object, &self.graph] {
            write_nquads_term(&mut out, t);
            out.push(' ');
        }
        out.push('.');
        out
    }
}

impl fmt::Display for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_nquads())
    }
}

pub fn encode_segment(s: &str) -> String {
    utf8_percent_encode(s, SEGMENT).to_string()
}

pub fn decode_segment(s: &str) -> String {
    percent_decode_str(s).decode_utf8_lossy().into_owned()
}

/// Identifier of a page inside IRIs: the encoded title in the default
/// namespace, `ns:title` elsewhere. Both parts are percent-encoded
/// separately, so a literal `:` only ever separates them.
pub fn page_key(namespace: &str, title: &str) -> String {
    if namespace == DEFAULT_NAMESPACE {
        encode_segment(title)
    } else {
        format!("{}:{}", encode_segment(namespace), encode_segment(title))
    }
}

pub fn page_iri(namespace: &str, title: &str) -> Term {
    Term::Iri(format!("{PAGE_NS}{}", page_key(namespace, title)))
}

pub fn onto_iri(name: &str) -> Term {
    Term::Iri(format!("{ONTO_NS}{}", encode_segment(name)))
}

pub fn rel_iri(name: &str) -> Term {
    Term::Iri(format!("{REL_NS}{}", encode_segment(name)))
}

pub fn graph_iri(namespace: &str, title: &str, revision: u64) -> Term {
    Term::Iri(format!("{GRAPH_NS}{}/{revision}", page_key(namespace, title)))
}

pub fn meta_graph() -> Term {
    Term::Iri(META_GRAPH.to_owned())
}

pub fn inferred_graph() -> Term {
    Term::Iri(INFERRED_GRAPH.to_owned())
}

/// Name of an ontology term IRI, if the IRI lives under the ontology namespace.
pub fn onto_name(term: &Term) -> Option<String> {
    term.as_iri()
        .and_then(|i| i.strip_prefix(ONTO_NS))
        .map(decode_segment)
}

/// True for the per-revision annotation graphs (not meta, not inferred).
pub fn is_annotation_graph(graph: &Term) -> bool {
    match graph.as_iri() {
        Some(g) => g.starts_with(GRAPH_NS) && g != META_GRAPH && g != INFERRED_GRAPH,
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexical_spaces() {
        assert!(is_integer_lexical("-12"));
        assert!(is_integer_lexical("+0"));
        assert!(!is_integer_lexical("1.0"));
        assert!(!is_integer_lexical("-"));
        assert!(is_decimal_lexical("12.5"));
        assert!(is_decimal_lexical("-0.5"));
        assert!(is_decimal_lexical("7"));
        assert!(!is_decimal_lexical(".5"));
        assert!(!is_decimal_lexical("1.2.3"));
        assert!(!is_decimal_lexical("5."));
        assert!(is_date_lexical("2024-02-29"));
        assert!(!is_date_lexical("2023-02-29"));
        assert!(!is_date_lexical("2023-2-01"));
    }

    #[test]
    fn canonical_term_order() {
        let b = Term::Blank("z".into());
        let i = Term::Iri("http://a/".into());
        let l = Term::Literal(Literal::string("a"));
        assert!(b < i && i < l);
    }

    #[test]
    fn exact_numeric_comparison() {
        let a = Literal::new("12.50", Datatype::Decimal).unwrap();
        let b = Literal::new("12.5", Datatype::Decimal).unwrap();
        let c = Literal::new("8", Datatype::Integer).unwrap();
        let d = Literal::new("-0.0", Datatype::Decimal).unwrap();
        let z = Literal::new("0", Datatype::Integer).unwrap();
        assert_eq!(a.numeric_cmp(&b), Some(Ordering::Equal));
        assert_eq!(a.numeric_cmp(&c), Some(Ordering::Greater));
        assert_eq!(d.numeric_cmp(&z), Some(Ordering::Equal));
        let neg = Literal::new("-3", Datatype::Integer).unwrap();
        let neg2 = Literal::new("-12", Datatype::Integer).unwrap();
        assert_eq!(neg.numeric_cmp(&neg2), Some(Ordering::Greater));
        assert_eq!(Literal::string("1").numeric_cmp(&z), None);
    }

    #[test]
    fn iri_scheme() {
        assert_eq!(
            page_iri("Main", "St Martin"),
            Term::Iri("http://wikibridge.example/page/St%20Martin".into())
        );
        assert_eq!(
            graph_iri("Site", "A", 3),
            Term::Iri("http://wikibridge.example/graph/Site:A/3".into())
        );
        assert_ne!(page_iri("Main", "Site:A"), page_iri("Site", "A"));
        assert_eq!(onto_name(&onto_iri("Church")).as_deref(), Some("Church"));
        assert!(is_annotation_graph(&graph_iri("Main", "A", 1)));
        assert!(!is_annotation_graph(&meta_graph()));
        assert!(!is_absolute_iri("relative/path"));
        assert!(!is_absolute_iri("http://a b"));
    }

    #[test]
    fn literal_escaping() {
        let t = Term::literal("say \"hi\"\n", Datatype::String).unwrap();
        assert_eq!(
            t.to_nquads(),
            "\"say \\\"hi\\\"\\n\"^^<http://www.w3.org/2001/XMLSchema#string>"
        );
    }
}
