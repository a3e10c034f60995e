use std::fmt;

use serde::{Deserialize, Serialize};

use crate::markup::{ParseDiagnostic, Span};
use crate::rdf::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationKind {
    UndefinedTerm,
    DomainViolation,
    RangeViolation,
    DatatypeViolation,
    CardinalityViolation,
    NAryArity,
    RuleViolation,
}

impl ViolationKind {
    pub const ALL: [ViolationKind; 7] = [
        ViolationKind::UndefinedTerm,
        ViolationKind::DomainViolation,
        ViolationKind::RangeViolation,
        ViolationKind::DatatypeViolation,
        ViolationKind::CardinalityViolation,
        ViolationKind::NAryArity,
        ViolationKind::RuleViolation,
    ];
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Subjects are written as the bare IRI or `_:label`.
mod subject_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::rdf::Term;

    pub fn serialize<S: Serializer>(t: &Term, s: S) -> Result<S::Ok, S::Error> {
        match t {
            Term::Iri(i) => s.serialize_str(i),
            other => s.serialize_str(&other.to_nquads()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Term, D::Error> {
        let text = String::deserialize(d)?;
        Ok(match text.strip_prefix("_:") {
            Some(label) => Term::Blank(label.to_owned()),
            None => Term::Iri(text),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(with = "subject_text")]
    pub subject: Term,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
}

impl Violation {
    /// Report order: by span (unattributed last), then kind, then detail.
    pub fn sort_key(&self) -> (bool, Option<Span>, ViolationKind, &str) {
        (self.span.is_none(), self.span, self.kind, &self.detail)
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(r) = &self.rule_name {
            write!(f, "({r})")?;
        }
        if let Some(s) = self.span {
            write!(f, " at {s}")?;
        }
        write!(f, " on {}: {}", self.subject, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub page: String,
    #[serde(default = "default_namespace")]
    pub namespace: String,
    pub revision: u64,
    pub violations: Vec<Violation>,
    pub checked_at: String,
    /// Parse errors, when the text could not be parsed at all.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<ParseDiagnostic>,
}

fn default_namespace() -> String {
    crate::rdf::DEFAULT_NAMESPACE.to_owned()
}

impl ValidationReport {
    pub fn conforms(&self) -> bool {
        self.violations.is_empty() && self.diagnostics.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    /// Human-readable summary: a count line, then one line per problem.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let n = self.violations.len();
        out.push_str(&format!(
            "{}:{} rev {}: {n} violation{}",
            self.namespace,
            self.page,
            self.revision,
            if n == 1 { "" } else { "s" }
        ));
        if !self.diagnostics.is_empty() {
            out.push_str(&format!(", {} parse error(s)", self.diagnostics.len()));
        }
        out.push('\n');
        for d in &self.diagnostics {
            out.push_str(&format!("  {d}\n"));
        }
        for v in &self.violations {
            out.push_str(&format!("  {v}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn json_shape() {
        let r = ValidationReport {
            page: "StMartin".into(),
            namespace: "Main".into(),
            revision: 2,
            violations: vec![
                Violation {
                    kind: ViolationKind::RuleViolation,
                    subject: Term::Blank("a1".into()),
                    detail: "d".into(),
                    rule_name: Some("r".into()),
                    span: Some(Span::new(3, 9)),
                },
                Violation {
                    kind: ViolationKind::DomainViolation,
                    subject: Term::Iri("http://wikibridge.example/page/StMartin".into()),
                    detail: "untyped subject".into(),
                    rule_name: None,
                    span: None,
                },
            ],
            checked_at: "2024-01-01T00:00:00Z".into(),
            diagnostics: vec![],
        };
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["violations"][0]["kind"], json!("RuleViolation"));
        assert_eq!(v["violations"][0]["subject"], json!("_:a1"));
        assert_eq!(v["violations"][0]["span"], json!({"start": 3, "end": 9}));
        assert!(v["violations"][1].get("span").is_none());
        assert!(v["violations"][1].get("rule_name").is_none());
        assert!(v.get("diagnostics").is_none());
        let back: ValidationReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
        assert!(r.to_text().starts_with("Main:StMartin rev 2: 2 violations\n"));
    }
}
