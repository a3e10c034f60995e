use serde_json::{json, Value};
use thiserror::Error;
use wikibridge_core::acl::{Action, Decision};
use wikibridge_core::markup::{PageSourceError, ParseDiagnostic};
use wikibridge_core::ontology::OntologyError;
use wikibridge_core::query::QueryError;
use wikibridge_core::semantics::ValidationReport;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("invalid page name: {0}")]
    BadPage(#[from] PageSourceError),
    #[error("page text does not parse ({} diagnostics)", .0.len())]
    Parse(Vec<ParseDiagnostic>),
    /// A dry-run check of unparseable text; the report carries the diagnostics.
    #[error("page text does not parse")]
    ParseReport(Box<ValidationReport>),
    #[error("query error: {0}")]
    Query(#[from] QueryError),
    #[error("missing, unknown or expired token")]
    Unauthorized,
    #[error("bad credentials")]
    BadCredentials,
    #[error("{action} denied by {}", .decision.describe())]
    Forbidden { action: Action, decision: Box<Decision> },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("revision conflict: base {base}, current {current}")]
    Conflict { base: u64, current: u64 },
    #[error("strict mode rejected the save ({} violations)", .0.violations.len())]
    Constraint(Box<ValidationReport>),
    #[error("ontology rejected ({} errors)", .0.len())]
    Ontology(Vec<OntologyError>),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ServiceError {
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::BadRequest(_)
            | ServiceError::BadPage(_)
            | ServiceError::Parse(_)
            | ServiceError::ParseReport(_)
            | ServiceError::Query(_) => 400,
            ServiceError::Unauthorized | ServiceError::BadCredentials => 401,
            ServiceError::Forbidden { .. } => 403,
            ServiceError::NotFound(_) => 404,
            ServiceError::Conflict { .. } => 409,
            ServiceError::Constraint(_) | ServiceError::Ontology(_) => 422,
            ServiceError::Config(_) | ServiceError::Io(_) => 500,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::BadRequest(_) | ServiceError::BadPage(_) => "bad_request",
            ServiceError::Parse(_) | ServiceError::ParseReport(_) => "parse_error",
            ServiceError::Query(_) => "query_syntax",
            ServiceError::Unauthorized => "unauthorized",
            ServiceError::BadCredentials => "bad_credentials",
            ServiceError::Forbidden { .. } => "forbidden",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::Conflict { .. } => "conflict",
            ServiceError::Constraint(_) => "constraint_violation",
            ServiceError::Ontology(_) => "ontology_error",
            ServiceError::Config(_) | ServiceError::Io(_) => "internal",
        }
    }

    /// The JSON error document: `error` and `message`, plus details.
    pub fn body(&self) -> Value {
        let mut body = json!({ "error": self.code(), "message": self.to_string() });
        let extra = match self {
            ServiceError::Parse(d) => json!({ "diagnostics": d }),
            ServiceError::ParseReport(r) => json!({ "report": r }),
            ServiceError::Query(e) => json!({ "offset": e.offset() }),
            ServiceError::Forbidden { action, decision } => json!({
                "action": action,
                "rule": decision.matched_rule.as_ref().map(|r| r.to_string()),
            }),
            ServiceError::Conflict { base, current } => json!({ "base_revision": base, "current_revision": current }),
            ServiceError::Constraint(r) => json!({ "report": r }),
            ServiceError::Ontology(errs) => json!({
                "errors": errs.iter().map(|e| json!({ "line": e.line(), "message": e.to_string() })).collect::<Vec<_>>(),
            }),
            _ => Value::Null,
        };
        if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
            b.extend(e);
        }
        body
    }
}
