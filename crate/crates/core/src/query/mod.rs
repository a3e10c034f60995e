//! A SPARQL subset: `SELECT [DISTINCT] … WHERE { BGP FILTER… }` with
//! `ORDER BY`, `LIMIT` and `OFFSET`, evaluated over the quad store.

mod eval;
mod expr;
mod parser;
mod results;
pub(crate) mod syntax;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::rdf::Term;

pub use eval::{evaluate, graph_in_scope};
pub use expr::{compare, CompareOp, FilterError, FilterExpr, Operand, RegexPattern};
pub use parser::parse_query;
pub use results::{QueryResults, RESULTS_MEDIA_TYPE, SPARQL_QUERY_MEDIA_TYPE};
pub use syntax::default_prefixes;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown prefix '{prefix}:' at byte {offset}")]
    UnknownPrefix { prefix: String, offset: usize },
}

impl QueryError {
    pub fn offset(&self) -> usize {
        match self {
            QueryError::Syntax { offset, .. } | QueryError::UnknownPrefix { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermPattern {
    Var(String),
    Term(Term),
}

impl TermPattern {
    pub fn var(&self) -> Option<&str> {
        match self {
            TermPattern::Var(v) => Some(v),
            TermPattern::Term(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: TermPattern,
    pub predicate: TermPattern,
    pub object: TermPattern,
}

impl TriplePattern {
    pub fn new(subject: TermPattern, predicate: TermPattern, object: TermPattern) -> Self {
        TriplePattern { subject, predicate, object }
    }

    pub fn positions(&self) -> [&TermPattern; 3] {
        [&self.subject, &self.predicate, &self.object]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    All,
    Vars(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderKey {
    pub var: String,
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub prefixes: BTreeMap<String, String>,
    pub projection: Projection,
    pub distinct: bool,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<FilterExpr>,
    pub order_by: Vec<OrderKey>,
    pub limit: Option<u64>,
    pub offset: Option<u64>,
}

impl Query {
    /// Every variable of the basic graph pattern, in order of first use.
    pub fn pattern_vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in &self.patterns {
            for v in p.positions().into_iter().filter_map(TermPattern::var) {
                if !out.iter().any(|o| o == v) {
                    out.push(v.to_owned());
                }
            }
        }
        out
    }

    /// The result header: the selected variables, or all pattern
    /// variables for `SELECT *`.
    pub fn result_vars(&self) -> Vec<String> {
        match &self.projection {
            Projection::All => self.pattern_vars(),
            Projection::Vars(v) => v.clone(),
        }
    }
}

impl fmt::Display for Query {
    /// Renders the query in the syntax accepted by [`parse_query`].
    /// Prefix declarations are not repeated; terms use the default
    /// prefixes or full IRIs.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::from("SELECT ");
        if self.distinct {
            out.push_str("DISTINCT ");
        }
        match &self.projection {
            Projection::All => out.push('*'),
            Projection::Vars(vars) => {
                let list: Vec<String> = vars.iter().map(|v| format!("?{v}")).collect();
                out.push_str(&list.join(" "));
            }
        }
        out.push_str(" WHERE {\n");
        for p in &self.patterns {
            out.push_str("  ");
            for pos in p.positions() {
                match pos {
                    TermPattern::Var(v) => {
                        out.push('?');
                        out.push_str(v);
                    }
                    TermPattern::Term(t) => syntax::write_term(&mut out, t),
                }
                out.push(' ');
            }
            out.push_str(".\n");
        }
        for filter in &self.filters {
            out.push_str(&format!("  FILTER({filter})\n"));
        }
        out.push('}');
        if !self.order_by.is_empty() {
            out.push_str(" ORDER BY");
            for k in &self.order_by {
                if k.descending {
                    out.push_str(&format!(" DESC(?{})", k.var));
                } else {
                    out.push_str(&format!(" ?{}", k.var));
                }
            }
        }
        if let Some(n) = self.limit {
            out.push_str(&format!(" LIMIT {n}"));
        }
        if let Some(n) = self.offset {
            out.push_str(&format!(" OFFSET {n}"));
        }
        f.write_str(&out)
    }
}
