//! FILTER expressions: boolean combinations of comparisons and `regex`.

use std::cmp::Ordering;
use std::fmt;

use regex::{Regex, RegexBuilder};
use thiserror::Error;

use crate::rdf::{Datatype, Term};

use super::syntax::write_term;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Var(String),
    Const(Term),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    fn holds(self, ord: Ordering) -> bool {
        match self {
            CompareOp::Eq => ord == Ordering::Equal,
            CompareOp::Ne => ord != Ordering::Equal,
            CompareOp::Lt => ord == Ordering::Less,
            CompareOp::Le => ord != Ordering::Greater,
            CompareOp::Gt => ord == Ordering::Greater,
            CompareOp::Ge => ord != Ordering::Less,
        }
    }
}

/// A compiled regular expression that compares by its source text.
#[derive(Debug, Clone)]
pub struct RegexPattern {
    pub source: String,
    pub flags: String,
    compiled: Regex,
}

impl RegexPattern {
    pub fn new(source: &str, flags: &str) -> Result<RegexPattern, String> {
        let mut builder = RegexBuilder::new(source);
        for f in flags.chars() {
            match f {
                'i' => builder.case_insensitive(true),
                's' => builder.dot_matches_new_line(true),
                'm' => builder.multi_line(true),
                'x' => builder.ignore_whitespace(true),
                other => return Err(format!("unsupported regex flag '{other}'")),
            };
        }
        let compiled = builder.build().map_err(|e| format!("invalid regex: {e}"))?;
        Ok(RegexPattern { source: source.to_owned(), flags: flags.to_owned(), compiled })
    }

    pub fn is_match(&self, text: &str) -> bool {
        self.compiled.is_match(text)
    }
}

impl PartialEq for RegexPattern {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.flags == other.flags
    }
}

impl Eq for RegexPattern {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterExpr {
    Or(Box<FilterExpr>, Box<FilterExpr>),
    And(Box<FilterExpr>, Box<FilterExpr>),
    Not(Box<FilterExpr>),
    Compare { op: CompareOp, left: Operand, right: Operand },
    Regex { target: Operand, pattern: RegexPattern },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FilterError {
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("variable ?{0} is unbound")]
    Unbound(String),
}

impl FilterExpr {
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        let mut operand = |o: &'a Operand| {
            if let Operand::Var(v) = o {
                out.push(v.as_str());
            }
        };
        match self {
            FilterExpr::Or(a, b) | FilterExpr::And(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            FilterExpr::Not(a) => a.collect_vars(out),
            FilterExpr::Compare { left, right, .. } => {
                operand(left);
                operand(right);
            }
            FilterExpr::Regex { target, .. } => operand(target),
        }
    }

    /// Three-valued evaluation: an error is neither true nor false, and
    /// `||` / `&&` absorb errors when the other side decides the result.
    pub fn evaluate<'t>(&self, binding: &dyn Fn(&str) -> Option<&'t Term>) -> Result<bool, FilterError> {
        match self {
            FilterExpr::Or(a, b) => match (a.evaluate(binding), b.evaluate(binding)) {
                (Ok(true), _) | (_, Ok(true)) => Ok(true),
                (Ok(false), Ok(false)) => Ok(false),
                (Err(e), _) | (_, Err(e)) => Err(e),
            },
            FilterExpr::And(a, b) => match (a.evaluate(binding), b.evaluate(binding)) {
                (Ok(false), _) | (_, Ok(false)) => Ok(false),
                (Ok(true), Ok(true)) => Ok(true),
                (Err(e), _) | (_, Err(e)) => Err(e),
            },
            FilterExpr::Not(a) => a.evaluate(binding).map(|v| !v),
            FilterExpr::Compare { op, left, right } => {
                let l = resolve(left, binding)?;
                let r = resolve(right, binding)?;
                compare(*op, l, r)
            }
            FilterExpr::Regex { target, pattern } => match resolve(target, binding)? {
                Term::Literal(l) if l.datatype() == Datatype::String => Ok(pattern.is_match(l.lexical())),
                other => Err(FilterError::TypeMismatch(format!("regex needs a string, got {other}"))),
            },
        }
    }
}

fn resolve<'a, 't: 'a>(op: &'a Operand, binding: &dyn Fn(&str) -> Option<&'t Term>) -> Result<&'a Term, FilterError> {
    match op {
        Operand::Const(t) => Ok(t),
        Operand::Var(v) => binding(v).ok_or_else(|| FilterError::Unbound(v.clone())),
    }
}

/// Comparison semantics: numeric literals by value; string, boolean and date
/// literals by lexical form within one datatype; IRIs and blank nodes support
/// only `=` and `!=`. Anything else is a type mismatch, except that `=`/`!=`
/// across term kinds is simply false/true.
pub fn compare(op: CompareOp, left: &Term, right: &Term) -> Result<bool, FilterError> {
    let mismatch = || FilterError::TypeMismatch(format!("cannot compare {left} {} {right}", op.symbol()));
    match (left, right) {
        (Term::Literal(a), Term::Literal(b)) => {
            if let Some(ord) = a.numeric_cmp(b) {
                Ok(op.holds(ord))
            } else if a.datatype() == b.datatype() {
                Ok(op.holds(a.lexical().cmp(b.lexical())))
            } else {
                Err(mismatch())
            }
        }
        (Term::Iri(_), Term::Iri(_)) | (Term::Blank(_), Term::Blank(_)) => match op {
            CompareOp::Eq => Ok(left == right),
            CompareOp::Ne => Ok(left != right),
            _ => Err(mismatch()),
        },
        _ => match op {
            CompareOp::Eq => Ok(false),
            CompareOp::Ne => Ok(true),
            _ => Err(mismatch()),
        },
    }
}

fn write_operand(out: &mut String, op: &Operand) {
    match op {
        Operand::Var(v) => {
            out.push('?');
            out.push_str(v);
        }
        Operand::Const(t) => write_term(out, t),
    }
}

impl fmt::Display for FilterExpr {
    /// Fully parenthesized, re-readable rendering.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterExpr::Or(a, b) => write!(f, "({a} || {b})"),
            FilterExpr::And(a, b) => write!(f, "({a} && {b})"),
            FilterExpr::Not(a) => write!(f, "!({a})"),
            FilterExpr::Compare { op, left, right } => {
                let mut s = String::new();
                write_operand(&mut s, left);
                s.push(' ');
                s.push_str(op.symbol());
                s.push(' ');
                write_operand(&mut s, right);
                f.write_str(&s)
            }
            FilterExpr::Regex { target, pattern } => {
                let mut s = String::from("regex(");
                write_operand(&mut s, target);
                s.push_str(", ");
                write_term(&mut s, &Term::Literal(crate::rdf::Literal::string(pattern.source.clone())));
                if !pattern.flags.is_empty() {
                    s.push_str(", ");
                    write_term(&mut s, &Term::Literal(crate::rdf::Literal::string(pattern.flags.clone())));
                }
                s.push(')');
                f.write_str(&s)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::syntax::{default_prefixes, Cursor};
    use crate::rdf::Literal;

    fn parse(src: &str) -> FilterExpr {
        let mut c = Cursor::new(src, default_prefixes());
        let e = c.expr().unwrap();
        assert!(c.at_end(), "trailing input in {src:?}");
        e
    }

    fn eval(src: &str, var: &str, value: Term) -> Result<bool, FilterError> {
        let e = parse(src);
        e.evaluate(&|v: &str| if v == var { Some(&value) } else { None })
    }

    fn dec(s: &str) -> Term {
        Term::Literal(Literal::new(s, Datatype::Decimal).unwrap())
    }

    #[test]
    fn numeric_comparisons_cross_integer_and_decimal() {
        assert_eq!(eval("?h > 10", "h", dec("12.5")), Ok(true));
        assert_eq!(eval("?h > 10", "h", Term::literal("8", Datatype::Integer).unwrap()), Ok(false));
        assert_eq!(eval("?h = 10.0", "h", Term::literal("10", Datatype::Integer).unwrap()), Ok(true));
    }

    #[test]
    fn cross_datatype_is_type_mismatch() {
        assert!(matches!(eval("?h > 10", "h", Term::Literal(Literal::string("x"))), Err(FilterError::TypeMismatch(_))));
        assert!(matches!(
            eval("?h < \"2020-01-01\"^^xsd:date", "h", dec("1.0")),
            Err(FilterError::TypeMismatch(_))
        ));
    }

    #[test]
    fn three_valued_logic() {
        let s = Term::Literal(Literal::string("x"));
        assert_eq!(eval("?h > 10 || true = true", "h", s.clone()), Ok(true));
        assert_eq!(eval("?h > 10 && 1 = 2", "h", s.clone()), Ok(false));
        assert!(eval("!(?h > 10)", "h", s).is_err());
        assert!(matches!(eval("?zz = 1", "h", dec("1.0")), Err(FilterError::Unbound(_))));
    }

    #[test]
    fn regex_matching() {
        let s = Term::Literal(Literal::string("St Martin"));
        assert_eq!(eval("regex(?n, \"^st\", \"i\")", "n", s.clone()), Ok(true));
        assert_eq!(eval("regex(?n, \"^st\")", "n", s), Ok(false));
        assert!(eval("regex(?n, \"x\")", "n", Term::Iri("http://a/x".into())).is_err());
    }

    #[test]
    fn display_reparses() {
        for src in [
            "?a > 3 && (?b = wb:onto/X || !(?c <= \"q\\\"x\"))",
            "regex(?n, \"a.b\", \"i\") || ?d >= \"2020-01-01\"^^xsd:date",
            "?x != <http://other.example/z> && ?y < -2.5",
        ] {
            let e = parse(src);
            assert_eq!(parse(&e.to_string()), e, "{src}");
        }
    }

    #[test]
    fn iri_equality_and_kind_mismatch() {
        let i = Term::Iri("http://wikibridge.example/onto/X".into());
        assert_eq!(eval("?a = wb:onto/X", "a", i.clone()), Ok(true));
        assert_eq!(eval("?a = 1", "a", i.clone()), Ok(false));
        assert!(eval("?a < wb:onto/X", "a", i).is_err());
    }
}
