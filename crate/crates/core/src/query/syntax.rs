//! Token-level reading shared by the query parser and the ontology rule
//! syntax: terms, variables, prefixed names and filter expressions.

use std::collections::BTreeMap;

use crate::rdf::{Datatype, Literal, Term, RDF, RDF_TYPE, XSD, BASE};

use super::expr::{CompareOp, FilterExpr, Operand, RegexPattern};
use super::{QueryError, TermPattern};

pub fn default_prefixes() -> BTreeMap<String, String> {
    [("wb", BASE), ("rdf", RDF), ("xsd", XSD)]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .collect()
}

pub(crate) struct Cursor<'a> {
    pub src: &'a str,
    pub pos: usize,
    pub prefixes: BTreeMap<String, String>,
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn is_local_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '/' | '%' | '.')
}

impl<'a> Cursor<'a> {
    pub fn new(src: &'a str, prefixes: BTreeMap<String, String>) -> Self {
        Cursor { src, pos: 0, prefixes }
    }

    pub fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    pub fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.src.len()
    }

    pub fn error(&self, message: impl Into<String>) -> QueryError {
        QueryError::Syntax { offset: self.pos, message: message.into() }
    }

    pub fn error_at(&self, offset: usize, message: impl Into<String>) -> QueryError {
        QueryError::Syntax { offset, message: message.into() }
    }

    /// Skips whitespace and `#` line comments.
    pub fn skip_ws(&mut self) {
        loop {
            let rest = self.rest();
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with('#') {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else {
                break;
            }
        }
    }

    pub fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    pub fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, token: &str) -> Result<(), QueryError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{token}'")))
        }
    }

    /// Case-insensitive keyword followed by a non-name character.
    pub fn peek_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let rest = self.rest();
        rest.len() >= kw.len()
            && rest.is_char_boundary(kw.len())
            && rest[..kw.len()].eq_ignore_ascii_case(kw)
            && !rest[kw.len()..].starts_with(is_name_char)
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword(kw) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected {kw}")))
        }
    }

    pub fn name(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest.find(|c: char| !is_name_char(c)).unwrap_or(rest.len());
        if len == 0 || rest.starts_with(|c: char| c.is_ascii_digit() || c == '-') {
            return None;
        }
        self.pos += len;
        Some(&rest[..len])
    }

    pub fn unsigned(&mut self) -> Result<u64, QueryError> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        let n = rest[..len].parse().map_err(|_| self.error("expected a nonnegative integer"))?;
        self.pos += len;
        Ok(n)
    }

    pub fn variable(&mut self) -> Option<String> {
        self.skip_ws();
        let rest = self.rest();
        let body = rest.strip_prefix(['?', '$'])?;
        let len = body
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(body.len());
        if len == 0 {
            return None;
        }
        self.pos += 1 + len;
        Some(body[..len].to_owned())
    }

    pub fn term_pattern(&mut self) -> Result<TermPattern, QueryError> {
        if let Some(v) = self.variable() {
            return Ok(TermPattern::Var(v));
        }
        self.term().map(TermPattern::Term)
    }

    /// Like [`Self::term_pattern`], plus `a` for `rdf:type`.
    pub fn predicate_pattern(&mut self) -> Result<TermPattern, QueryError> {
        self.skip_ws();
        let rest = self.rest();
        if rest.starts_with('a') && !rest[1..].starts_with(is_name_char) {
            self.pos += 1;
            return Ok(TermPattern::Term(Term::Iri(RDF_TYPE.to_owned())));
        }
        self.term_pattern()
    }

    pub fn term(&mut self) -> Result<Term, QueryError> {
        self.skip_ws();
        let start = self.pos;
        let rest = self.rest();
        let Some(first) = rest.chars().next() else {
            return Err(self.error("unexpected end of input, expected a term"));
        };
        match first {
            '<' => self.iri_ref().and_then(|i| Term::iri(i).map_err(|e| self.error_at(start, e.to_string()))),
            '"' => self.literal(),
            '0'..='9' | '+' | '-' => self.number(),
            _ => {
                if self.eat_keyword("true") {
                    return Ok(Term::Literal(Literal::new("true", Datatype::Boolean).expect("valid")));
                }
                if self.eat_keyword("false") {
                    return Ok(Term::Literal(Literal::new("false", Datatype::Boolean).expect("valid")));
                }
                self.prefixed_name()
            }
        }
    }

    fn iri_ref(&mut self) -> Result<String, QueryError> {
        let start = self.pos;
        let body = &self.rest()[1..];
        let Some(end) = body.find('>') else {
            return Err(self.error_at(start, "unterminated IRI"));
        };
        self.pos += end + 2;
        Ok(body[..end].to_owned())
    }

    fn prefixed_name(&mut self) -> Result<Term, QueryError> {
        let start = self.pos;
        let rest = self.rest();
        let plen = rest.find(|c: char| !is_name_char(c)).unwrap_or(rest.len());
        if !rest[plen..].starts_with(':') {
            return Err(self.error_at(start, "expected a term"));
        }
        let prefix = &rest[..plen];
        let local_rest = &rest[plen + 1..];
        let mut llen = local_rest.find(|c: char| !is_local_char(c)).unwrap_or(local_rest.len());
        while llen > 0 && local_rest[..llen].ends_with('.') {
            llen -= 1;
        }
        let local = &local_rest[..llen];
        let Some(base) = self.prefixes.get(prefix) else {
            return Err(QueryError::UnknownPrefix { prefix: prefix.to_owned(), offset: start });
        };
        let iri = format!("{base}{local}");
        self.pos += plen + 1 + llen;
        Term::iri(iri).map_err(|e| self.error_at(start, e.to_string()))
    }

    fn literal(&mut self) -> Result<Term, QueryError> {
        let start = self.pos;
        self.pos += 1;
        let mut lexical = String::new();
        loop {
            let Some(c) = self.rest().chars().next() else {
                return Err(self.error_at(start, "unterminated string literal"));
            };
            self.pos += c.len_utf8();
            match c {
                '"' => break,
                '\\' => {
                    let Some(e) = self.rest().chars().next() else {
                        return Err(self.error_at(start, "unterminated string literal"));
                    };
                    self.pos += e.len_utf8();
                    lexical.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        'r' => '\r',
                        '"' => '"',
                        '\\' => '\\',
                        other => return Err(self.error(format!("unknown escape \\{other}"))),
                    });
                }
                c => lexical.push(c),
            }
        }
        let mut datatype = Datatype::String;
        if self.rest().starts_with("^^") {
            self.pos += 2;
            let dt_start = self.pos;
            let iri = if self.rest().starts_with('<') {
                self.iri_ref()?
            } else {
                match self.prefixed_name()? {
                    Term::Iri(i) => i,
                    _ => unreachable!("prefixed names are IRIs"),
                }
            };
            datatype = Datatype::from_iri(&iri)
                .ok_or_else(|| self.error_at(dt_start, format!("unsupported datatype <{iri}>")))?;
        } else if self.rest().starts_with('@') {
            return Err(self.error("language tags are not supported"));
        }
        Literal::new(lexical, datatype)
            .map(Term::Literal)
            .map_err(|e| self.error_at(start, e.to_string()))
    }

    fn number(&mut self) -> Result<Term, QueryError> {
        let start = self.pos;
        let rest = self.rest();
        let mut len = usize::from(rest.starts_with(['+', '-']));
        len += rest[len..].find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len() - len);
        let mut datatype = Datatype::Integer;
        if rest[len..].starts_with('.') && rest[len + 1..].starts_with(|c: char| c.is_ascii_digit()) {
            len += 1;
            len += rest[len..].find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len() - len);
            datatype = Datatype::Decimal;
        }
        let lexical = &rest[..len];
        let lit = Literal::new(lexical, datatype).map_err(|_| self.error_at(start, "malformed number"))?;
        self.pos += len;
        Ok(Term::Literal(lit))
    }

    /// `expr := and ('||' and)*`
    pub fn expr(&mut self) -> Result<FilterExpr, QueryError> {
        let mut left = self.and_expr()?;
        while self.eat("||") {
            let right = self.and_expr()?;
            left = FilterExpr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<FilterExpr, QueryError> {
        let mut left = self.unary()?;
        while self.eat("&&") {
            let right = self.unary()?;
            left = FilterExpr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<FilterExpr, QueryError> {
        self.skip_ws();
        if self.rest().starts_with('!') && !self.rest().starts_with("!=") {
            self.pos += 1;
            return Ok(FilterExpr::Not(Box::new(self.unary()?)));
        }
        if self.eat("(") {
            let inner = self.expr()?;
            self.expect(")")?;
            return Ok(inner);
        }
        if self.peek_keyword("regex") {
            return self.regex();
        }
        let left = self.operand()?;
        self.skip_ws();
        let op = [
            ("<=", CompareOp::Le),
            (">=", CompareOp::Ge),
            ("!=", CompareOp::Ne),
            ("=", CompareOp::Eq),
            ("<", CompareOp::Lt),
            (">", CompareOp::Gt),
        ]
        .into_iter()
        .find(|(tok, _)| self.rest().starts_with(tok));
        let Some((tok, op)) = op else {
            return Err(self.error("expected a comparison operator"));
        };
        self.pos += tok.len();
        let right = self.operand()?;
        Ok(FilterExpr::Compare { op, left, right })
    }

    fn operand(&mut self) -> Result<Operand, QueryError> {
        match self.term_pattern()? {
            TermPattern::Var(v) => Ok(Operand::Var(v)),
            TermPattern::Term(t) => Ok(Operand::Const(t)),
        }
    }

    fn regex(&mut self) -> Result<FilterExpr, QueryError> {
        self.expect_keyword("regex")?;
        self.expect("(")?;
        let target = self.operand()?;
        self.expect(",")?;
        let pat_start = {
            self.skip_ws();
            self.pos
        };
        let pattern = self.string_arg()?;
        let flags = if self.eat(",") { self.string_arg()? } else { String::new() };
        self.expect(")")?;
        let compiled = RegexPattern::new(&pattern, &flags).map_err(|e| self.error_at(pat_start, e))?;
        Ok(FilterExpr::Regex { target, pattern: compiled })
    }

    fn string_arg(&mut self) -> Result<String, QueryError> {
        let at = self.pos;
        match self.term()? {
            Term::Literal(l) if l.datatype() == Datatype::String => Ok(l.lexical().to_owned()),
            _ => Err(self.error_at(at, "expected a string literal")),
        }
    }
}

/// Writes a term in the surface syntax read by [`Cursor::term`].
pub(crate) fn write_term(out: &mut String, term: &Term) {
    match term {
        Term::Iri(i) if i == RDF_TYPE => out.push_str("rdf:type"),
        Term::Iri(i) => {
            let short = [("wb:", BASE), ("rdf:", RDF), ("xsd:", XSD)]
                .into_iter()
                .find_map(|(p, base)| i.strip_prefix(base).map(|local| (p, local)))
                .filter(|(_, local)| {
                    !local.is_empty() && local.chars().all(is_local_char) && !local.ends_with('.')
                });
            match short {
                Some((p, local)) => {
                    out.push_str(p);
                    out.push_str(local);
                }
                None => {
                    out.push('<');
                    out.push_str(i);
                    out.push('>');
                }
            }
        }
        Term::Blank(b) => {
            out.push_str("_:");
            out.push_str(b);
        }
        Term::Literal(l) => {
            out.push('"');
            for c in l.lexical().chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    '\r' => out.push_str("\\r"),
                    c => out.push(c),
                }
            }
            out.push('"');
            if l.datatype() != Datatype::String {
                out.push_str("^^xsd:");
                out.push_str(l.datatype().name());
            }
        }
    }
}
