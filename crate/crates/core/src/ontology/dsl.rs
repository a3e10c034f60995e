//! The line-oriented `.wbo` ontology language.
//!
//! ```text
//! class Church subclassof Building
//! datatype property height domain Building range decimal max 1
//! relation Dating
//!   role method : string required
//!   role year : integer
//! rule "dated-needs-year" when { (?d, rdf:type, wb:onto/Dating) } expect { (?d, wb:onto/year, ?y) }
//! ```

use crate::query::syntax::{default_prefixes, write_term, Cursor};
use crate::query::{QueryError, TermPattern, TriplePattern};
use crate::rdf::{Datatype, Term};

use super::{
    ConstraintRule, Ontology, OntologyBuilder, OntologyError, PropertyDecl, PropertyKind, RelationSchema, Role,
    TypeRef,
};

/// Parses and resolves a DSL document. All errors found are returned,
/// ordered by line.
pub fn load_ontology(text: &str) -> Result<Ontology, Vec<OntologyError>> {
    let mut builder = OntologyBuilder::default();
    let mut errors = Vec::new();
    let line_starts: Vec<usize> = std::iter::once(0)
        .chain(text.match_indices('\n').map(|(i, _)| i + 1))
        .collect();
    let line_of = |offset: usize| line_starts.partition_point(|&s| s <= offset);

    // Whether the previous declaration was a relation that `role` lines extend.
    let mut open_relation = false;
    let mut idx = 0;
    while idx < line_starts.len() {
        let start = line_starts[idx];
        let end = line_starts.get(idx + 1).map_or(text.len(), |e| e - 1);
        let line_no = idx + 1;
        idx += 1;
        let raw = &text[start..end];
        let content = raw.split('#').next().unwrap_or_default().trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |message: String| OntologyError::Syntax { line: line_no, message };

        if content.split_whitespace().next() == Some("rule") {
            open_relation = false;
            let mut cursor = Cursor::new(text, default_prefixes());
            cursor.pos = start;
            match parse_rule(&mut cursor) {
                Ok(rule) => {
                    let last = line_of(cursor.pos.saturating_sub(1).max(start));
                    let line_end = line_starts.get(last).map_or(text.len(), |e| e - 1);
                    let tail = &text[cursor.pos..line_end];
                    if !tail.split('#').next().unwrap_or_default().trim().is_empty() {
                        errors.push(OntologyError::Syntax {
                            line: last,
                            message: format!("unexpected text after rule: {:?}", tail.trim()),
                        });
                    }
                    builder.rules.push((rule, line_no));
                    idx = last;
                }
                Err(e) => {
                    let line = line_of(e.offset().min(text.len().saturating_sub(1)));
                    errors.push(match e {
                        QueryError::UnknownPrefix { prefix, .. } => {
                            OntologyError::UndefinedReference { name: format!("{prefix}:"), line }
                        }
                        QueryError::Syntax { message, .. } => OntologyError::Syntax { line, message },
                    });
                    // Resynchronise on the next line that starts a declaration.
                    while idx < line_starts.len() {
                        let s = line_starts[idx];
                        let e = line_starts.get(idx + 1).map_or(text.len(), |e| e - 1);
                        let first = text[s..e].split_whitespace().next().unwrap_or_default();
                        if matches!(first, "class" | "property" | "object" | "datatype" | "relation" | "rule") {
                            break;
                        }
                        idx += 1;
                    }
                }
            }
            continue;
        }

        let spaced = content.replace(',', " , ").replace(':', " : ");
        let tokens: Vec<&str> = spaced.split_whitespace().collect();
        let result = match tokens[0] {
            "class" => parse_class(&tokens).map(|(name, supers)| {
                builder.classes.push((name, supers, line_no));
                false
            }),
            "property" | "object" | "datatype" => parse_property(&tokens).map(|p| {
                builder.properties.push((p, line_no));
                false
            }),
            "relation" => {
                let name = tokens.get(1).copied().unwrap_or_default();
                if name.is_empty() {
                    Err("expected a relation name".to_owned())
                } else {
                    parse_roles(&tokens[2..]).map(|roles| {
                        builder.relations.push((RelationSchema { name: name.to_owned(), roles }, line_no));
                        true
                    })
                }
            }
            "role" if open_relation => parse_roles(&tokens).map(|roles| {
                let (rel, _) = builder.relations.last_mut().expect("open relation");
                rel.roles.extend(roles);
                true
            }),
            "role" => Err("role declaration outside a relation".to_owned()),
            other => Err(format!("unknown declaration '{other}'")),
        };
        match result {
            Ok(opens) => open_relation = opens,
            Err(message) => {
                errors.push(syntax(message));
                open_relation = false;
            }
        }
    }

    match builder.build() {
        Ok(o) if errors.is_empty() => Ok(o),
        Ok(_) => Err(errors),
        Err(mut more) => {
            errors.append(&mut more);
            errors.sort_by_key(OntologyError::line);
            Err(errors)
        }
    }
}

fn parse_class(tokens: &[&str]) -> Result<(String, Vec<String>), String> {
    let name = tokens.get(1).ok_or("expected a class name")?;
    let supers = match tokens.get(2) {
        None => Vec::new(),
        Some(&"subclassof") => parse_name_list(&tokens[3..])?,
        Some(other) => return Err(format!("expected 'subclassof', found '{other}'")),
    };
    Ok((name.to_string(), supers))
}

fn parse_name_list(tokens: &[&str]) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut expect_name = true;
    for t in tokens {
        match (expect_name, *t) {
            (true, ",") => return Err("expected a class name before ','".into()),
            (true, name) => out.push(name.to_owned()),
            (false, ",") => {}
            (false, other) => return Err(format!("expected ',' before '{other}'")),
        }
        expect_name = !expect_name;
    }
    if expect_name {
        return Err("expected a class name".into());
    }
    Ok(out)
}

fn type_ref(name: &str) -> TypeRef {
    match Datatype::from_name(name) {
        Some(d) => TypeRef::Datatype(d),
        None => TypeRef::Class(name.to_owned()),
    }
}

fn parse_property(tokens: &[&str]) -> Result<PropertyDecl, String> {
    let (kind, rest) = match tokens[0] {
        "object" => (Some(PropertyKind::Object), &tokens[1..]),
        "datatype" => (Some(PropertyKind::Data), &tokens[1..]),
        _ => (None, tokens),
    };
    let [kw, name, dom_kw, domain, range_kw, range, tail @ ..] = rest else {
        return Err("expected 'property NAME domain CLASS range TYPE'".into());
    };
    if (*kw, *dom_kw, *range_kw) != ("property", "domain", "range") {
        return Err("expected 'property NAME domain CLASS range TYPE'".into());
    }
    let range = type_ref(range);
    let kind = kind.unwrap_or(match range {
        TypeRef::Datatype(_) => PropertyKind::Data,
        TypeRef::Class(_) => PropertyKind::Object,
    });
    let mut decl = PropertyDecl {
        name: name.to_string(),
        kind,
        domain: domain.to_string(),
        range,
        min_card: 0,
        max_card: None,
    };
    let mut rest = tail;
    let (mut saw_min, mut saw_max) = (false, false);
    while let [kw, value, more @ ..] = rest {
        let number = || value.parse::<u32>().map_err(|_| format!("'{value}' is not a cardinality"));
        match *kw {
            "min" if !saw_min => {
                decl.min_card = number()?;
                saw_min = true;
            }
            "max" if !saw_max => {
                decl.max_card = if *value == "unbounded" { None } else { Some(number()?) };
                saw_max = true;
            }
            other => return Err(format!("unexpected '{other}'")),
        }
        rest = more;
    }
    if let Some(extra) = rest.first() {
        return Err(format!("unexpected '{extra}'"));
    }
    Ok(decl)
}

fn parse_roles(mut tokens: &[&str]) -> Result<Vec<Role>, String> {
    let mut roles = Vec::new();
    while !tokens.is_empty() {
        let ["role", name, ":", filler, rest @ ..] = tokens else {
            return Err("expected 'role NAME : FILLER [required]'".into());
        };
        let (required, rest) = match rest {
            ["required", more @ ..] => (true, more),
            more => (false, more),
        };
        roles.push(Role { name: name.to_string(), filler: type_ref(filler), required });
        tokens = rest;
    }
    Ok(roles)
}

fn parse_rule(c: &mut Cursor<'_>) -> Result<ConstraintRule, QueryError> {
    c.expect_keyword("rule")?;
    c.skip_ws();
    let at = c.pos;
    let name = match c.term()? {
        Term::Literal(l) if l.datatype() == Datatype::String => l.lexical().to_owned(),
        _ => return Err(c.error_at(at, "expected a quoted rule name")),
    };
    c.expect_keyword("when")?;
    let (body, filters) = parse_atoms(c, true)?;
    c.expect_keyword("expect")?;
    let (head, _) = parse_atoms(c, false)?;
    Ok(ConstraintRule { name, body, filters, head })
}

fn parse_atoms(
    c: &mut Cursor<'_>,
    allow_filters: bool,
) -> Result<(Vec<TriplePattern>, Vec<crate::query::FilterExpr>), QueryError> {
    c.expect("{")?;
    let mut patterns = Vec::new();
    let mut filters = Vec::new();
    loop {
        if c.eat("}") {
            return Ok((patterns, filters));
        }
        if allow_filters && c.eat_keyword("filter") {
            c.expect("(")?;
            filters.push(c.expr()?);
            c.expect(")")?;
        } else if c.eat("(") {
            let s = c.term_pattern()?;
            c.expect(",")?;
            let p = c.term_pattern()?;
            c.expect(",")?;
            let o = c.term_pattern()?;
            c.expect(")")?;
            patterns.push(TriplePattern::new(s, p, o));
        } else if c.peek().is_none() {
            return Err(c.error("unterminated rule block"));
        } else {
            return Err(c.error("expected '(' or 'filter'"));
        }
        c.eat(".");
    }
}

fn write_atoms(out: &mut String, patterns: &[TriplePattern]) {
    for p in patterns {
        out.push_str(" (");
        for (i, pos) in p.positions().into_iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            match pos {
                TermPattern::Var(v) => {
                    out.push('?');
                    out.push_str(v);
                }
                TermPattern::Term(t) => write_term(out, t),
            }
        }
        out.push(')');
    }
}

pub(super) fn render(ont: &Ontology) -> String {
    let mut out = String::new();
    for c in &ont.classes {
        out.push_str("class ");
        out.push_str(c);
        let supers: Vec<&str> = ont
            .subclass_edges
            .iter()
            .filter(|(sub, _)| sub == c)
            .map(|(_, sup)| sup.as_str())
            .collect();
        if !supers.is_empty() {
            out.push_str(" subclassof ");
            out.push_str(&supers.join(", "));
        }
        out.push('\n');
    }
    for p in ont.properties.values() {
        let kind = match p.kind {
            PropertyKind::Data => "datatype",
            PropertyKind::Object => "object",
        };
        out.push_str(&format!("{kind} property {} domain {} range {}", p.name, p.domain, p.range));
        if p.min_card != 0 {
            out.push_str(&format!(" min {}", p.min_card));
        }
        if let Some(max) = p.max_card {
            out.push_str(&format!(" max {max}"));
        }
        out.push('\n');
    }
    for r in ont.relations.values() {
        out.push_str(&format!("relation {}\n", r.name));
        for role in &r.roles {
            out.push_str(&format!("  role {} : {}", role.name, role.filler));
            if role.required {
                out.push_str(" required");
            }
            out.push('\n');
        }
    }
    for rule in &ont.rules {
        out.push_str(&format!("rule \"{}\" when {{", rule.name));
        write_atoms(&mut out, &rule.body);
        for f in &rule.filters {
            out.push_str(&format!(" filter({f})"));
        }
        out.push_str(" } expect {");
        write_atoms(&mut out, &rule.head);
        out.push_str(" }\n");
    }
    out
}
