use super::syntax::{default_prefixes, Cursor};
use super::{OrderKey, Projection, Query, QueryError, TermPattern, TriplePattern};

/// Parses query text. Keywords are case-insensitive; `wb:`, `rdf:` and
/// `xsd:` are predeclared and `a` abbreviates `rdf:type`.
pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    let mut c = Cursor::new(text, default_prefixes());

    while c.eat_keyword("PREFIX") {
        let name = c.name().unwrap_or_default().to_owned();
        c.expect(":")?;
        c.skip_ws();
        if !c.rest().starts_with('<') {
            return Err(c.error("expected <IRI> in PREFIX declaration"));
        }
        let start = c.pos;
        let end = c.rest().find('>').ok_or_else(|| c.error("unterminated IRI"))?;
        let iri = c.rest()[1..end].to_owned();
        c.pos = start + end + 1;
        c.prefixes.insert(name, iri);
    }

    c.expect_keyword("SELECT")?;
    let distinct = c.eat_keyword("DISTINCT");
    let projection = if c.eat("*") {
        Projection::All
    } else {
        let mut vars: Vec<(String, usize)> = Vec::new();
        loop {
            c.skip_ws();
            let at = c.pos;
            let Some(v) = c.variable() else { break };
            if vars.iter().any(|(seen, _)| *seen == v) {
                return Err(c.error_at(at, format!("variable ?{v} selected twice")));
            }
            vars.push((v, at));
        }
        if vars.is_empty() {
            return Err(c.error("expected '*' or at least one variable after SELECT"));
        }
        Projection::Vars(vars.into_iter().map(|(v, _)| v).collect())
    };
    let projection_offset = c.pos;

    c.expect_keyword("WHERE")?;
    c.expect("{")?;
    let mut patterns = Vec::new();
    let mut filters = Vec::new();
    loop {
        if c.eat("}") {
            break;
        }
        if c.eat_keyword("FILTER") {
            c.expect("(")?;
            filters.push(c.expr()?);
            c.expect(")")?;
            c.eat(".");
            continue;
        }
        if c.peek().is_none() {
            return Err(c.error("unterminated WHERE block"));
        }
        let subject = c.term_pattern()?;
        c.skip_ws();
        let pred_at = c.pos;
        let predicate = c.predicate_pattern()?;
        if matches!(&predicate, TermPattern::Term(t) if !t.is_iri()) {
            return Err(c.error_at(pred_at, "predicate must be an IRI or a variable"));
        }
        let object = c.term_pattern()?;
        patterns.push(TriplePattern::new(subject, predicate, object));
        if !c.eat(".") && c.peek() != Some('}') && !c.peek_keyword("FILTER") {
            return Err(c.error("expected '.', FILTER or '}' after triple pattern"));
        }
    }
    if patterns.is_empty() {
        return Err(c.error("WHERE block needs at least one triple pattern"));
    }

    let mut query = Query {
        prefixes: c.prefixes.clone(),
        projection,
        distinct,
        patterns,
        filters,
        order_by: Vec::new(),
        limit: None,
        offset: None,
    };
    let bound = query.pattern_vars();
    if let Projection::Vars(vars) = &query.projection {
        if let Some(v) = vars.iter().find(|v| !bound.contains(v)) {
            return Err(c.error_at(projection_offset, format!("selected variable ?{v} does not occur in the patterns")));
        }
    }

    if c.eat_keyword("ORDER") {
        c.expect_keyword("BY")?;
        loop {
            c.skip_ws();
            let at = c.pos;
            let key = if c.peek_keyword("ASC") || c.peek_keyword("DESC") {
                let descending = c.eat_keyword("DESC");
                if !descending {
                    c.expect_keyword("ASC")?;
                }
                c.expect("(")?;
                let v = c.variable().ok_or_else(|| c.error("expected a variable"))?;
                c.expect(")")?;
                OrderKey { var: v, descending }
            } else if let Some(v) = c.variable() {
                OrderKey { var: v, descending: false }
            } else {
                break;
            };
            if !bound.contains(&key.var) {
                return Err(c.error_at(at, format!("ORDER BY variable ?{} does not occur in the patterns", key.var)));
            }
            query.order_by.push(key);
        }
        if query.order_by.is_empty() {
            return Err(c.error("expected an ORDER BY key"));
        }
    }

    loop {
        if query.limit.is_none() && c.eat_keyword("LIMIT") {
            query.limit = Some(c.unsigned()?);
        } else if query.offset.is_none() && c.eat_keyword("OFFSET") {
            query.offset = Some(c.unsigned()?);
        } else {
            break;
        }
    }

    if !c.at_end() {
        return Err(c.error("unexpected trailing input"));
    }
    Ok(query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::{CompareOp, FilterExpr, Operand};
    use crate::rdf::{Datatype, Term, RDF_TYPE};

    #[test]
    fn single_pattern() {
        let q = parse_query("SELECT ?p WHERE { ?p rdf:type wb:onto/Church . }").unwrap();
        assert_eq!(q.patterns.len(), 1);
        assert_eq!(q.projection, Projection::Vars(vec!["p".into()]));
        assert_eq!(q.patterns[0].predicate, TermPattern::Term(Term::Iri(RDF_TYPE.into())));
        assert_eq!(
            q.patterns[0].object,
            TermPattern::Term(Term::Iri("http://wikibridge.example/onto/Church".into()))
        );
    }

    #[test]
    fn empty_block_is_an_error() {
        assert!(matches!(parse_query("SELECT ?x WHERE { }"), Err(QueryError::Syntax { .. })));
    }

    #[test]
    fn unknown_prefix() {
        let err = parse_query("SELECT ?x WHERE { ?x foo:bar ?y }").unwrap_err();
        assert_eq!(err, QueryError::UnknownPrefix { prefix: "foo".into(), offset: 21 });
    }

    #[test]
    fn declared_prefix_and_keywords_any_case() {
        let q = parse_query(
            "prefix ex: <http://ex.example/>\nselect distinct * where { ?s a ex:T . ?s ex:h ?h filter(?h > 10) } \
             order by desc(?h) ?s limit 5 offset 2",
        )
        .unwrap();
        assert!(q.distinct);
        assert_eq!(q.projection, Projection::All);
        assert_eq!(q.patterns.len(), 2);
        assert_eq!(
            q.filters,
            vec![FilterExpr::Compare {
                op: CompareOp::Gt,
                left: Operand::Var("h".into()),
                right: Operand::Const(Term::literal("10", Datatype::Integer).unwrap()),
            }]
        );
        assert_eq!(q.order_by.len(), 2);
        assert!(q.order_by[0].descending);
        assert_eq!((q.limit, q.offset), (Some(5), Some(2)));
        assert_eq!(q.result_vars(), vec!["s".to_string(), "h".to_string()]);
    }

    #[test]
    fn prefixed_name_drops_trailing_dot() {
        let q = parse_query("SELECT ?x WHERE { ?x a wb:onto/Church. }").unwrap();
        assert_eq!(
            q.patterns[0].object,
            TermPattern::Term(Term::Iri("http://wikibridge.example/onto/Church".into()))
        );
    }

    #[test]
    fn rejects_unbound_selection_and_bad_predicate() {
        assert!(parse_query("SELECT ?z WHERE { ?x a wb:onto/C }").is_err());
        assert!(parse_query("SELECT ?x WHERE { ?x \"p\" ?y }").is_err());
        assert!(parse_query("SELECT ?x WHERE { ?x a ?y } ORDER BY ?q").is_err());
        assert!(parse_query("SELECT ?x WHERE { ?x a ?y } LIMIT -1").is_err());
        assert!(parse_query("SELECT ?x WHERE { ?x a ?y } garbage").is_err());
        assert!(parse_query("SELECT ?x WHERE { a ?p ?x }").is_err());
        assert!(parse_query("SELECT ?x WHERE { ?x ?p a }").is_err());
        assert!(parse_query("SELECT ?x WHERE { ?x A ?y }").is_err());
    }

    #[test]
    fn error_offsets_point_into_the_text() {
        let text = "SELECT ?x WHERE { ?x a }";
        let err = parse_query(text).unwrap_err();
        assert!(err.offset() <= text.len());
        assert_eq!(err.offset(), 23);
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "SELECT DISTINCT ?p ?h WHERE { ?p wb:onto/height ?h . ?p a wb:onto/Church FILTER(?h >= 1.5 && regex(?n, \"x\")) ?p wb:onto/name ?n } ORDER BY DESC(?h) LIMIT 3 OFFSET 1",
            "SELECT * WHERE { ?s ?p \"a\\\"b\" . ?s ?p2 <http://other.example/x> }",
        ] {
            let q = parse_query(text).unwrap();
            assert_eq!(parse_query(&q.to_string()).unwrap(), q);
        }
    }
}
