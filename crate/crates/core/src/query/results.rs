use serde_json::{json, Map, Value};

use crate::rdf::Term;

pub const RESULTS_MEDIA_TYPE: &str = "application/sparql-results+json";
pub const SPARQL_QUERY_MEDIA_TYPE: &str = "application/sparql-query";

/// An evaluated query: header variables and one row per solution, aligned
/// with `vars`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResults {
    pub vars: Vec<String>,
    pub rows: Vec<Vec<Term>>,
    /// Solutions dropped because a filter raised an evaluation error.
    pub filter_errors: usize,
}

fn binding_json(term: &Term) -> Value {
    match term {
        Term::Iri(i) => json!({"type": "uri", "value": i}),
        Term::Blank(b) => json!({"type": "bnode", "value": b}),
        Term::Literal(l) => json!({"type": "literal", "value": l.lexical(), "datatype": l.datatype().iri()}),
    }
}

impl QueryResults {
    /// The W3C-style results document, plus a `diagnostics` member.
    pub fn to_json(&self) -> Value {
        let bindings: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (var, term) in self.vars.iter().zip(row) {
                    m.insert(var.clone(), binding_json(term));
                }
                Value::Object(m)
            })
            .collect();
        json!({
            "head": {"vars": self.vars},
            "results": {"bindings": bindings},
            "diagnostics": {"filter_errors": self.filter_errors},
        })
    }

    /// A plain-text table: a header row of `?var` names and one
    /// tab-separated row per solution, terms in N-Quads syntax.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.vars.iter().map(|v| format!("?{v}")).collect();
        out.push_str(&header.join("\t"));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Term::to_nquads).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{Datatype, Literal};

    #[test]
    fn json_shape() {
        let r = QueryResults {
            vars: vec!["p".into(), "h".into()],
            rows: vec![vec![
                Term::Iri("http://wikibridge.example/page/A".into()),
                Term::Literal(Literal::new("12.5", Datatype::Decimal).unwrap()),
            ]],
            filter_errors: 0,
        };
        let v = r.to_json();
        assert_eq!(v["head"]["vars"], json!(["p", "h"]));
        assert_eq!(v["results"]["bindings"][0]["p"], json!({"type":"uri","value":"http://wikibridge.example/page/A"}));
        assert_eq!(
            v["results"]["bindings"][0]["h"]["datatype"],
            json!("http://www.w3.org/2001/XMLSchema#decimal")
        );
        assert_eq!(r.to_table().lines().next(), Some("?p\t?h"));
    }
}
