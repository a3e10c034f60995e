//! Random class hierarchies and instance graphs, and a naive
//! iterate-to-fixpoint closure to compare `rdfs_closure` against.

use std::collections::BTreeSet;

use proptest::collection::vec;
use proptest::prelude::*;
use wikibridge_core::rdf::{
    graph_iri, inferred_graph, is_annotation_graph, meta_graph, onto_iri, page_iri, Literal, Quad, Term,
    ONTO_NS, RDF_TYPE,
};

#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub classes: usize,
    /// `(sub, super)` index pairs; cycles allowed.
    pub edges: Vec<(usize, usize)>,
}

impl Hierarchy {
    pub fn class(i: usize) -> String {
        format!("C{i}")
    }

    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        for c in 0..self.classes {
            let supers: BTreeSet<usize> = self.edges.iter().filter(|(s, _)| *s == c).map(|(_, d)| *d).collect();
            out.push_str("class ");
            out.push_str(&Self::class(c));
            if !supers.is_empty() {
                let names: Vec<String> = supers.into_iter().map(Self::class).collect();
                out.push_str(" subclassof ");
                out.push_str(&names.join(", "));
            }
            out.push('\n');
        }
        out
    }
}

pub fn hierarchy() -> impl Strategy<Value = Hierarchy> {
    (1usize..=10).prop_flat_map(|n| {
        vec((0..n, 0..n), 0..=20).prop_map(move |edges| Hierarchy { classes: n, edges })
    })
}

/// Up to 50 quads: mostly type statements in page graphs, with some other
/// predicates, undeclared classes, and statements in the meta and
/// inferred graphs that the closure must ignore.
pub fn instances(classes: usize) -> impl Strategy<Value = Vec<Quad>> {
    let subject = prop_oneof![
        (0usize..6).prop_map(|i| page_iri("Main", &format!("X{i}"))),
        (0usize..3).prop_map(|i| Term::Blank(format!("b{i}"))),
    ];
    let object = prop_oneof![
        6 => (0..classes).prop_map(|c| onto_iri(&Hierarchy::class(c))),
        1 => Just(onto_iri("Undeclared")),
        1 => (0i64..5).prop_map(|n| Term::Literal(Literal::integer(n))),
    ];
    let predicate = prop_oneof![4 => Just(Term::rdf_type()), 1 => Just(onto_iri("p"))];
    let graph = prop_oneof![
        8 => (0usize..4).prop_map(|i| graph_iri("Main", &format!("X{i}"), 1)),
        1 => Just(meta_graph()),
        1 => Just(inferred_graph()),
    ];
    vec((subject, predicate, object, graph), 0..=50).prop_map(|qs| {
        qs.into_iter()
            .map(|(subject, predicate, object, graph)| Quad { subject, predicate, object, graph })
            .collect()
    })
}

/// Applies `(x type C), C ⊑ D ⊢ (x type D)` until nothing changes and
/// returns the new statements in the inferred graph.
pub fn naive_closure(h: &Hierarchy, quads: &[Quad]) -> BTreeSet<Quad> {
    let mut facts: BTreeSet<(Term, String)> = BTreeSet::new();
    for q in quads {
        if is_annotation_graph(&q.graph) && q.predicate.as_iri() == Some(RDF_TYPE) {
            if let Some(c) = q.object.as_iri().and_then(|i| i.strip_prefix(ONTO_NS)) {
                facts.insert((q.subject.clone(), c.to_owned()));
            }
        }
    }
    let asserted = facts.clone();
    loop {
        let mut added = Vec::new();
        for (x, c) in &facts {
            for (s, d) in &h.edges {
                let (s, d) = (Hierarchy::class(*s), Hierarchy::class(*d));
                if *c == s && !facts.contains(&(x.clone(), d.clone())) {
                    added.push((x.clone(), d));
                }
            }
        }
        if added.is_empty() {
            break;
        }
        facts.extend(added);
    }
    facts
        .difference(&asserted)
        .map(|(x, c)| Quad { subject: x.clone(), predicate: Term::rdf_type(), object: onto_iri(c), graph: inferred_graph() })
        .collect()
}
