use std::collections::BTreeSet;

use crate::ontology::Ontology;
use crate::rdf::{inferred_graph, is_annotation_graph, onto_iri, onto_name, Quad, Term, RDF_TYPE};
use crate::store::QuadStore;

/// Subclass-transitivity closure of the type statements in annotation
/// graphs: `(x rdf:type C)` and `C ⊑ D` give `(x rdf:type D)` in
/// `wb:graph/inferred`. Only statements not already asserted in some
/// annotation graph are returned.
///
/// Ancestor sets are reflexive-transitive, so one pass reaches the fixpoint.
pub fn rdfs_closure<'a>(quads: impl IntoIterator<Item = &'a Quad>, ont: &Ontology) -> BTreeSet<Quad> {
    let mut asserted: BTreeSet<(&Term, &Term)> = BTreeSet::new();
    let mut typings: Vec<(&Term, String)> = Vec::new();
    for q in quads {
        if !is_annotation_graph(&q.graph) || q.predicate.as_iri() != Some(RDF_TYPE) {
            continue;
        }
        asserted.insert((&q.subject, &q.object));
        if let Some(c) = onto_name(&q.object) {
            typings.push((&q.subject, c));
        }
    }
    let graph = inferred_graph();
    let mut out = BTreeSet::new();
    for (x, c) in typings {
        for d in ont.ancestors(&c) {
            let obj = onto_iri(d);
            if !asserted.contains(&(x, &obj)) {
                out.insert(Quad { subject: x.clone(), predicate: Term::rdf_type(), object: obj, graph: graph.clone() });
            }
        }
    }
    out
}

/// Replaces the inferred graph of `store` with the closure of its
/// annotation graphs.
pub fn recompute_inferred(store: &mut QuadStore, ont: &Ontology) -> usize {
    store.drop_graph(&inferred_graph());
    let asserted: Vec<Quad> = match store.id_of(&Term::rdf_type()) {
        Some(p) => store.match_ids(None, Some(p), None, None).map(|k| store.decode(k)).collect(),
        None => Vec::new(),
    };
    let inferred = rdfs_closure(&asserted, ont);
    store.extend(&inferred)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::load_ontology;
    use crate::rdf::{graph_iri, page_iri};

    fn typed(x: &str, c: &str) -> Quad {
        Quad::new(page_iri("Main", x), Term::rdf_type(), onto_iri(c), graph_iri("Main", x, 1)).unwrap()
    }

    fn inferred(x: &str, c: &str) -> Quad {
        Quad::new(page_iri("Main", x), Term::rdf_type(), onto_iri(c), inferred_graph()).unwrap()
    }

    #[test]
    fn chain() {
        let o = load_ontology("class Church subclassof Building\nclass Building subclassof Structure\nclass Structure").unwrap();
        let got = rdfs_closure(&[typed("x", "Church")], &o);
        assert_eq!(got, [inferred("x", "Building"), inferred("x", "Structure")].into());
    }

    #[test]
    fn no_edges_no_inference() {
        let o = load_ontology("class Church\nclass Building").unwrap();
        assert!(rdfs_closure(&[typed("x", "Church")], &o).is_empty());
    }

    #[test]
    fn cycle_terminates() {
        let o = load_ontology("class A subclassof B\nclass B subclassof A").unwrap();
        assert_eq!(rdfs_closure(&[typed("x", "A")], &o), [inferred("x", "B")].into());
    }

    #[test]
    fn asserted_types_are_not_repeated_and_idempotent() {
        let o = load_ontology("class Church subclassof Building\nclass Building").unwrap();
        let input = [typed("x", "Church"), typed("x", "Building")];
        assert!(rdfs_closure(&input, &o).is_empty());
        let single = [typed("y", "Church")];
        let once = rdfs_closure(&single, &o);
        let all: Vec<Quad> = single.iter().cloned().chain(once.iter().cloned()).collect();
        assert_eq!(rdfs_closure(&all, &o), once);
    }

    #[test]
    fn store_recompute() {
        let o = load_ontology("class Church subclassof Building\nclass Building").unwrap();
        let mut st: QuadStore = [typed("x", "Church")].iter().collect();
        assert_eq!(recompute_inferred(&mut st, &o), 1);
        assert!(st.contains(&inferred("x", "Building")));
        assert_eq!(recompute_inferred(&mut st, &o), 1);
        assert_eq!(st.len(), 2);
    }
}
