use std::cmp::Ordering;
use std::collections::HashSet;

use crate::rdf::{is_annotation_graph, Term, INFERRED_GRAPH, META_GRAPH, META_NS};
use crate::store::{QuadStore, TermId};

use super::results::QueryResults;
use super::{Query, TermPattern};

/// Whether quads in `graph` are visible to a pattern. Annotation graphs
/// always are, the inference graph only under entailment, and the
/// provenance graph only to patterns naming a `wb:meta/` predicate.
pub fn graph_in_scope(graph: &Term, entailment: bool, meta_predicate: bool) -> bool {
    match graph.as_iri() {
        Some(META_GRAPH) => meta_predicate,
        Some(INFERRED_GRAPH) => entailment,
        _ => is_annotation_graph(graph),
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Const(TermId),
    Var(usize),
}

struct CompiledPattern {
    slots: [Slot; 3],
    graphs: Vec<bool>,
}

/// Evaluates `query` against `store`.
///
/// Solutions are the distinct assignments that satisfy every pattern in
/// some in-scope graph and every filter. Filter errors drop the solution
/// and are counted. Ordering is total: the ORDER BY keys (numeric literals
/// by value), then the projected tuple, then the full tuple, all in
/// canonical term order.
pub fn evaluate(query: &Query, store: &QuadStore, entailment: bool) -> QueryResults {
    let vars = query.pattern_vars();
    let result_vars = query.result_vars();
    let empty = QueryResults { vars: result_vars.clone(), rows: Vec::new(), filter_errors: 0 };

    let graph_ids = store.graph_ids();
    let max_id = graph_ids.iter().copied().max().map_or(0, |m| m as usize + 1);
    let scope = |meta: bool| {
        let mut allowed = vec![false; max_id];
        for &g in &graph_ids {
            allowed[g as usize] = graph_in_scope(store.term(g), entailment, meta);
        }
        allowed
    };
    let plain_scope = scope(false);
    let meta_scope = scope(true);

    let mut compiled = Vec::with_capacity(query.patterns.len());
    for p in &query.patterns {
        let mut slots = [Slot::Var(0); 3];
        for (slot, pos) in slots.iter_mut().zip(p.positions()) {
            *slot = match pos {
                TermPattern::Var(v) => Slot::Var(vars.iter().position(|x| x == v).expect("collected")),
                TermPattern::Term(t) => match store.id_of(t) {
                    Some(id) => Slot::Const(id),
                    None => return empty,
                },
            };
        }
        let meta = matches!(&p.predicate, TermPattern::Term(Term::Iri(i)) if i.starts_with(META_NS));
        let graphs = if meta { meta_scope.clone() } else { plain_scope.clone() };
        compiled.push(CompiledPattern { slots, graphs });
    }

    let order = join_order(&compiled, vars.len());
    let mut seen: HashSet<Vec<TermId>> = HashSet::new();
    let mut binding: Vec<Option<TermId>> = vec![None; vars.len()];
    join(store, &compiled, &order, 0, &mut binding, &mut seen);

    let mut rows: Vec<Vec<Term>> = Vec::new();
    let mut filter_errors = 0;
    'solutions: for ids in seen {
        let row: Vec<Term> = ids.iter().map(|&id| store.term(id).clone()).collect();
        let lookup = |v: &str| vars.iter().position(|x| x == v).map(|i| &row[i]);
        for f in &query.filters {
            match f.evaluate(&lookup) {
                Ok(true) => {}
                Ok(false) => continue 'solutions,
                Err(_) => {
                    filter_errors += 1;
                    continue 'solutions;
                }
            }
        }
        rows.push(row);
    }

    let index = |v: &String| vars.iter().position(|x| x == v).expect("validated by the parser");
    let keys: Vec<(usize, bool)> = query.order_by.iter().map(|k| (index(&k.var), k.descending)).collect();
    let projected: Vec<usize> = result_vars.iter().map(index).collect();
    rows.sort_by(|a, b| {
        for &(i, desc) in &keys {
            let ord = order_terms(&a[i], &b[i]);
            let ord = if desc { ord.reverse() } else { ord };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        projected
            .iter()
            .map(|&i| a[i].cmp(&b[i]))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| a.cmp(b))
    });

    let mut out: Vec<Vec<Term>> = Vec::new();
    let mut distinct_seen: HashSet<Vec<Term>> = HashSet::new();
    for row in rows {
        let p: Vec<Term> = projected.iter().map(|&i| row[i].clone()).collect();
        if query.distinct && !distinct_seen.insert(p.clone()) {
            continue;
        }
        out.push(p);
    }
    let skip = query.offset.unwrap_or(0).min(usize::MAX as u64) as usize;
    let take = query.limit.map_or(usize::MAX, |l| l.min(usize::MAX as u64) as usize);
    let rows = out.into_iter().skip(skip).take(take).collect();
    QueryResults { vars: result_vars, rows, filter_errors }
}

/// ORDER BY comparison: blank nodes, then IRIs, then numeric literals by
/// value, then other literals. Remaining ties fall back to canonical term
/// order.
pub(crate) fn order_terms(a: &Term, b: &Term) -> Ordering {
    fn rank(t: &Term) -> u8 {
        match t {
            Term::Blank(_) => 0,
            Term::Iri(_) => 1,
            Term::Literal(l) if l.datatype().is_numeric() => 2,
            Term::Literal(_) => 3,
        }
    }
    rank(a).cmp(&rank(b)).then_with(|| match (a, b) {
        (Term::Literal(x), Term::Literal(y)) => x.numeric_cmp(y).unwrap_or(Ordering::Equal).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    })
}

/// Greedy ordering: repeatedly take the pattern with the most positions
/// fixed by constants or already-bound variables.
fn join_order(patterns: &[CompiledPattern], nvars: usize) -> Vec<usize> {
    let mut bound = vec![false; nvars];
    let mut remaining: Vec<usize> = (0..patterns.len()).collect();
    let mut order = Vec::with_capacity(patterns.len());
    while !remaining.is_empty() {
        let score = |i: usize| {
            patterns[i]
                .slots
                .iter()
                .filter(|s| match s {
                    Slot::Const(_) => true,
                    Slot::Var(v) => bound[*v],
                })
                .count()
        };
        let (pos, &best) = remaining
            .iter()
            .enumerate()
            .max_by(|(_, &a), (_, &b)| score(a).cmp(&score(b)).then(b.cmp(&a)))
            .expect("nonempty");
        remaining.remove(pos);
        for s in &patterns[best].slots {
            if let Slot::Var(v) = s {
                bound[*v] = true;
            }
        }
        order.push(best);
    }
    order
}

fn join(
    store: &QuadStore,
    patterns: &[CompiledPattern],
    order: &[usize],
    depth: usize,
    binding: &mut Vec<Option<TermId>>,
    out: &mut HashSet<Vec<TermId>>,
) {
    let Some(&pi) = order.get(depth) else {
        out.insert(binding.iter().map(|b| b.expect("every variable occurs in a pattern")).collect());
        return;
    };
    let pattern = &patterns[pi];
    let fixed = pattern.slots.map(|s| match s {
        Slot::Const(id) => Some(id),
        Slot::Var(v) => binding[v],
    });
    let candidates: Vec<[TermId; 4]> = store
        .match_ids(fixed[0], fixed[1], fixed[2], None)
        .filter(|k| pattern.graphs.get(k[3] as usize).copied().unwrap_or(false))
        .collect();
    let mut last: Option<[TermId; 3]> = None;
    for k in candidates {
        let triple = [k[0], k[1], k[2]];
        // Index scans put the graph last, so copies of one triple in several
        // graphs are adjacent.
        if last == Some(triple) {
            continue;
        }
        last = Some(triple);
        let mut newly = Vec::new();
        let mut ok = true;
        for (slot, id) in pattern.slots.iter().zip(triple) {
            if let Slot::Var(v) = *slot {
                match binding[v] {
                    Some(b) if b != id => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        binding[v] = Some(id);
                        newly.push(v);
                    }
                }
            }
        }
        if ok {
            join(store, patterns, order, depth + 1, binding, out);
        }
        for v in newly {
            binding[v] = None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_query;
    use crate::rdf::{graph_iri, inferred_graph, meta_graph, onto_iri, page_iri, Datatype, Literal, Quad};

    fn q(s: Term, p: Term, o: Term, g: Term) -> Quad {
        Quad::new(s, p, o, g).unwrap()
    }

    fn fixture() -> QuadStore {
        let mut st = QuadStore::new();
        let ty = Term::rdf_type();
        let height = onto_iri("height");
        for (title, class, h) in [("A", "Church", "12.5"), ("B", "Church", "8"), ("C", "Museum", "30")] {
            let g = graph_iri("Main", title, 1);
            let page = page_iri("Main", title);
            st.insert(&q(page.clone(), ty.clone(), onto_iri(class), g.clone()));
            let dt = if h.contains('.') { Datatype::Decimal } else { Datatype::Integer };
            st.insert(&q(page.clone(), height.clone(), Term::literal(h, dt).unwrap(), g.clone()));
            st.insert(&q(
                g.clone(),
                Term::iri(crate::rdf::META_FROM_PAGE).unwrap(),
                page,
                meta_graph(),
            ));
        }
        st.insert(&q(page_iri("Main", "A"), ty, onto_iri("Building"), inferred_graph()));
        st
    }

    fn run(text: &str, entailment: bool) -> QueryResults {
        evaluate(&parse_query(text).unwrap(), &fixture(), entailment)
    }

    #[test]
    fn finds_pages_by_class() {
        let r = run("SELECT ?p WHERE { ?p rdf:type wb:onto/Church . }", false);
        assert_eq!(r.rows, vec![vec![page_iri("Main", "A")], vec![page_iri("Main", "B")]]);
    }

    #[test]
    fn numeric_filter() {
        let r = run("SELECT ?p WHERE { ?p a wb:onto/Church . ?p wb:onto/height ?h FILTER(?h > 10) }", false);
        assert_eq!(r.rows, vec![vec![page_iri("Main", "A")]]);
    }

    #[test]
    fn entailment_switches_inferred_graph() {
        let text = "SELECT ?p WHERE { ?p a wb:onto/Building }";
        assert_eq!(run(text, true).rows.len(), 1);
        assert_eq!(run(text, false).rows.len(), 0);
    }

    #[test]
    fn meta_graph_is_opt_in() {
        assert_eq!(run("SELECT ?g WHERE { ?g wb:meta/fromPage ?p }", false).rows.len(), 3);
        assert_eq!(run("SELECT ?g WHERE { ?g ?x ?p . ?p a wb:onto/Museum }", false).rows.len(), 0);
    }

    #[test]
    fn empty_result_keeps_header() {
        let r = run("SELECT ?p ?h WHERE { ?p wb:onto/nothing ?h }", false);
        assert!(r.rows.is_empty());
        assert_eq!(r.vars, vec!["p".to_string(), "h".to_string()]);
    }

    #[test]
    fn order_limit_offset_distinct() {
        let r = run("SELECT ?h WHERE { ?p wb:onto/height ?h } ORDER BY DESC(?h)", false);
        let lex: Vec<&str> = r.rows.iter().map(|row| row[0].as_literal().unwrap().lexical()).collect();
        assert_eq!(lex, vec!["30", "12.5", "8"]);
        let r = run("SELECT ?h WHERE { ?p wb:onto/height ?h } ORDER BY ?h LIMIT 1 OFFSET 1", false);
        assert_eq!(r.rows, vec![vec![Term::Literal(Literal::new("12.5", Datatype::Decimal).unwrap())]]);
        let r = run("SELECT DISTINCT ?c WHERE { ?p a ?c }", false);
        assert_eq!(r.rows, vec![vec![onto_iri("Church")], vec![onto_iri("Museum")]]);
        let r = run("SELECT ?c WHERE { ?p a ?c }", false);
        assert_eq!(r.rows.len(), 3);
    }

    #[test]
    fn filter_errors_are_counted() {
        let r = run("SELECT ?p WHERE { ?p a ?c FILTER(?c > 3) }", false);
        assert!(r.rows.is_empty());
        assert_eq!(r.filter_errors, 3);
    }

    #[test]
    fn repeated_variable_within_a_pattern() {
        let mut st = fixture();
        let g = graph_iri("Main", "Z", 1);
        let z = page_iri("Main", "Z");
        st.insert(&q(z.clone(), onto_iri("sameAs"), z.clone(), g.clone()));
        st.insert(&q(z.clone(), onto_iri("sameAs"), page_iri("Main", "A"), g));
        let r = evaluate(&parse_query("SELECT ?x WHERE { ?x wb:onto/sameAs ?x }").unwrap(), &st, false);
        assert_eq!(r.rows, vec![vec![z]]);
    }
}
