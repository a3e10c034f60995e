//! Random stores and queries, and a brute-force evaluator: nested loops
//! over every in-scope quad, its own filter semantics, its own sort.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use proptest::collection::vec;
use proptest::prelude::*;
use regex::RegexBuilder;
use wikibridge_core::query::{CompareOp, FilterExpr, Operand, Query, TermPattern};
use wikibridge_core::rdf::{
    graph_iri, inferred_graph, meta_graph, onto_iri, page_iri, Datatype, Literal, Quad, Term, GRAPH_NS,
    INFERRED_GRAPH, META_FROM_PAGE, META_GRAPH, META_NS,
};

const VARS: [&str; 4] = ["a", "b", "c", "d"];
const PAGES: usize = 5;

fn literal(lex: &str, dt: Datatype) -> Term {
    Term::Literal(Literal::new(lex, dt).expect("valid lexical form"))
}

/// The constants random stores and queries draw from.
fn vocabulary() -> Vec<Term> {
    let mut v: Vec<Term> = (0..PAGES).map(|i| page_iri("Main", &format!("P{i}"))).collect();
    v.extend(["Church", "Museum", "Site"].map(onto_iri));
    v.extend(["height", "name", "near"].map(onto_iri));
    v.push(Term::rdf_type());
    v.push(Term::Blank("n1".into()));
    v.extend(["3", "10", "-2", "7"].map(|l| literal(l, Datatype::Integer)));
    v.extend(["2.5", "10.0", "3.00"].map(|l| literal(l, Datatype::Decimal)));
    v.extend(["abc", "Abd", "zeta", "10"].map(|l| literal(l, Datatype::String)));
    v.extend(["true", "false"].map(|l| literal(l, Datatype::Boolean)));
    v.extend(["1999-12-31", "2020-01-01"].map(|l| literal(l, Datatype::Date)));
    v
}

fn predicates() -> Vec<Term> {
    let mut v: Vec<Term> = ["height", "name", "near"].into_iter().map(onto_iri).collect();
    v.push(Term::rdf_type());
    v
}

/// Stores of 10 to 100 quads over a small vocabulary, spread over page
/// graphs, the inferred graph and the meta graph.
pub fn store() -> impl Strategy<Value = Vec<Quad>> {
    let voc = vocabulary();
    let subjects: Vec<Term> = voc.iter().filter(|t| !t.is_literal()).cloned().collect();
    let quad = (
        proptest::sample::select(subjects),
        proptest::sample::select(predicates()),
        proptest::sample::select(voc),
        prop_oneof![
            8 => (0..PAGES).prop_map(|i| graph_iri("Main", &format!("P{i}"), 1 + i as u64 % 2)),
            1 => Just(inferred_graph()),
        ],
    )
        .prop_map(|(subject, predicate, object, graph)| Quad { subject, predicate, object, graph });
    let meta = (0..PAGES).prop_map(|i| Quad {
        subject: graph_iri("Main", &format!("P{i}"), 1),
        predicate: Term::Iri(META_FROM_PAGE.into()),
        object: page_iri("Main", &format!("P{i}")),
        graph: meta_graph(),
    });
    (vec(quad, 10..=95), vec(meta, 0..=5)).prop_map(|(mut a, b)| {
        a.extend(b);
        a
    })
}

fn term_text(t: &Term) -> String {
    match t {
        Term::Iri(i) => format!("<{i}>"),
        Term::Blank(b) => format!("<http://wikibridge.example/none/{b}>"),
        Term::Literal(l) => match l.datatype() {
            Datatype::String => format!("\"{}\"", l.lexical()),
            Datatype::Integer | Datatype::Decimal | Datatype::Boolean => l.lexical().to_owned(),
            Datatype::Date => format!("\"{}\"^^xsd:date", l.lexical()),
        },
    }
}

/// One of `vars` with weight `wv`, else a constant with weight `wc`.
fn position(vars: &[&'static str], wv: u32, constants: Vec<Term>, wc: u32) -> impl Strategy<Value = String> {
    prop_oneof![
        wv => proptest::sample::select(vars.to_vec()).prop_map(|v| format!("?{v}")),
        wc => proptest::sample::select(constants).prop_map(|t| term_text(&t)),
    ]
}

/// Subjects and objects draw from overlapping variable pools, so
/// consecutive patterns tend to join.
fn pattern() -> impl Strategy<Value = String> {
    let mut preds = predicates();
    preds.push(Term::Iri(META_FROM_PAGE.into()));
    let nonliteral: Vec<Term> = vocabulary().into_iter().filter(|t| t.is_iri()).collect();
    (
        position(&["a", "b"], 5, nonliteral, 1),
        prop_oneof![
            1 => Just("?d".to_owned()),
            1 => Just("a".to_owned()),
            2 => proptest::sample::select(preds).prop_map(|t| term_text(&t)),
        ],
        position(&["b", "c", "d"], 3, vocabulary(), 1),
    )
        .prop_map(|(s, p, o)| format!("{s} {p} {o}"))
}

fn filter_leaf() -> impl Strategy<Value = String> {
    let op = proptest::sample::select(vec!["=", "!=", "<", "<=", ">", ">="]);
    let var = proptest::sample::select(VARS.to_vec());
    let constant = proptest::sample::select(vocabulary().into_iter().filter(|t| !t.is_blank()).collect::<Vec<_>>());
    prop_oneof![
        (var.clone(), op.clone(), constant).prop_map(|(v, o, c)| format!("?{v} {o} {}", term_text(&c))),
        (var.clone(), op, var.clone()).prop_map(|(v, o, w)| format!("?{v} {o} ?{w}")),
        (var, proptest::sample::select(vec!["^a", "b|e", "A", "^1"]), proptest::bool::ANY)
            .prop_map(|(v, re, ci)| if ci { format!("regex(?{v}, \"{re}\", \"i\")") } else { format!("regex(?{v}, \"{re}\")") }),
    ]
}

fn filter() -> impl Strategy<Value = String> {
    filter_leaf().prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} && {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} || {b})")),
            inner.prop_map(|a| format!("!({a})")),
        ]
    })
}

/// Query text with up to four patterns and two filters. Filter
/// variables the patterns do not bind are renamed to ones they do.
pub fn query_text() -> impl Strategy<Value = String> {
    (
        prop_oneof![2 => vec(pattern(), 1..=2), 1 => vec(pattern(), 3..=4)],
        prop_oneof![2 => Just(Vec::new()), 1 => vec(filter(), 1..=2)],
        proptest::bool::weighted(0.3),
        proptest::option::of(vec((proptest::sample::select(VARS.to_vec()), proptest::bool::ANY), 1..=2)),
        proptest::option::of(prop_oneof![1 => Just(0u64), 9 => 1u64..8]),
        proptest::option::weighted(0.2, 1u64..4),
        proptest::option::of(proptest::sample::subsequence(VARS.to_vec(), 1..=3)),
    )
        .prop_map(|(patterns, filters, distinct, order, limit, offset, select)| {
            let used: BTreeSet<&str> =
                VARS.iter().copied().filter(|v| patterns.iter().any(|p| p.contains(&format!("?{v}")))).collect();
            let mut text = String::from("SELECT ");
            if distinct {
                text.push_str("DISTINCT ");
            }
            match select.map(|s| s.into_iter().filter(|v| used.contains(v)).collect::<Vec<_>>()) {
                Some(vars) if !vars.is_empty() => {
                    text.push_str(&vars.iter().map(|v| format!("?{v}")).collect::<Vec<_>>().join(" "))
                }
                _ => text.push('*'),
            }
            text.push_str(" WHERE { ");
            text.push_str(&patterns.join(" . "));
            let bound: Vec<&str> = used.iter().copied().collect();
            for f in filters.into_iter().filter(|_| !bound.is_empty()) {
                let f = VARS.iter().enumerate().filter(|(_, v)| !used.contains(*v)).fold(f, |f, (i, v)| {
                    f.replace(&format!("?{v}"), &format!("?{}", bound[i % bound.len()]))
                });
                text.push_str(&format!(" FILTER({f})"));
            }
            text.push_str(" }");
            if let Some(keys) = order {
                let keys: Vec<String> = keys
                    .into_iter()
                    .filter(|(v, _)| used.contains(v))
                    .map(|(v, desc)| if desc { format!("DESC(?{v})") } else { format!("?{v}") })
                    .collect();
                if !keys.is_empty() {
                    text.push_str(&format!(" ORDER BY {}", keys.join(" ")));
                }
            }
            if let Some(l) = limit {
                text.push_str(&format!(" LIMIT {l}"));
            }
            if let Some(o) = offset {
                text.push_str(&format!(" OFFSET {o}"));
            }
            text
        })
}

// ---- oracle ----

#[derive(Debug, PartialEq)]
enum Tv {
    T,
    F,
    E,
}

fn number(l: &Literal) -> Option<f64> {
    matches!(l.datatype(), Datatype::Integer | Datatype::Decimal).then(|| l.lexical().parse().expect("numeric"))
}

fn cmp_holds(op: CompareOp, ord: Ordering) -> bool {
    match op {
        CompareOp::Eq => ord.is_eq(),
        CompareOp::Ne => ord.is_ne(),
        CompareOp::Lt => ord.is_lt(),
        CompareOp::Le => ord.is_le(),
        CompareOp::Gt => ord.is_gt(),
        CompareOp::Ge => ord.is_ge(),
    }
}

fn compare(op: CompareOp, a: &Term, b: &Term) -> Tv {
    let tv = |b: bool| if b { Tv::T } else { Tv::F };
    let equality_only = matches!(op, CompareOp::Eq | CompareOp::Ne);
    match (a, b) {
        (Term::Literal(x), Term::Literal(y)) => match (number(x), number(y)) {
            (Some(p), Some(q)) => tv(cmp_holds(op, p.partial_cmp(&q).expect("finite"))),
            _ if x.datatype() == y.datatype() => tv(cmp_holds(op, x.lexical().cmp(y.lexical()))),
            _ => Tv::E,
        },
        (Term::Iri(_), Term::Iri(_)) | (Term::Blank(_), Term::Blank(_)) if equality_only => {
            tv((a == b) == (op == CompareOp::Eq))
        }
        _ if equality_only => tv(op == CompareOp::Ne),
        _ => Tv::E,
    }
}

fn eval(e: &FilterExpr, row: &BTreeMap<&str, &Term>) -> Tv {
    let get = |o: &Operand| -> Option<Term> {
        match o {
            Operand::Const(t) => Some(t.clone()),
            Operand::Var(v) => row.get(v.as_str()).map(|t| (*t).clone()),
        }
    };
    match e {
        FilterExpr::Or(a, b) => match (eval(a, row), eval(b, row)) {
            (Tv::T, _) | (_, Tv::T) => Tv::T,
            (Tv::F, Tv::F) => Tv::F,
            _ => Tv::E,
        },
        FilterExpr::And(a, b) => match (eval(a, row), eval(b, row)) {
            (Tv::F, _) | (_, Tv::F) => Tv::F,
            (Tv::T, Tv::T) => Tv::T,
            _ => Tv::E,
        },
        FilterExpr::Not(a) => match eval(a, row) {
            Tv::T => Tv::F,
            Tv::F => Tv::T,
            Tv::E => Tv::E,
        },
        FilterExpr::Compare { op, left, right } => match (get(left), get(right)) {
            (Some(l), Some(r)) => compare(*op, &l, &r),
            _ => Tv::E,
        },
        FilterExpr::Regex { target, pattern } => match get(target) {
            Some(Term::Literal(l)) if l.datatype() == Datatype::String => {
                let re = RegexBuilder::new(&pattern.source)
                    .case_insensitive(pattern.flags.contains('i'))
                    .dot_matches_new_line(pattern.flags.contains('s'))
                    .multi_line(pattern.flags.contains('m'))
                    .ignore_whitespace(pattern.flags.contains('x'))
                    .build()
                    .expect("generated regex compiles");
                if re.is_match(l.lexical()) {
                    Tv::T
                } else {
                    Tv::F
                }
            }
            _ => Tv::E,
        },
    }
}

fn in_scope(q: &Quad, predicate: &TermPattern, entailment: bool) -> bool {
    match q.graph.as_iri() {
        Some(INFERRED_GRAPH) => entailment,
        Some(META_GRAPH) => matches!(predicate, TermPattern::Term(Term::Iri(p)) if p.starts_with(META_NS)),
        Some(g) => g.starts_with(GRAPH_NS),
        None => false,
    }
}

/// ORDER BY term order: blank nodes, IRIs, numbers by value, other
/// literals; ties broken by the canonical term order.
pub fn order_key_cmp(a: &Term, b: &Term) -> Ordering {
    let class = |t: &Term| match t {
        Term::Blank(_) => 0,
        Term::Iri(_) => 1,
        Term::Literal(l) if number(l).is_some() => 2,
        Term::Literal(_) => 3,
    };
    class(a).cmp(&class(b)).then_with(|| match (a, b) {
        (Term::Literal(x), Term::Literal(y)) if class(a) == 2 => number(x)
            .unwrap()
            .partial_cmp(&number(y).unwrap())
            .expect("finite")
            .then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    })
}

pub struct OracleResult {
    pub rows: Vec<Vec<Term>>,
    pub filter_errors: usize,
}

/// Evaluates `query` by enumerating every combination of in-scope quads.
pub fn brute_force(query: &Query, quads: &[Quad], entailment: bool) -> OracleResult {
    let vars = query.pattern_vars();
    let mut solutions: BTreeSet<Vec<Term>> = BTreeSet::new();
    let mut stack: Vec<(usize, BTreeMap<String, Term>)> = vec![(0, BTreeMap::new())];
    while let Some((depth, binding)) = stack.pop() {
        if depth == query.patterns.len() {
            solutions.insert(vars.iter().map(|v| binding[v].clone()).collect());
            continue;
        }
        let pat = &query.patterns[depth];
        for q in quads.iter().filter(|q| in_scope(q, &pat.predicate, entailment)) {
            let mut b = binding.clone();
            let ok = [(&pat.subject, &q.subject), (&pat.predicate, &q.predicate), (&pat.object, &q.object)]
                .into_iter()
                .all(|(tp, t)| match tp {
                    TermPattern::Term(c) => c == t,
                    TermPattern::Var(v) => b.entry(v.clone()).or_insert_with(|| t.clone()) == t,
                });
            if ok {
                stack.push((depth + 1, b));
            }
        }
    }

    let mut filter_errors = 0;
    let mut kept: Vec<Vec<Term>> = Vec::new();
    for sol in solutions {
        let row: BTreeMap<&str, &Term> = vars.iter().map(String::as_str).zip(&sol).collect();
        let mut verdict = Tv::T;
        for f in &query.filters {
            verdict = eval(f, &row);
            if verdict != Tv::T {
                break;
            }
        }
        match verdict {
            Tv::T => kept.push(sol),
            Tv::F => {}
            Tv::E => filter_errors += 1,
        }
    }

    let idx = |v: &String| vars.iter().position(|x| x == v).unwrap();
    let projected: Vec<usize> = query.result_vars().iter().map(idx).collect();
    kept.sort_by(|a, b| {
        let mut ord = Ordering::Equal;
        for k in &query.order_by {
            let i = idx(&k.var);
            let o = order_key_cmp(&a[i], &b[i]);
            ord = ord.then(if k.descending { o.reverse() } else { o });
        }
        let pa: Vec<&Term> = projected.iter().map(|&i| &a[i]).collect();
        let pb: Vec<&Term> = projected.iter().map(|&i| &b[i]).collect();
        ord.then_with(|| pa.cmp(&pb)).then_with(|| a.cmp(b))
    });
    let mut rows: Vec<Vec<Term>> = Vec::new();
    for sol in kept {
        let p: Vec<Term> = projected.iter().map(|&i| sol[i].clone()).collect();
        if query.distinct && rows.contains(&p) {
            continue;
        }
        rows.push(p);
    }
    let offset = query.offset.unwrap_or(0) as usize;
    let rows = rows.into_iter().skip(offset).take(query.limit.map_or(usize::MAX, |l| l as usize)).collect();
    OracleResult { rows, filter_errors }
}
