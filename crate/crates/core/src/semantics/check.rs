use std::collections::{BTreeMap, BTreeSet};

use crate::markup::{AnnotationKind, AnnotationNode, Pair, ParsedPage, Span, Value};
use crate::ontology::{ConstraintRule, Ontology, TypeRef};
use crate::query::{TermPattern, TriplePattern};
use crate::rdf::{is_annotation_graph, onto_name, Datatype, Term, INFERRED_GRAPH, RDF_TYPE};
use crate::store::QuadStore;

use super::closure::rdfs_closure;
use super::lower::{is_page_subject, page_ref_iri, LoweringResult};
use super::report::{ValidationReport, Violation, ViolationKind};

type Triple = [Term; 3];
type Binding = BTreeMap<String, Term>;

/// Checks a lowered page against the ontology.
///
/// `context` is the wiki store; quads about this page's own subjects are
/// ignored there, since `lowered` replaces them. Rules run over the whole
/// wiki with this page swapped in, but only body matches that use at
/// least one statement of this page are reported.
pub fn check_page(parsed: &ParsedPage, lowered: &LoweringResult, ont: &Ontology, context: &QuadStore) -> ValidationReport {
    let mut c = Checker::new(lowered, ont, context);
    for node in &parsed.annotations {
        let subject = lowered.node_map.get(&node.span).cloned().unwrap_or_else(|| lowered.page());
        c.node(node, &subject);
    }
    c.cardinality(parsed);
    for rule in ont.rules() {
        c.rule(rule);
    }
    let mut violations = c.violations;
    violations.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    violations.dedup();
    ValidationReport {
        page: lowered.title.clone(),
        namespace: lowered.namespace.clone(),
        revision: lowered.revision,
        violations,
        checked_at: lowered.timestamp.clone(),
        diagnostics: Vec::new(),
    }
}

struct Checker<'a> {
    lowered: &'a LoweringResult,
    ont: &'a Ontology,
    context: &'a QuadStore,
    /// This page's statements plus their closure.
    overlay: BTreeSet<Triple>,
    local_subjects: BTreeSet<Term>,
    violations: Vec<Violation>,
}

fn names(types: &BTreeSet<String>) -> String {
    types.iter().map(String::as_str).collect::<Vec<_>>().join(", ")
}

impl<'a> Checker<'a> {
    fn new(lowered: &'a LoweringResult, ont: &'a Ontology, context: &'a QuadStore) -> Self {
        let inferred = rdfs_closure(&lowered.quads, ont);
        let overlay: BTreeSet<Triple> = lowered
            .quads
            .iter()
            .chain(&inferred)
            .map(|q| [q.subject.clone(), q.predicate.clone(), q.object.clone()])
            .collect();
        let mut local_subjects: BTreeSet<Term> = lowered.node_map.values().cloned().collect();
        local_subjects.insert(lowered.page());
        Checker { lowered, ont, context, overlay, local_subjects, violations: Vec::new() }
    }

    fn push(&mut self, kind: ViolationKind, subject: &Term, span: Span, detail: String) {
        self.violations.push(Violation { kind, subject: subject.clone(), detail, rule_name: None, span: Some(span) });
    }

    /// Asserted types of `t` with all their superclasses.
    fn types_of(&self, t: &Term) -> BTreeSet<String> {
        let mut asserted = BTreeSet::new();
        if self.local_subjects.contains(t) {
            for q in &self.lowered.quads {
                if q.subject == *t && q.predicate.as_iri() == Some(RDF_TYPE) {
                    asserted.extend(onto_name(&q.object));
                }
            }
        } else if let (Some(s), Some(p)) = (self.context.id_of(t), self.context.id_of(&Term::rdf_type())) {
            for k in self.context.match_ids(Some(s), Some(p), None, None) {
                if is_annotation_graph(self.context.term(k[3])) {
                    asserted.extend(onto_name(self.context.term(k[2])));
                }
            }
        }
        let mut out = BTreeSet::new();
        for c in asserted {
            out.extend(self.ont.ancestors(&c).map(str::to_owned));
            out.insert(c);
        }
        out
    }

    fn below(&self, types: &BTreeSet<String>, class: &str) -> bool {
        types.iter().any(|t| self.ont.is_subtype(t, class))
    }

    fn node(&mut self, node: &AnnotationNode, subject: &Term) {
        let schema = match (node.kind, &node.relation) {
            (AnnotationKind::NAry, Some(rel)) => match self.ont.relation(rel) {
                Some(schema) => {
                    let filled: BTreeSet<&str> = node
                        .pairs
                        .iter()
                        .filter(|p| schema.role(&p.key).is_some())
                        .map(|p| p.key.as_str())
                        .collect();
                    if filled.len() < 2 {
                        self.push(
                            ViolationKind::NAryArity,
                            subject,
                            node.span,
                            format!("relation {rel} has {} filled role(s); at least two are needed", filled.len()),
                        );
                    } else if let Some(missing) = schema.roles.iter().find(|r| r.required && !filled.contains(r.name.as_str())) {
                        self.push(
                            ViolationKind::NAryArity,
                            subject,
                            node.span,
                            format!("relation {rel} is missing required role '{}'", missing.name),
                        );
                    }
                    Some(schema)
                }
                None => {
                    self.push(ViolationKind::UndefinedTerm, subject, node.span, format!("unknown relation '{rel}'"));
                    None
                }
            },
            _ => None,
        };

        for pair in &node.pairs {
            if pair.key == "type" {
                self.type_pair(pair, subject);
            } else if node.kind == AnnotationKind::NAry {
                if let Some(schema) = schema {
                    match schema.role(&pair.key) {
                        Some(role) => self.value(&role.filler, pair, subject),
                        None => self.push(
                            ViolationKind::UndefinedTerm,
                            subject,
                            pair.span,
                            format!("relation {} has no role '{}'", schema.name, pair.key),
                        ),
                    }
                }
            } else {
                match self.ont.property(&pair.key) {
                    Some(prop) => {
                        let types = self.types_of(subject);
                        if types.is_empty() {
                            self.push(ViolationKind::DomainViolation, subject, pair.span, "untyped subject".into());
                        } else if !self.below(&types, &prop.domain) {
                            self.push(
                                ViolationKind::DomainViolation,
                                subject,
                                pair.span,
                                format!("'{}' needs a {} subject; subject types are {{{}}}", prop.name, prop.domain, names(&types)),
                            );
                        }
                        self.value(&prop.range, pair, subject);
                    }
                    None => self.push(
                        ViolationKind::UndefinedTerm,
                        subject,
                        pair.span,
                        format!("unknown property '{}'", pair.key),
                    ),
                }
            }
            if let Value::Nested(inner) = &pair.value {
                if let Some(b) = self.lowered.node_map.get(&inner.span).cloned() {
                    self.node(inner, &b);
                }
            }
        }
    }

    fn type_pair(&mut self, pair: &Pair, subject: &Term) {
        match &pair.value {
            Value::Literal(l) if self.ont.is_class(l.lexical()) => {}
            Value::Literal(l) => {
                self.push(ViolationKind::UndefinedTerm, subject, pair.span, format!("unknown class '{}'", l.lexical()))
            }
            _ => self.push(ViolationKind::UndefinedTerm, subject, pair.span, "type must name a class".into()),
        }
    }

    /// Checks a property or role value against its declared range.
    fn value(&mut self, range: &TypeRef, pair: &Pair, subject: &Term) {
        match range {
            TypeRef::Datatype(d) => match &pair.value {
                Value::Literal(l) if l.datatype() == *d || (*d == Datatype::Decimal && l.datatype() == Datatype::Integer) => {}
                Value::Literal(l) => self.push(
                    ViolationKind::DatatypeViolation,
                    subject,
                    pair.span,
                    format!("'{}' expects {d}, found {} literal {:?}", pair.key, l.datatype(), l.lexical()),
                ),
                _ => self.push(
                    ViolationKind::DatatypeViolation,
                    subject,
                    pair.span,
                    format!("'{}' expects a {d} literal", pair.key),
                ),
            },
            TypeRef::Class(class) => {
                let target = match &pair.value {
                    Value::Literal(l) => {
                        self.push(
                            ViolationKind::RangeViolation,
                            subject,
                            pair.span,
                            format!("'{}' expects a {class}, found literal {:?}", pair.key, l.lexical()),
                        );
                        return;
                    }
                    Value::PageRef(r) => page_ref_iri(r),
                    Value::Nested(inner) => match self.lowered.node_map.get(&inner.span) {
                        Some(b) => b.clone(),
                        None => return,
                    },
                };
                let types = self.types_of(&target);
                if !self.below(&types, class) {
                    let found = if types.is_empty() { "an untyped value".to_owned() } else { format!("{{{}}}", names(&types)) };
                    self.push(
                        ViolationKind::RangeViolation,
                        subject,
                        pair.span,
                        format!("'{}' expects a {class}, found {found}", pair.key),
                    );
                }
            }
        }
    }

    fn first_span_of(&self, subject: &Term) -> Option<Span> {
        self.lowered.node_map.iter().find(|(_, s)| *s == subject).map(|(span, _)| *span)
    }

    /// Per-subject counts of property pairs within this page.
    fn cardinality(&mut self, parsed: &ParsedPage) {
        let mut uses: BTreeMap<Term, BTreeMap<&str, Vec<Span>>> = BTreeMap::new();
        let mut order: Vec<Term> = Vec::new();
        for top in &parsed.annotations {
            top.walk(&mut |node| {
                if node.kind != AnnotationKind::Simple {
                    return;
                }
                let Some(subject) = self.lowered.node_map.get(&node.span) else { return };
                if !order.contains(subject) {
                    order.push(subject.clone());
                }
                let entry = uses.entry(subject.clone()).or_default();
                for pair in &node.pairs {
                    if self.ont.property(&pair.key).is_some() {
                        entry.entry(pair.key.as_str()).or_default().push(pair.span);
                    }
                }
            });
        }
        for subject in order {
            let types = self.types_of(&subject);
            let per_prop = &uses[&subject];
            for prop in self.ont.properties().values() {
                let spans = per_prop.get(prop.name.as_str()).map(Vec::as_slice).unwrap_or_default();
                let n = spans.len();
                if let Some(max) = prop.max_card.filter(|&m| n > m as usize) {
                    let span = spans[max as usize];
                    self.push(
                        ViolationKind::CardinalityViolation,
                        &subject,
                        span,
                        format!("'{}' occurs {n} times; at most {max} allowed", prop.name),
                    );
                } else if (n as u64) < u64::from(prop.min_card) && self.below(&types, &prop.domain) {
                    let span = spans.first().copied().or_else(|| self.first_span_of(&subject)).unwrap_or_default();
                    self.push(
                        ViolationKind::CardinalityViolation,
                        &subject,
                        span,
                        format!("'{}' occurs {n} times; at least {} required", prop.name, prop.min_card),
                    );
                }
            }
        }
    }

    /// Distinct triples matching a pattern, from this page, from the rest
    /// of the wiki, or both.
    fn matches(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>, local: bool, remote: bool) -> Vec<Triple> {
        let mut out: BTreeSet<Triple> = BTreeSet::new();
        if local {
            let fits = |t: &Triple| {
                s.is_none_or(|x| *x == t[0]) && p.is_none_or(|x| *x == t[1]) && o.is_none_or(|x| *x == t[2])
            };
            out.extend(self.overlay.iter().filter(|t| fits(t)).cloned());
        }
        if remote {
            let ids = [s, p, o].map(|t| t.map(|t| self.context.id_of(t)));
            if ids.iter().any(|id| matches!(id, Some(None))) {
                return out.into_iter().collect();
            }
            let [s, p, o] = ids.map(Option::flatten);
            let ns = &self.lowered.namespace;
            let title = &self.lowered.title;
            for k in self.context.match_ids(s, p, o, None) {
                let g = self.context.term(k[3]);
                if !(is_annotation_graph(g) || g.as_iri() == Some(INFERRED_GRAPH)) {
                    continue;
                }
                let subject = self.context.term(k[0]);
                if is_page_subject(subject, ns, title) {
                    continue;
                }
                out.insert([subject.clone(), self.context.term(k[1]).clone(), self.context.term(k[2]).clone()]);
            }
        }
        out.into_iter().collect()
    }

    /// Extends `binding` through `patterns` in a greedy order. `seed` is
    /// the index of a pattern restricted to this page's statements.
    fn solve(&self, patterns: &[&TriplePattern], binding: Binding, seed: Option<usize>, out: &mut Vec<Binding>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        let bound = |tp: &TermPattern, b: &Binding| match tp {
            TermPattern::Term(_) => true,
            TermPattern::Var(v) => b.contains_key(v),
        };
        let next = match seed {
            Some(i) => i,
            None => match (0..patterns.len()).max_by_key(|&i| {
                (patterns[i].positions().iter().filter(|t| bound(t, &binding)).count(), usize::MAX - i)
            }) {
                Some(i) => i,
                None => {
                    out.push(binding);
                    return;
                }
            },
        };
        let pat = patterns[next];
        let resolve = |tp: &TermPattern| match tp {
            TermPattern::Term(t) => Some(t.clone()),
            TermPattern::Var(v) => binding.get(v).cloned(),
        };
        let fixed = pat.positions().map(resolve);
        let candidates = self.matches(fixed[0].as_ref(), fixed[1].as_ref(), fixed[2].as_ref(), true, seed.is_none());
        let rest: Vec<&TriplePattern> =
            patterns.iter().enumerate().filter(|(i, _)| *i != next).map(|(_, p)| *p).collect();
        for triple in candidates {
            let mut b = binding.clone();
            let consistent = pat.positions().into_iter().zip(triple).all(|(tp, term)| match tp {
                TermPattern::Term(_) => true,
                TermPattern::Var(v) => match b.get(v) {
                    Some(existing) => *existing == term,
                    None => {
                        b.insert(v.clone(), term);
                        true
                    }
                },
            });
            if consistent {
                self.solve(&rest, b, None, out, limit);
            }
        }
    }

    fn rule(&mut self, rule: &ConstraintRule) {
        let body: Vec<&TriplePattern> = rule.body.iter().collect();
        let mut matches: BTreeSet<Binding> = BTreeSet::new();
        for seed in 0..body.len() {
            let mut out = Vec::new();
            self.solve(&body, Binding::new(), Some(seed), &mut out, usize::MAX);
            matches.extend(out);
        }
        let head: Vec<&TriplePattern> = rule.head.iter().collect();
        for binding in matches {
            let passes = rule.filters.iter().all(|f| f.evaluate(&|v: &str| binding.get(v)) == Ok(true));
            if !passes {
                continue;
            }
            let mut witness = Vec::new();
            self.solve(&head, binding.clone(), None, &mut witness, 1);
            if !witness.is_empty() {
                continue;
            }
            let subject = match &rule.body[0].subject {
                TermPattern::Var(v) => binding[v].clone(),
                TermPattern::Term(t) => t.clone(),
            };
            let shown: Vec<String> = binding.iter().map(|(k, v)| format!("?{k}={v}")).collect();
            self.violations.push(Violation {
                kind: ViolationKind::RuleViolation,
                span: self.first_span_of(&subject),
                subject,
                detail: format!("no statements satisfy the expectation for {}", shown.join(", ")),
                rule_name: Some(rule.name.clone()),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markup::{parse_page, PageSource};
    use crate::ontology::load_ontology;
    use crate::semantics::lower_page;

    const ONT: &str = "class Structure\nclass Building subclassof Structure\nclass Church subclassof Building\nclass Place\n\
        datatype property height domain Building range decimal max 1\n\
        object property locatedIn domain Building range Place\n\
        datatype property name domain Structure range string min 1\n\
        relation Dating\n  role method : string required\n  role year : integer\n  role date : Period\nclass Period\n\
        datatype property start domain Period range integer\n\
        rule \"dated-needs-year\" when { (?d, rdf:type, wb:onto/Dating) } expect { (?d, wb:onto/year, ?y) }\n";

    fn check_in(text: &str, context: &QuadStore) -> Vec<(ViolationKind, String)> {
        let ont = load_ontology(ONT).unwrap();
        let parsed = parse_page(&PageSource::main("StMartin", text).unwrap()).unwrap();
        let lowered = lower_page(&parsed, 1, "alice", "t");
        check_page(&parsed, &lowered, &ont, context)
            .violations
            .into_iter()
            .map(|v| (v.kind, v.detail))
            .collect()
    }

    fn check(text: &str) -> Vec<ViolationKind> {
        check_in(text, &QuadStore::new()).into_iter().map(|(k, _)| k).collect()
    }

    #[test]
    fn conforming_page() {
        assert_eq!(check("{{#ann: type=Church | height=12.5 | name=\"St Martin\"}}"), vec![]);
        assert_eq!(check("{{#ann: type=Church | height=12 | name=\"St Martin\"}}"), vec![]);
    }

    #[test]
    fn datatype_and_undefined() {
        assert_eq!(
            check("{{#ann: type=Church | height=\"tall\" | name=\"x\"}}"),
            vec![ViolationKind::DatatypeViolation]
        );
        assert_eq!(check("{{#ann: type=Church | colour=red | name=\"x\"}}"), vec![ViolationKind::UndefinedTerm]);
        assert_eq!(check("{{#ann: type=Chapel}}"), vec![ViolationKind::UndefinedTerm]);
    }

    #[test]
    fn domain_and_untyped() {
        let v = check_in("{{#ann: height=3}}", &QuadStore::new());
        assert_eq!(v, vec![(ViolationKind::DomainViolation, "untyped subject".to_string())]);
        assert_eq!(check("{{#ann: type=Place | height=3}}"), vec![ViolationKind::DomainViolation]);
    }

    #[test]
    fn range_uses_target_types() {
        assert_eq!(
            check("{{#ann: type=Church | name=\"x\" | locatedIn=[[Town]]}}"),
            vec![ViolationKind::RangeViolation]
        );
        let ont = load_ontology(ONT).unwrap();
        let town = parse_page(&PageSource::main("Town", "{{#ann: type=Place}}").unwrap()).unwrap();
        let store: QuadStore = lower_page(&town, 1, "bob", "t").store_quads().iter().collect();
        let _ = ont;
        assert_eq!(check_in("{{#ann: type=Church | name=\"x\" | locatedIn=[[Town]]}}", &store), vec![]);
    }

    #[test]
    fn cardinality() {
        assert_eq!(
            check("{{#ann: type=Church | name=\"x\" | height=1 | height=2}}"),
            vec![ViolationKind::CardinalityViolation]
        );
        assert_eq!(check("{{#ann: type=Church}}"), vec![ViolationKind::CardinalityViolation]);
    }

    #[test]
    fn nary_arity_and_rules() {
        assert_eq!(
            check("{{#rel: Dating | method=\"C14\" | year=850}}"),
            vec![],
        );
        let v = check("{{#rel: Dating | method=\"C14\"}}");
        assert_eq!(v, vec![ViolationKind::NAryArity, ViolationKind::RuleViolation]);
        let v = check("{{#rel: Dating | method=\"C14\" | date={{#ann: type=Period | start=850}} }}");
        assert_eq!(v, vec![ViolationKind::RuleViolation]);
        let v = check("{{#rel: Dating | year=850 | date={{#ann: type=Period | start=850}} }}");
        assert_eq!(v, vec![ViolationKind::NAryArity]);
        assert_eq!(check("{{#rel: Nope | a=1 | b=2}}"), vec![ViolationKind::UndefinedTerm]);
    }

    #[test]
    fn nested_range_checks_blank_types() {
        assert_eq!(
            check("{{#rel: Dating | method=\"C14\" | year=1 | date={{#ann: start=850}} }}"),
            vec![ViolationKind::RangeViolation, ViolationKind::DomainViolation]
        );
    }
}
