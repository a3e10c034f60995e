use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::markup::{AnnotationKind, AnnotationNode, ParsedPage, Span, Value};
use crate::rdf::{
    graph_iri, meta_graph, onto_iri, page_iri, rel_iri, Datatype, Literal, Quad, Term, DEFAULT_NAMESPACE,
    META_AUTHOR, META_CLARIFIES, META_FROM_PAGE, META_REVISION, META_TIMESTAMP,
};

/// The quads of one page revision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoweringResult {
    pub namespace: String,
    pub title: String,
    pub revision: u64,
    pub author: String,
    pub timestamp: String,
    /// `wb:graph/<page>/<revision>`; holds no quads when the page has no
    /// annotations.
    pub graph: Term,
    /// Annotation quads in generation order, all in `graph`.
    pub quads: Vec<Quad>,
    /// Source range each quad in `quads` came from: the pair for value
    /// quads, the node for the quads an n-ary node adds itself.
    pub origins: Vec<Span>,
    /// Provenance quads in `wb:graph/meta`: four, or none without annotations.
    pub meta: Vec<Quad>,
    /// Subject of every annotation node, keyed by the node's span.
    pub node_map: BTreeMap<Span, Term>,
}

/// `[[Ns:Title]]` names a page in namespace `Ns` when the prefix is a
/// plain name; anything else is a title in the default namespace.
pub fn resolve_page_ref(reference: &str) -> (String, String) {
    if let Some((ns, title)) = reference.split_once(':') {
        let plain = !ns.is_empty() && ns.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-');
        if plain && !title.is_empty() && !title.starts_with(char::is_whitespace) {
            return (ns.to_owned(), title.to_owned());
        }
    }
    (DEFAULT_NAMESPACE.to_owned(), reference.to_owned())
}

pub fn page_ref_iri(reference: &str) -> Term {
    let (ns, title) = resolve_page_ref(reference);
    page_iri(&ns, &title)
}

struct Lowerer {
    graph: Term,
    quads: Vec<Quad>,
    origins: Vec<Span>,
    node_map: BTreeMap<Span, Term>,
    blanks: usize,
}

impl Lowerer {
    fn emit(&mut self, s: Term, p: Term, o: Term, origin: Span) {
        self.quads.push(Quad { subject: s, predicate: p, object: o, graph: self.graph.clone() });
        self.origins.push(origin);
    }

    fn fresh(&mut self) -> Term {
        self.blanks += 1;
        Term::Blank(format!("a{}", self.blanks))
    }

    /// Lowers the pairs of `node` onto `subject`, plus the type quad of an
    /// n-ary node.
    fn node(&mut self, node: &AnnotationNode, subject: Term) {
        self.node_map.insert(node.span, subject.clone());
        if let (AnnotationKind::NAry, Some(rel)) = (node.kind, &node.relation) {
            self.emit(subject.clone(), Term::rdf_type(), onto_iri(rel), node.span);
        }
        for pair in &node.pairs {
            let predicate = if pair.key == "type" { Term::rdf_type() } else { onto_iri(&pair.key) };
            let object = match &pair.value {
                Value::Literal(lit) if pair.key == "type" => onto_iri(lit.lexical()),
                Value::Literal(lit) => Term::Literal(lit.clone()),
                Value::PageRef(r) => page_ref_iri(r),
                Value::Nested(inner) => {
                    let b = self.fresh();
                    self.emit(subject.clone(), predicate, b.clone(), pair.span);
                    self.emit(b.clone(), Term::Iri(META_CLARIFIES.to_owned()), onto_iri(&pair.key), pair.span);
                    self.node(inner, b);
                    continue;
                }
            };
            self.emit(subject.clone(), predicate, object, pair.span);
        }
    }
}

/// Lowers the annotations of a page revision to quads.
///
/// A simple annotation states its pairs about the page; `type=C` becomes
/// `rdf:type wb:onto/C`. An n-ary annotation `R` links the page through
/// `wb:rel/R` to a fresh node typed `wb:onto/R` that carries the roles. A
/// nested annotation under key `k` is a fresh node, linked by `wb:onto/k`,
/// marked with `wb:meta/clarifies wb:onto/k`, carrying the inner pairs.
/// Blank nodes are `_:a1, _:a2, …` in document order.
pub fn lower_page(parsed: &ParsedPage, revision: u64, author: &str, timestamp: &str) -> LoweringResult {
    let src = &parsed.source;
    let page = page_iri(&src.namespace, &src.title);
    let graph = graph_iri(&src.namespace, &src.title, revision);
    let mut l = Lowerer {
        graph: graph.clone(),
        quads: Vec::new(),
        origins: Vec::new(),
        node_map: BTreeMap::new(),
        blanks: 0,
    };
    for node in &parsed.annotations {
        match (node.kind, &node.relation) {
            (AnnotationKind::NAry, Some(rel)) => {
                let b = l.fresh();
                l.emit(page.clone(), rel_iri(rel), b.clone(), node.span);
                l.node(node, b);
            }
            _ => l.node(node, page.clone()),
        }
    }
    let meta = if parsed.annotations.is_empty() {
        Vec::new()
    } else {
        let mg = meta_graph();
        let q = |p: &str, o: Term| Quad {
            subject: graph.clone(),
            predicate: Term::Iri(p.to_owned()),
            object: o,
            graph: mg.clone(),
        };
        vec![
            q(META_FROM_PAGE, page.clone()),
            q(META_REVISION, Term::Literal(Literal::new(revision.to_string(), Datatype::Integer).expect("digits"))),
            q(META_AUTHOR, Term::Literal(Literal::string(author))),
            q(META_TIMESTAMP, Term::Literal(Literal::string(timestamp))),
        ]
    };
    LoweringResult {
        namespace: src.namespace.clone(),
        title: src.title.clone(),
        revision,
        author: author.to_owned(),
        timestamp: timestamp.to_owned(),
        graph,
        quads: l.quads,
        origins: l.origins,
        meta,
        node_map: l.node_map,
    }
}

/// Prefix of the store-wide labels for the blank nodes of one page.
pub fn blank_scope(namespace: &str, title: &str) -> String {
    let mut h = Sha256::new();
    h.update(namespace.as_bytes());
    h.update([0u8]);
    h.update(title.as_bytes());
    format!("p{}", &hex::encode(h.finalize())[..16])
}

impl LoweringResult {
    pub fn page(&self) -> Term {
        page_iri(&self.namespace, &self.title)
    }

    /// Renames `_:aN` to a label unique to this page and revision, so
    /// blank nodes of different pages never meet in a shared store.
    pub fn scoped(&self, term: &Term) -> Term {
        match term {
            Term::Blank(b) => {
                Term::Blank(format!("{}_r{}_{b}", blank_scope(&self.namespace, &self.title), self.revision))
            }
            other => other.clone(),
        }
    }

    /// Annotation and provenance quads as they go into the shared store.
    pub fn store_quads(&self) -> Vec<Quad> {
        self.quads
            .iter()
            .map(|q| Quad {
                subject: self.scoped(&q.subject),
                predicate: q.predicate.clone(),
                object: self.scoped(&q.object),
                graph: q.graph.clone(),
            })
            .chain(self.meta.iter().cloned())
            .collect()
    }

    /// All quads, annotations then provenance.
    pub fn all_quads(&self) -> impl Iterator<Item = &Quad> {
        self.quads.iter().chain(&self.meta)
    }
}

/// True when `subject` belongs to the given page: the page itself or one
/// of its scoped blank nodes.
pub fn is_page_subject(subject: &Term, namespace: &str, title: &str) -> bool {
    match subject {
        Term::Blank(b) => b.starts_with(&format!("{}_", blank_scope(namespace, title))),
        t => *t == page_iri(namespace, title),
    }
}
