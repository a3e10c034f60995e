//! Indexed in-memory quad store with named graphs.
//!
//! Terms are interned into a dictionary and quads are kept in four ordered
//! index permutations (SPOG, POSG, OSPG, GSPO), so every pattern with at
//! least one concrete position is answered by a prefix range scan.

mod nquads;

use std::collections::{BTreeSet, HashMap};
use std::ops::RangeInclusive;

use crate::rdf::{Quad, Term};

pub use nquads::NQuadsError;

pub type TermId = u32;

type Key = [TermId; 4];

/// A quad pattern; `None` is a wildcard.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuadPattern {
    pub subject: Option<Term>,
    pub predicate: Option<Term>,
    pub object: Option<Term>,
    pub graph: Option<Term>,
}

impl QuadPattern {
    pub fn any() -> QuadPattern {
        QuadPattern::default()
    }

    pub fn new(subject: Option<Term>, predicate: Option<Term>, object: Option<Term>, graph: Option<Term>) -> Self {
        QuadPattern { subject, predicate, object, graph }
    }

    pub fn matches(&self, quad: &Quad) -> bool {
        fn ok(pat: &Option<Term>, t: &Term) -> bool {
            pat.as_ref().is_none_or(|p| p == t)
        }
        ok(&self.subject, &quad.subject)
            && ok(&self.predicate, &quad.predicate)
            && ok(&self.object, &quad.object)
            && ok(&self.graph, &quad.graph)
    }
}

#[derive(Debug, Clone, Default)]
struct Dictionary {
    terms: Vec<Term>,
    ids: HashMap<Term, TermId>,
}

impl Dictionary {
    fn intern(&mut self, term: &Term) -> TermId {
        if let Some(&id) = self.ids.get(term) {
            return id;
        }
        let id = TermId::try_from(self.terms.len()).expect("term dictionary overflow");
        self.terms.push(term.clone());
        self.ids.insert(term.clone(), id);
        id
    }
}

#[derive(Debug, Clone, Default)]
pub struct QuadStore {
    dict: Dictionary,
    spog: BTreeSet<Key>,
    posg: BTreeSet<Key>,
    ospg: BTreeSet<Key>,
    gspo: BTreeSet<Key>,
}

impl PartialEq for QuadStore {
    /// Two stores are equal when they hold the same set of quads.
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.iter().all(|q| other.contains(&q))
    }
}

impl Eq for QuadStore {}

fn prefix_range(prefix: &[TermId]) -> RangeInclusive<Key> {
    let mut lo = [0; 4];
    let mut hi = [TermId::MAX; 4];
    lo[..prefix.len()].copy_from_slice(prefix);
    hi[..prefix.len()].copy_from_slice(prefix);
    lo..=hi
}

impl QuadStore {
    pub fn new() -> QuadStore {
        QuadStore::default()
    }

    pub fn len(&self) -> usize {
        self.spog.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spog.is_empty()
    }

    /// Adds a quad; returns `false` if it was already present.
    ///
    /// The quad must be well formed (see [`Quad::new`]).
    pub fn insert(&mut self, quad: &Quad) -> bool {
        debug_assert!(quad.is_well_formed(), "malformed quad {quad}");
        let key = [
            self.dict.intern(&quad.subject),
            self.dict.intern(&quad.predicate),
            self.dict.intern(&quad.object),
            self.dict.intern(&quad.graph),
        ];
        if !self.spog.insert(key) {
            return false;
        }
        let [s, p, o, g] = key;
        self.posg.insert([p, o, s, g]);
        self.ospg.insert([o, s, p, g]);
        self.gspo.insert([g, s, p, o]);
        true
    }

    /// Removes a quad; returns `false` if it was absent.
    pub fn remove(&mut self, quad: &Quad) -> bool {
        let Some(key) = self.encode(quad) else {
            return false;
        };
        self.remove_key(key)
    }

    fn remove_key(&mut self, key: Key) -> bool {
        if !self.spog.remove(&key) {
            return false;
        }
        let [s, p, o, g] = key;
        self.posg.remove(&[p, o, s, g]);
        self.ospg.remove(&[o, s, p, g]);
        self.gspo.remove(&[g, s, p, o]);
        true
    }

    pub fn contains(&self, quad: &Quad) -> bool {
        self.encode(quad).is_some_and(|k| self.spog.contains(&k))
    }

    /// Removes every quad in graph `graph`, returning how many were removed.
    pub fn drop_graph(&mut self, graph: &Term) -> usize {
        let Some(g) = self.id_of(graph) else {
            return 0;
        };
        let doomed: Vec<Key> = self
            .gspo
            .range(prefix_range(&[g]))
            .map(|&[g, s, p, o]| [s, p, o, g])
            .collect();
        for key in &doomed {
            self.remove_key(*key);
        }
        doomed.len()
    }

    /// All quads matching `pattern`, in canonical (graph, subject,
    /// predicate, object) order.
    pub fn match_pattern(&self, pattern: &QuadPattern) -> Vec<Quad> {
        let ids = [&pattern.subject, &pattern.predicate, &pattern.object, &pattern.graph].map(|t| match t {
            None => Some(None),
            Some(term) => self.id_of(term).map(Some),
        });
        if ids.iter().any(Option::is_none) {
            return Vec::new();
        }
        let [s, p, o, g] = ids.map(Option::flatten);
        let mut out: Vec<Quad> = self.match_ids(s, p, o, g).map(|k| self.decode(k)).collect();
        out.sort_by(|a, b| {
            (&a.graph, &a.subject, &a.predicate, &a.object).cmp(&(&b.graph, &b.subject, &b.predicate, &b.object))
        });
        out
    }

    /// Id-level matching, returning keys in SPOG layout. The index used is
    /// picked from the bound positions; remaining positions are filtered.
    pub fn match_ids(
        &self,
        s: Option<TermId>,
        p: Option<TermId>,
        o: Option<TermId>,
        g: Option<TermId>,
    ) -> Box<dyn Iterator<Item = Key> + '_> {
        let filter = move |k: &Key| {
            s.is_none_or(|x| x == k[0])
                && p.is_none_or(|x| x == k[1])
                && o.is_none_or(|x| x == k[2])
                && g.is_none_or(|x| x == k[3])
        };
        match (s, p, o, g) {
            (Some(s), Some(p), Some(o), _) => {
                Box::new(self.spog.range(prefix_range(&[s, p, o])).copied().filter(filter))
            }
            (Some(s), Some(p), None, _) => Box::new(self.spog.range(prefix_range(&[s, p])).copied().filter(filter)),
            (Some(s), None, Some(o), _) => Box::new(
                self.ospg
                    .range(prefix_range(&[o, s]))
                    .map(|&[o, s, p, g]| [s, p, o, g])
                    .filter(filter),
            ),
            (Some(s), None, None, _) => Box::new(self.spog.range(prefix_range(&[s])).copied().filter(filter)),
            (None, Some(p), Some(o), _) => Box::new(
                self.posg
                    .range(prefix_range(&[p, o]))
                    .map(|&[p, o, s, g]| [s, p, o, g])
                    .filter(filter),
            ),
            (None, Some(p), None, _) => Box::new(
                self.posg
                    .range(prefix_range(&[p]))
                    .map(|&[p, o, s, g]| [s, p, o, g])
                    .filter(filter),
            ),
            (None, None, Some(o), _) => Box::new(
                self.ospg
                    .range(prefix_range(&[o]))
                    .map(|&[o, s, p, g]| [s, p, o, g])
                    .filter(filter),
            ),
            (None, None, None, Some(g)) => Box::new(
                self.gspo
                    .range(prefix_range(&[g]))
                    .map(|&[g, s, p, o]| [s, p, o, g]),
            ),
            (None, None, None, None) => Box::new(self.spog.iter().copied()),
        }
    }

    /// Iterates over all quads in index order.
    pub fn iter(&self) -> impl Iterator<Item = Quad> + '_ {
        self.spog.iter().map(|&k| self.decode(k))
    }

    /// Names of all graphs holding at least one quad, sorted.
    pub fn graphs(&self) -> Vec<Term> {
        let mut out = Vec::new();
        let mut next: Option<Key> = self.gspo.first().copied();
        while let Some(k) = next {
            out.push(self.term(k[0]).clone());
            next = k[0]
                .checked_add(1)
                .and_then(|g| self.gspo.range([g, 0, 0, 0]..).next().copied());
        }
        out.sort();
        out
    }

    pub fn graph_ids(&self) -> Vec<TermId> {
        let mut out = Vec::new();
        let mut next: Option<Key> = self.gspo.first().copied();
        while let Some(k) = next {
            out.push(k[0]);
            next = k[0]
                .checked_add(1)
                .and_then(|g| self.gspo.range([g, 0, 0, 0]..).next().copied());
        }
        out
    }

    pub fn id_of(&self, term: &Term) -> Option<TermId> {
        self.dict.ids.get(term).copied()
    }

    /// The term for an id handed out by this store.
    pub fn term(&self, id: TermId) -> &Term {
        &self.dict.terms[id as usize]
    }

    pub fn decode(&self, [s, p, o, g]: Key) -> Quad {
        Quad {
            subject: self.term(s).clone(),
            predicate: self.term(p).clone(),
            object: self.term(o).clone(),
            graph: self.term(g).clone(),
        }
    }

    fn encode(&self, quad: &Quad) -> Option<Key> {
        Some([
            self.id_of(&quad.subject)?,
            self.id_of(&quad.predicate)?,
            self.id_of(&quad.object)?,
            self.id_of(&quad.graph)?,
        ])
    }

    pub fn extend<'q>(&mut self, quads: impl IntoIterator<Item = &'q Quad>) -> usize {
        quads.into_iter().filter(|q| self.insert(q)).count()
    }

    /// Canonical N-Quads: one line per quad, sorted by the N-Quads
    /// renderings of (graph, subject, predicate, object).
    pub fn export_nquads(&self) -> String {
        nquads::export(self)
    }

    pub fn import_nquads(text: &str) -> Result<QuadStore, NQuadsError> {
        let mut store = QuadStore::new();
        for quad in nquads::parse(text)? {
            store.insert(&quad);
        }
        Ok(store)
    }
}

impl<'q> FromIterator<&'q Quad> for QuadStore {
    fn from_iter<I: IntoIterator<Item = &'q Quad>>(iter: I) -> Self {
        let mut store = QuadStore::new();
        store.extend(iter);
        store
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{Datatype, RDF_TYPE};

    fn iri(s: &str) -> Term {
        Term::Iri(format!("http://x/{s}"))
    }

    fn quad(s: &str, p: &str, o: &str, g: &str) -> Quad {
        Quad::new(iri(s), iri(p), iri(o), iri(g)).unwrap()
    }

    #[test]
    fn set_semantics() {
        let mut st = QuadStore::new();
        let q = quad("a", "p", "b", "g");
        assert!(st.insert(&q));
        assert!(!st.insert(&q));
        assert_eq!(st.len(), 1);
        assert!(st.insert(&quad("a", "p", "b", "h")));
        assert_eq!(st.len(), 2);
    }

    #[test]
    fn remove_and_drop_graph() {
        let mut st = QuadStore::new();
        for i in 0..4 {
            st.insert(&quad(&format!("s{i}"), "p", "o", "g1"));
        }
        st.insert(&quad("s0", "p", "o", "g2"));
        assert_eq!(st.drop_graph(&iri("g1")), 4);
        assert_eq!(st.len(), 1);
        assert_eq!(st.drop_graph(&iri("nope")), 0);
        assert!(st.remove(&quad("s0", "p", "o", "g2")));
        assert!(!st.remove(&quad("s0", "p", "o", "g2")));
        assert!(st.is_empty());
    }

    #[test]
    fn type_pattern_against_linear_scan() {
        let ty = Term::Iri(RDF_TYPE.into());
        let mut st = QuadStore::new();
        let quads = vec![
            Quad::new(iri("a"), ty.clone(), iri("Church"), iri("g")).unwrap(),
            Quad::new(iri("b"), ty.clone(), iri("Museum"), iri("g")).unwrap(),
            quad("a", "height", "x", "g"),
            Quad::new(iri("a"), iri("n"), Term::literal("3", Datatype::Integer).unwrap(), iri("g")).unwrap(),
            quad("b", "near", "a", "g"),
        ];
        st.extend(&quads);
        let pat = QuadPattern::new(None, Some(ty), None, None);
        let got = st.match_pattern(&pat);
        let mut want: Vec<Quad> = quads.iter().filter(|q| pat.matches(q)).cloned().collect();
        want.sort_by(|a, b| (&a.graph, &a.subject).cmp(&(&b.graph, &b.subject)));
        assert_eq!(got, want);
        assert_eq!(got.len(), 2);
        assert_eq!(st.match_pattern(&QuadPattern::any()).len(), 5);
        assert!(st
            .match_pattern(&QuadPattern::new(Some(iri("zz")), Some(iri("p")), Some(iri("o")), Some(iri("g"))))
            .is_empty());
    }

    #[test]
    fn graphs_listing() {
        let mut st = QuadStore::new();
        st.insert(&quad("a", "p", "b", "g2"));
        st.insert(&quad("a", "p", "b", "g1"));
        st.insert(&quad("c", "p", "b", "g1"));
        assert_eq!(st.graphs(), vec![iri("g1"), iri("g2")]);
    }
}
