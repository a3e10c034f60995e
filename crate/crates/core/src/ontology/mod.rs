//! The domain ontology: classes with a subclass hierarchy, typed
//! properties with cardinalities, n-ary relation schemas and constraint
//! rules. Loaded from the `.wbo` DSL (see `docs/ontology-dsl.md`).

mod dsl;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::markup::is_identifier;
use crate::query::{FilterExpr, TriplePattern};
use crate::rdf::Datatype;

pub use dsl::load_ontology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PropertyKind {
    Data,
    Object,
}

/// What a property range or relation role accepts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeRef {
    Class(String),
    Datatype(Datatype),
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Class(c) => f.write_str(c),
            TypeRef::Datatype(d) => f.write_str(d.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyDecl {
    pub name: String,
    pub kind: PropertyKind,
    pub domain: String,
    pub range: TypeRef,
    pub min_card: u32,
    /// `None` is unbounded.
    pub max_card: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Role {
    pub name: String,
    pub filler: TypeRef,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSchema {
    pub name: String,
    pub roles: Vec<Role>,
}

impl RelationSchema {
    pub fn role(&self, name: &str) -> Option<&Role> {
        self.roles.iter().find(|r| r.name == name)
    }
}

/// `when { body filters } expect { head }`: every body match must extend
/// to a head match. Head variables absent from the body are existential.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintRule {
    pub name: String,
    pub body: Vec<TriplePattern>,
    pub filters: Vec<FilterExpr>,
    pub head: Vec<TriplePattern>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: undefined reference '{name}'")]
    UndefinedReference { name: String, line: usize },
    #[error("line {line}: duplicate declaration of '{name}'")]
    DuplicateDeclaration { name: String, line: usize },
    #[error("line {line}: bad cardinality for '{name}': {message}")]
    BadCardinality { name: String, line: usize, message: String },
    #[error("line {line}: relation '{name}' needs at least two roles")]
    RelationArity { name: String, line: usize },
    #[error("line {line}: invalid rule '{name}': {message}")]
    InvalidRule { name: String, line: usize, message: String },
}

impl OntologyError {
    pub fn line(&self) -> usize {
        match self {
            OntologyError::Syntax { line, .. }
            | OntologyError::UndefinedReference { line, .. }
            | OntologyError::DuplicateDeclaration { line, .. }
            | OntologyError::BadCardinality { line, .. }
            | OntologyError::RelationArity { line, .. }
            | OntologyError::InvalidRule { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown class '{0}'")]
pub struct UnknownClass(pub String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum OntologyWarning {
    /// Classes that are mutually reachable through subclass edges, hence
    /// equivalent.
    CycleWarning(BTreeSet<String>),
    UnusedClass(String),
}

impl fmt::Display for OntologyWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OntologyWarning::CycleWarning(c) => {
                let names: Vec<&str> = c.iter().map(String::as_str).collect();
                write!(f, "subclass cycle among {{{}}}", names.join(", "))
            }
            OntologyWarning::UnusedClass(c) => write!(f, "class '{c}' is never referenced"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup<'a> {
    Class(&'a str),
    Property(&'a PropertyDecl),
    Relation(&'a RelationSchema),
    NotFound,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ontology {
    classes: BTreeSet<String>,
    subclass_edges: BTreeSet<(String, String)>,
    properties: BTreeMap<String, PropertyDecl>,
    relations: BTreeMap<String, RelationSchema>,
    rules: Vec<ConstraintRule>,
    /// Reflexive-transitive superclasses of every class.
    ancestors: BTreeMap<String, BTreeSet<String>>,
}

impl Ontology {
    pub fn empty() -> Ontology {
        Ontology::default()
    }

    pub fn builder() -> OntologyBuilder {
        OntologyBuilder::default()
    }

    pub fn classes(&self) -> &BTreeSet<String> {
        &self.classes
    }

    pub fn subclass_edges(&self) -> &BTreeSet<(String, String)> {
        &self.subclass_edges
    }

    pub fn properties(&self) -> &BTreeMap<String, PropertyDecl> {
        &self.properties
    }

    pub fn relations(&self) -> &BTreeMap<String, RelationSchema> {
        &self.relations
    }

    pub fn rules(&self) -> &[ConstraintRule] {
        &self.rules
    }

    pub fn is_class(&self, name: &str) -> bool {
        self.classes.contains(name)
    }

    pub fn property(&self, name: &str) -> Option<&PropertyDecl> {
        self.properties.get(name)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationSchema> {
        self.relations.get(name)
    }

    pub fn lookup(&self, name: &str) -> Lookup<'_> {
        if let Some(c) = self.classes.get(name) {
            Lookup::Class(c)
        } else if let Some(p) = self.properties.get(name) {
            Lookup::Property(p)
        } else if let Some(r) = self.relations.get(name) {
            Lookup::Relation(r)
        } else {
            Lookup::NotFound
        }
    }

    /// Superclasses of `class`, including itself. Empty for non-classes.
    pub fn ancestors(&self, class: &str) -> impl Iterator<Item = &str> {
        self.ancestors.get(class).into_iter().flatten().map(String::as_str)
    }

    pub fn is_subclass_of(&self, a: &str, b: &str) -> Result<bool, UnknownClass> {
        for c in [a, b] {
            if !self.is_class(c) {
                return Err(UnknownClass(c.to_owned()));
            }
        }
        Ok(self.ancestors[a].contains(b))
    }

    /// Like [`Ontology::is_subclass_of`] but total: names that are not
    /// classes (relation names used as node types) are only below
    /// themselves.
    pub fn is_subtype(&self, a: &str, b: &str) -> bool {
        a == b || self.ancestors.get(a).is_some_and(|s| s.contains(b))
    }

    pub fn validate(&self) -> Vec<OntologyWarning> {
        validate_ontology(self)
    }

    /// Canonical DSL rendering; [`load_ontology`] reads it back to an
    /// equal value.
    pub fn to_dsl(&self) -> String {
        dsl::render(self)
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_dsl().as_bytes()))
    }

    fn compute_ancestors(&mut self) {
        let mut parents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (sub, sup) in &self.subclass_edges {
            parents.entry(sub).or_default().push(sup);
        }
        let mut ancestors = BTreeMap::new();
        for c in &self.classes {
            let mut seen: BTreeSet<String> = BTreeSet::new();
            let mut stack = vec![c.as_str()];
            while let Some(x) = stack.pop() {
                if seen.insert(x.to_owned()) {
                    stack.extend(parents.get(x).into_iter().flatten().copied());
                }
            }
            ancestors.insert(c.clone(), seen);
        }
        self.ancestors = ancestors;
    }
}

pub fn validate_ontology(ont: &Ontology) -> Vec<OntologyWarning> {
    let mut warnings = BTreeSet::new();
    for c in &ont.classes {
        let cycle: BTreeSet<String> = ont.ancestors[c]
            .iter()
            .filter(|d| ont.ancestors[*d].contains(c))
            .cloned()
            .collect();
        if cycle.len() > 1 {
            warnings.insert(OntologyWarning::CycleWarning(cycle));
        }
    }

    let mut used: BTreeSet<&str> = BTreeSet::new();
    for (a, b) in &ont.subclass_edges {
        used.insert(a);
        used.insert(b);
    }
    for p in ont.properties.values() {
        used.insert(&p.domain);
        if let TypeRef::Class(c) = &p.range {
            used.insert(c);
        }
    }
    for r in ont.relations.values() {
        for role in &r.roles {
            if let TypeRef::Class(c) = &role.filler {
                used.insert(c);
            }
        }
    }
    let rule_names: BTreeSet<String> = ont
        .rules
        .iter()
        .flat_map(|r| r.body.iter().chain(&r.head))
        .flat_map(|p| p.positions())
        .filter_map(|t| match t {
            crate::query::TermPattern::Term(t) => crate::rdf::onto_name(t),
            _ => None,
        })
        .collect();
    for c in &ont.classes {
        if !used.contains(c.as_str()) && !rule_names.contains(c) {
            warnings.insert(OntologyWarning::UnusedClass(c.clone()));
        }
    }
    warnings.into_iter().collect()
}

/// Programmatic construction with the same checks as the DSL loader.
/// Declarations may be added in any order.
#[derive(Debug, Clone, Default)]
pub struct OntologyBuilder {
    pub(crate) classes: Vec<(String, Vec<String>, usize)>,
    pub(crate) properties: Vec<(PropertyDecl, usize)>,
    pub(crate) relations: Vec<(RelationSchema, usize)>,
    pub(crate) rules: Vec<(ConstraintRule, usize)>,
}

impl OntologyBuilder {
    pub fn class(mut self, name: &str, supers: &[&str]) -> Self {
        self.classes.push((name.to_owned(), supers.iter().map(|s| s.to_string()).collect(), 0));
        self
    }

    pub fn property(mut self, decl: PropertyDecl) -> Self {
        self.properties.push((decl, 0));
        self
    }

    pub fn relation(mut self, schema: RelationSchema) -> Self {
        self.relations.push((schema, 0));
        self
    }

    pub fn rule(mut self, rule: ConstraintRule) -> Self {
        self.rules.push((rule, 0));
        self
    }

    pub fn build(self) -> Result<Ontology, Vec<OntologyError>> {
        let mut errors = Vec::new();
        let mut ont = Ontology::default();
        let mut declared: BTreeMap<String, usize> = BTreeMap::new();
        let mut declare = |name: &str, line: usize, errors: &mut Vec<OntologyError>| {
            if !is_identifier(name) {
                errors.push(OntologyError::Syntax { line, message: format!("'{name}' is not an identifier") });
                false
            } else if Datatype::from_name(name).is_some() {
                errors.push(OntologyError::Syntax { line, message: format!("'{name}' is a reserved datatype name") });
                false
            } else if declared.insert(name.to_owned(), line).is_some() {
                errors.push(OntologyError::DuplicateDeclaration { name: name.to_owned(), line });
                false
            } else {
                true
            }
        };

        for (name, _, line) in &self.classes {
            if declare(name, *line, &mut errors) {
                ont.classes.insert(name.clone());
            }
        }
        for (p, line) in &self.properties {
            if declare(&p.name, *line, &mut errors) {
                ont.properties.insert(p.name.clone(), p.clone());
            }
        }
        for (r, line) in &self.relations {
            if declare(&r.name, *line, &mut errors) {
                ont.relations.insert(r.name.clone(), r.clone());
            }
        }

        let class_ref = |name: &str, line: usize, errors: &mut Vec<OntologyError>| {
            if !ont.classes.contains(name) {
                errors.push(OntologyError::UndefinedReference { name: name.to_owned(), line });
            }
        };
        for (name, supers, line) in &self.classes {
            for s in supers {
                class_ref(s, *line, &mut errors);
                ont.subclass_edges.insert((name.clone(), s.clone()));
            }
        }
        for (p, line) in &self.properties {
            class_ref(&p.domain, *line, &mut errors);
            match (&p.range, p.kind) {
                (TypeRef::Class(c), PropertyKind::Object) => class_ref(c, *line, &mut errors),
                (TypeRef::Datatype(_), PropertyKind::Data) => {}
                _ => errors.push(OntologyError::Syntax {
                    line: *line,
                    message: format!("range of '{}' does not match its property kind", p.name),
                }),
            }
            if p.max_card == Some(0) {
                errors.push(OntologyError::BadCardinality {
                    name: p.name.clone(),
                    line: *line,
                    message: "max must be positive".into(),
                });
            } else if p.max_card.is_some_and(|max| p.min_card > max) {
                errors.push(OntologyError::BadCardinality {
                    name: p.name.clone(),
                    line: *line,
                    message: format!("min {} exceeds max {}", p.min_card, p.max_card.unwrap_or_default()),
                });
            }
        }
        for (r, line) in &self.relations {
            if r.roles.len() < 2 {
                errors.push(OntologyError::RelationArity { name: r.name.clone(), line: *line });
            }
            let mut seen = BTreeSet::new();
            for role in &r.roles {
                if !is_identifier(&role.name) {
                    errors.push(OntologyError::Syntax {
                        line: *line,
                        message: format!("role '{}' is not an identifier", role.name),
                    });
                }
                if !seen.insert(role.name.as_str()) {
                    errors.push(OntologyError::DuplicateDeclaration {
                        name: format!("{}.{}", r.name, role.name),
                        line: *line,
                    });
                }
                if let TypeRef::Class(c) = &role.filler {
                    class_ref(c, *line, &mut errors);
                }
            }
        }

        let mut rule_names = BTreeSet::new();
        let known_onto: BTreeSet<&str> = declared
            .keys()
            .map(String::as_str)
            .chain(ont.relations.values().flat_map(|r| r.roles.iter().map(|x| x.name.as_str())))
            .collect();
        for (rule, line) in &self.rules {
            if !rule_names.insert(rule.name.as_str()) {
                errors.push(OntologyError::DuplicateDeclaration { name: rule.name.clone(), line: *line });
            }
            errors.extend(check_rule(rule, *line, &known_onto, &ont.relations));
            ont.rules.push(rule.clone());
        }

        if !errors.is_empty() {
            errors.sort_by_key(OntologyError::line);
            return Err(errors);
        }
        ont.compute_ancestors();
        Ok(ont)
    }
}

fn check_rule(
    rule: &ConstraintRule,
    line: usize,
    known_onto: &BTreeSet<&str>,
    relations: &BTreeMap<String, RelationSchema>,
) -> Vec<OntologyError> {
    use crate::query::TermPattern;
    let invalid = |message: String| OntologyError::InvalidRule { name: rule.name.clone(), line, message };
    let mut errors = Vec::new();
    if rule.name.is_empty() || rule.name.contains(['"', '\n', '\\']) {
        errors.push(invalid("rule names must be nonempty and free of quotes".into()));
    }
    if rule.body.is_empty() {
        errors.push(invalid("empty body".into()));
    }
    if rule.head.is_empty() {
        errors.push(invalid("empty head".into()));
    }
    let vars_of = |ps: &[TriplePattern]| -> BTreeSet<String> {
        ps.iter()
            .flat_map(|p| p.positions())
            .filter_map(|t| t.var().map(str::to_owned))
            .collect()
    };
    let body_vars = vars_of(&rule.body);
    let head_vars = vars_of(&rule.head);
    for f in &rule.filters {
        for v in f.variables() {
            if !body_vars.contains(v) {
                errors.push(invalid(format!("filter variable ?{v} does not occur in the body")));
            }
        }
    }
    if !rule.head.is_empty() && head_vars.is_disjoint(&body_vars) {
        errors.push(invalid("head shares no variable with the body".into()));
    }
    for p in rule.body.iter().chain(&rule.head) {
        if matches!(&p.predicate, TermPattern::Term(t) if !t.is_iri()) {
            errors.push(invalid("predicate must be an IRI or a variable".into()));
        }
        for t in p.positions() {
            let TermPattern::Term(term) = t else { continue };
            let Some(iri) = term.as_iri() else { continue };
            let undefined = if let Some(name) = iri.strip_prefix(crate::rdf::ONTO_NS) {
                !known_onto.contains(crate::rdf::decode_segment(name).as_str())
            } else if let Some(name) = iri.strip_prefix(crate::rdf::REL_NS) {
                !relations.contains_key(crate::rdf::decode_segment(name).as_str())
            } else {
                false
            };
            if undefined {
                errors.push(OntologyError::UndefinedReference { name: iri.to_owned(), line });
            }
        }
    }
    errors
}
