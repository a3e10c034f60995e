//! Core of the WikiBridge semantic wiki: annotation markup, the quad
//! store, the ontology, lowering and checking, the query language and
//! access control. Everything here is synchronous and free of I/O.

pub mod acl;
pub mod markup;
pub mod ontology;
pub mod query;
pub mod rdf;
pub mod semantics;
pub mod store;

pub use markup::{parse_page, serialize_page, strip_annotations, PageSource, ParsedPage};
pub use ontology::{load_ontology, Ontology};
pub use query::{evaluate, parse_query, Query, QueryResults};
pub use rdf::{Quad, Term};
pub use semantics::{check_page, lower_page, rdfs_closure, LoweringResult, ValidationReport};
pub use store::QuadStore;
