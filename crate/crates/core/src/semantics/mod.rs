//! From annotations to statements and back to diagnostics: lowering to
//! quads, subclass closure, and checking against the ontology.

mod check;
mod closure;
mod lower;
mod report;

pub use check::check_page;
pub use closure::{rdfs_closure, recompute_inferred};
pub use lower::{blank_scope, is_page_subject, lower_page, page_ref_iri, resolve_page_ref, LoweringResult};
pub use report::{ValidationReport, Violation, ViolationKind};
