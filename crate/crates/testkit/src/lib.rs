//! Test support for WikiBridge: proptest generators and reference
//! implementations simple enough to trust, used as oracles.

pub mod acl;
pub mod closure;
pub mod fixtures;
pub mod pages;
pub mod query;
