//! The WikiBridge service: revisioned pages on disk, a quad store derived
//! from them, and the HTTP API over both.

pub mod auth;
pub mod error;
pub mod http;
pub mod persist;
pub mod wiki;

pub use error::ServiceError;
pub use http::{router, serve, AppState, ServerConfig};
pub use wiki::{fixed_clock, system_clock, Actor, CheckRequest, SaveMode, SaveRequest, Wiki, WikiConfig};
