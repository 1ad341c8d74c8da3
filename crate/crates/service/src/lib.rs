//! Persistence, session state, HTTP API and command-line front end for the
//! `xdw` engine.
//!
//! Every CLI verb and HTTP route is a thin wrapper over the handlers of
//! [`Service`]; both render the same response types as JSON.

pub mod api;
pub mod cli;
pub mod error;
pub mod http;
pub mod session;
pub mod storage;

pub use error::{ApiError, ApiResult};
pub use session::Service;
