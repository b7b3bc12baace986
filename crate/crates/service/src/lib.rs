//! Batch pipeline stages over a results cache, and the HTTP API that serves
//! their output to the dashboard.

pub mod api;
mod error;
pub mod session;
pub mod stages;

pub use error::{Result, ServiceError};
