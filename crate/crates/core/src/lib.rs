//! Corruption robustness analysis for image captioning models: image
//! corruptions, scene-graph matching, caption metrics, embedding-based
//! judgment, per-task error analysis and pattern discovery.

pub mod corruption;
mod error;
pub mod graphs;
pub mod judgment;
pub mod metrics;
pub mod patterns;
pub mod sg;
pub mod store;
pub mod synthetic;
pub mod tasks;

pub use error::{Error, Result};
