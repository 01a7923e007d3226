//! Model-free hierarchical reinforcement learning on gridworlds: a
//! goal-conditioned controller, a tabular meta-controller, and subgoals
//! discovered from experience by anomaly detection and K-means.

pub mod agents;
pub mod approx;
pub mod discovery;
pub mod env;
pub mod error;
pub mod memory;
pub mod trainer;

pub use error::{HrlError, Result};
