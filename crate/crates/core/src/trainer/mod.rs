//! Training loops, greedy evaluation, diagnostics and run artifacts.

mod artifacts;
mod baseline;
mod config;
mod eval;
mod unified;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use artifacts::{RunArtifacts, RunSummary, ARTIFACTS_FORMAT_VERSION, METRICS_HEADER};
pub use baseline::{run_baseline, BaselineRun};
pub use config::{ConfigError, TrainConfig};
pub use eval::{
    cluster_value_diagnostic, evaluate, run_policy_episode, ClusterValue, EvalResult, FnPolicy, HierarchicalPolicy,
    Policy, ValueDiagnostic,
};
pub use unified::{
    pretrain_controller, random_walk, run_discovery, run_intrinsic_pretraining, run_random_walk, run_unified, task_env,
    Memories, PretrainRecord,
};

/// One task episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    /// Plain sum of external rewards.
    #[serde(rename = "return")]
    pub ret: f64,
    pub discounted_return: f64,
    pub steps: u32,
    pub success: bool,
    pub got_key: bool,
    pub eps1: f64,
    pub eps2: f64,
    pub n_subgoals: usize,
    /// Controller attempts started.
    pub segments: u32,
    /// Subgoal ids attained, in order.
    pub attained: Vec<usize>,
    /// Whether the subgoal chosen right after the key pickup differed from
    /// the key subgoal; `None` if no choice followed a pickup.
    pub post_key_switch: Option<bool>,
}

/// Greedy evaluation taken during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    /// Training episodes completed when the evaluation ran.
    pub after_episode: u64,
    pub result: EvalResult,
}

/// Independent deterministic random stream `id` of a run.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub(crate) const STREAM_NET: u64 = 0;
pub(crate) const STREAM_PRETRAIN: u64 = 1;
pub(crate) const STREAM_WALK: u64 = 2;
pub(crate) const STREAM_KMEANS: u64 = 3;
pub(crate) const STREAM_TRAIN: u64 = 4;
pub(crate) const STREAM_EVAL: u64 = 1 << 20;
