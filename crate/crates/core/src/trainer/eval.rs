use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{ControllerAgent, MetaControllerAgent};
use crate::discovery::{assign_cluster, KMeansState, SubgoalSet};
use crate::env::{Action, EnvState, GridEnv, GridPos};
use crate::error::{contract, Result};

/// A behavior that sees only the agent's cell.
pub trait Policy {
    /// Called before every episode.
    fn reset(&mut self) {}
    fn act(&mut self, obs: GridPos) -> Result<Action>;
}

/// Stateless policy from a closure.
pub struct FnPolicy<F>(pub F);

impl<F: FnMut(GridPos) -> Action> Policy for FnPolicy<F> {
    fn act(&mut self, obs: GridPos) -> Result<Action> {
        Ok((self.0)(obs))
    }
}

/// Greedy meta-controller over a greedy controller, reselecting on
/// attainment or after `segment_steps` primitive steps.
pub struct HierarchicalPolicy<'a> {
    pub controller: &'a ControllerAgent,
    pub meta: &'a MetaControllerAgent,
    pub gset: &'a SubgoalSet,
    pub kstate: &'a KMeansState,
    pub segment_steps: u32,
    current: Option<usize>,
    seg: u32,
    /// Subgoals chosen in the current episode.
    pub selections: Vec<usize>,
}

impl<'a> HierarchicalPolicy<'a> {
    pub fn new(
        controller: &'a ControllerAgent,
        meta: &'a MetaControllerAgent,
        gset: &'a SubgoalSet,
        kstate: &'a KMeansState,
        segment_steps: u32,
    ) -> Self {
        Self { controller, meta, gset, kstate, segment_steps, current: None, seg: 0, selections: Vec::new() }
    }
}

impl Policy for HierarchicalPolicy<'_> {
    fn reset(&mut self) {
        self.current = None;
        self.seg = 0;
        self.selections.clear();
    }

    fn act(&mut self, obs: GridPos) -> Result<Action> {
        if let Some(g) = self.current {
            if self.seg >= self.segment_steps || self.gset.attained(g, obs, self.kstate)? {
                self.current = None;
            }
        }
        let g = match self.current {
            Some(g) => g,
            None => {
                let g = self.meta.greedy(obs, self.gset, self.kstate)?;
                self.current = Some(g);
                self.seg = 0;
                self.selections.push(g);
                g
            }
        };
        self.seg += 1;
        self.controller.greedy_action(obs, self.gset.point(g))
    }
}

/// Rewards of one episode and how it ended.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub rewards: Vec<f64>,
    pub success: bool,
    pub got_key: bool,
}

impl Rollout {
    pub fn ret(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// `Σ_t γ^t r_t` with the first reward undiscounted.
    pub fn discounted(&self, gamma: f64) -> f64 {
        self.rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
    }
}

pub fn run_policy_episode<P: Policy + ?Sized>(policy: &mut P, env: &GridEnv, start: EnvState) -> Result<Rollout> {
    policy.reset();
    let mut state = start;
    let mut rollout = Rollout { rewards: Vec::new(), success: false, got_key: false };
    while !state.done {
        let a = policy.act(state.agent)?;
        let (next, out) = env.step(&state, a)?;
        rollout.got_key |= next.has_key && !state.has_key;
        rollout.success |= out.success;
        rollout.rewards.push(out.reward);
        state = next;
    }
    Ok(rollout)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub episodes: u64,
    pub success_rate: f64,
    pub mean_return: f64,
    pub max_return: f64,
    pub mean_steps: f64,
    pub key_rate: f64,
}

/// Runs `episodes` episodes of `policy` from starts drawn with `seed`.
pub fn evaluate<P: Policy + ?Sized>(policy: &mut P, env: &GridEnv, episodes: u64, seed: u64) -> Result<EvalResult> {
    if episodes == 0 {
        return contract("evaluation over zero episodes");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut wins, mut keys, mut total, mut steps) = (0u64, 0u64, 0.0, 0usize);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..episodes {
        let r = run_policy_episode(policy, env, env.reset(&mut rng))?;
        wins += r.success as u64;
        keys += r.got_key as u64;
        let ret = r.ret();
        total += ret;
        best = best.max(ret);
        steps += r.rewards.len();
    }
    let n = episodes as f64;
    Ok(EvalResult {
        episodes,
        success_rate: wins as f64 / n,
        mean_return: total / n,
        max_return: best,
        mean_steps: steps as f64 / n,
        key_rate: keys as f64 / n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterValue {
    pub cluster: usize,
    pub subgoal: usize,
    pub samples: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueDiagnostic {
    pub clusters: Vec<ClusterValue>,
    /// Mean within-cluster std over the mean gap between consecutive
    /// sorted cluster means. Below 1 when clusters separate values.
    pub ratio: f64,
}

/// Monte-Carlo discounted returns of the greedy hierarchical policy from
/// up to `samples` cells of every cluster (anomaly cells excluded).
#[allow(clippy::too_many_arguments)]
pub fn cluster_value_diagnostic(
    controller: &ControllerAgent,
    meta: &MetaControllerAgent,
    gset: &SubgoalSet,
    kstate: &KMeansState,
    env: &GridEnv,
    segment_steps: u32,
    samples: usize,
    gamma: f64,
    seed: u64,
) -> Result<ValueDiagnostic> {
    if !kstate.is_initialized() {
        return contract("value diagnostic before any clustering");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = HierarchicalPolicy::new(controller, meta, gset, kstate, segment_steps);
    let mut clusters = Vec::with_capacity(kstate.k);
    for c in 0..kstate.k {
        let mut cells = Vec::new();
        for &cell in env.open_cells() {
            if gset.anomaly_at(cell).is_none() && assign_cluster(kstate, gset.normalize(cell))? == c {
                cells.push(cell);
            }
        }
        cells.shuffle(&mut rng);
        cells.truncate(samples);
        let values = cells
            .iter()
            .map(|&cell| Ok(run_policy_episode(&mut policy, env, env.reset_at(cell))?.discounted(gamma)))
            .collect::<Result<Vec<f64>>>()?;
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        clusters.push(ClusterValue {
            cluster: c,
            subgoal: gset.centroid_subgoal(c).unwrap_or(usize::MAX),
            samples: values.len(),
            mean,
            std: var.sqrt(),
        });
    }
    let mut means: Vec<f64> = clusters.iter().map(|c| c.mean).collect();
    means.sort_by(f64::total_cmp);
    let gap = if means.len() > 1 { (means[means.len() - 1] - means[0]) / (means.len() - 1) as f64 } else { 0.0 };
    let spread = clusters.iter().map(|c| c.std).sum::<f64>() / clusters.len().max(1) as f64;
    let ratio = if gap > 0.0 { spread / gap } else { f64::INFINITY };
    Ok(ValueDiagnostic { clusters, ratio })
}
