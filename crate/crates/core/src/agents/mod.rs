//! Controller, meta-controller, intrinsic critic and the flat SARSA baseline.

mod controller;
mod meta;
mod sarsa;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use controller::ControllerAgent;
pub use meta::MetaControllerAgent;
pub use sarsa::{SarsaBaseline, BASELINE_GOAL};

/// Linear decay from `start` to `end` over `decay_steps` calls to
/// [`EpsilonSchedule::advance`], constant afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    #[serde(default)]
    pub decay_steps: u64,
    #[serde(default)]
    pub step: u64,
}

impl EpsilonSchedule {
    pub fn constant(eps: f64) -> Self {
        Self::linear(eps, eps, 0)
    }

    pub fn linear(start: f64, end: f64, decay_steps: u64) -> Self {
        Self { start, end, decay_steps, step: 0 }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        for (name, v) in [("start", self.start), ("end", self.end)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("epsilon {name} = {v} outside [0, 1]"));
            }
        }
        if self.end > self.start {
            return Err(format!("epsilon end {} above start {}", self.end, self.start));
        }
        Ok(())
    }

    pub fn value_at(&self, step: u64) -> f64 {
        if step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        (self.start + (self.end - self.start) * frac).clamp(self.end.min(self.start), self.start.max(self.end))
    }

    pub fn value(&self) -> f64 {
        self.value_at(self.step)
    }

    pub fn advance(&mut self) {
        self.step = self.step.saturating_add(1);
    }
}

/// The internal critic: `+1` on attainment, otherwise `min(r, -1)`.
pub fn intrinsic_reward(attained: bool, r: f64) -> f64 {
    if attained {
        1.0
    } else {
        r.min(-1.0)
    }
}

/// Index of the largest value, ties to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// With probability `epsilon` a uniform index, otherwise [`argmax`]. At
/// `epsilon == 0` no randomness is consumed.
pub fn epsilon_greedy<R: Rng + ?Sized>(values: &[f64], epsilon: f64, rng: &mut R) -> usize {
    assert!(!values.is_empty(), "epsilon_greedy over no values");
    explore(epsilon, values.len(), rng).unwrap_or_else(|| argmax(values))
}

/// The exploration half of [`epsilon_greedy`]: `Some(uniform index)` with
/// probability `epsilon`. Lets callers skip computing values they would not
/// use while consuming the same random stream.
pub fn explore<R: Rng + ?Sized>(epsilon: f64, n: usize, rng: &mut R) -> Option<usize> {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        Some(rng.gen_range(0..n))
    } else {
        None
    }
}
