use rand::Rng;

use crate::approx::{ForwardPass, StateGoalNet};
use crate::env::{Action, GridPos, Point};
use crate::error::Result;

use super::controller::CodeCache;
use super::{argmax, explore, EpsilonSchedule};

/// Constant goal input of the flat agent.
pub const BASELINE_GOAL: Point = [0.5, 0.5];

/// Flat on-policy SARSA on the same network as the controller, with the goal
/// input pinned to [`BASELINE_GOAL`].
#[derive(Debug, Clone, PartialEq)]
pub struct SarsaBaseline {
    pub net: StateGoalNet,
    pub epsilon: EpsilonSchedule,
    pub alpha: f64,
    pub gamma: f64,
    pub grid: (i32, i32),
    rows: Vec<usize>,
    codes: CodeCache,
}

impl SarsaBaseline {
    pub fn new(net: StateGoalNet, epsilon: EpsilonSchedule, alpha: f64, gamma: f64, grid: (i32, i32)) -> Result<Self> {
        assert!(alpha > 0.0, "alpha must be positive");
        assert!((0.0..=1.0).contains(&gamma), "gamma must lie in [0, 1]");
        let rows = net.gate(BASELINE_GOAL)?;
        let codes = CodeCache::new(&net, grid);
        Ok(Self { net, epsilon, alpha, gamma, grid, rows, codes })
    }

    fn pass(&self, s: GridPos) -> ForwardPass {
        self.net.forward_gated(self.codes.get(&self.net, s).to_vec(), &self.rows)
    }

    pub fn q_values(&self, s: GridPos) -> [f64; Action::COUNT] {
        self.net.q_gated(self.codes.get(&self.net, s), &self.rows)
    }

    pub fn greedy_action(&self, s: GridPos) -> Action {
        Action::from_index(argmax(&self.q_values(s)))
    }

    pub fn act<R: Rng + ?Sized>(&self, s: GridPos, rng: &mut R) -> Action {
        self.act_with(s, self.epsilon.value(), rng)
    }

    pub fn act_with<R: Rng + ?Sized>(&self, s: GridPos, eps: f64, rng: &mut R) -> Action {
        match explore(eps, Action::COUNT, rng) {
            Some(i) => Action::from_index(i),
            None => self.greedy_action(s),
        }
    }

    /// `δ = r + γ q(s', a') - q(s, a)`, or `r - q(s, a)` when terminal.
    /// Returns δ.
    pub fn sarsa_update(
        &mut self,
        s: GridPos,
        a: Action,
        r: f64,
        s_next: GridPos,
        a_next: Action,
        terminal: bool,
    ) -> f64 {
        let pass = self.pass(s);
        let target = if terminal { r } else { r + self.gamma * self.q_values(s_next)[a_next.index()] };
        let delta = target - pass.q[a.index()];
        self.net.backprop_update(&pass, a, delta, self.alpha);
        delta
    }
}
