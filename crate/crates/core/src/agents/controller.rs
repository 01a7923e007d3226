use rand::Rng;

use crate::approx::{ForwardPass, StateGoalNet};
use crate::env::{normalize_in, Action, GridPos, Point};
use crate::error::Result;
use crate::memory::IntrinsicTransition;

use super::{argmax, explore, EpsilonSchedule};

/// State codes of every cell of a grid, computed once.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CodeCache {
    width: i32,
    height: i32,
    inputs: usize,
    codes: Vec<f64>,
}

impl CodeCache {
    pub(crate) fn new(net: &StateGoalNet, grid: (i32, i32)) -> Self {
        let inputs = net.inputs();
        let mut codes = Vec::with_capacity((grid.0 * grid.1) as usize * inputs);
        for y in 0..grid.1 {
            for x in 0..grid.0 {
                codes.extend(net.encode_state(normalize_in(grid, GridPos::new(x, y))));
            }
        }
        Self { width: grid.0, height: grid.1, inputs, codes }
    }

    pub(crate) fn get(&self, net: &StateGoalNet, cell: GridPos) -> &[f64] {
        assert_eq!(net.inputs(), self.inputs, "state coder changed after construction");
        assert!(
            cell.x >= 0 && cell.y >= 0 && cell.x < self.width && cell.y < self.height,
            "cell {cell} outside the {}x{} grid",
            self.width,
            self.height
        );
        let i = (cell.y * self.width + cell.x) as usize * self.inputs;
        &self.codes[i..i + self.inputs]
    }
}

/// Goal-conditioned action values `q(s, g, a)` trained by Q-learning on
/// intrinsic reward.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerAgent {
    pub net: StateGoalNet,
    pub epsilon: EpsilonSchedule,
    pub alpha: f64,
    pub gamma: f64,
    /// Grid used to normalize cells into the unit square.
    pub grid: (i32, i32),
    codes: CodeCache,
}

impl ControllerAgent {
    pub fn new(net: StateGoalNet, epsilon: EpsilonSchedule, alpha: f64, gamma: f64, grid: (i32, i32)) -> Self {
        assert!(alpha > 0.0, "alpha must be positive");
        assert!((0.0..=1.0).contains(&gamma), "gamma must lie in [0, 1]");
        let codes = CodeCache::new(&net, grid);
        Self { net, epsilon, alpha, gamma, grid, codes }
    }

    /// Gaussian state code of a grid cell.
    pub fn state_code(&self, cell: GridPos) -> &[f64] {
        self.codes.get(&self.net, cell)
    }

    pub fn point(&self, cell: GridPos) -> Point {
        normalize_in(self.grid, cell)
    }

    pub fn q_values(&self, s: GridPos, goal: Point) -> Result<[f64; Action::COUNT]> {
        Ok(self.net.q_gated(self.state_code(s), &self.net.gate(goal)?))
    }

    pub fn greedy_action(&self, s: GridPos, goal: Point) -> Result<Action> {
        Ok(Action::from_index(argmax(&self.q_values(s, goal)?)))
    }

    /// ε-greedy under the current schedule value.
    pub fn act<R: Rng + ?Sized>(&self, s: GridPos, goal: Point, rng: &mut R) -> Result<Action> {
        self.act_with(s, goal, self.epsilon.value(), rng)
    }

    pub fn act_with<R: Rng + ?Sized>(&self, s: GridPos, goal: Point, eps: f64, rng: &mut R) -> Result<Action> {
        match explore(eps, Action::COUNT, rng) {
            Some(i) => Ok(Action::from_index(i)),
            None => self.greedy_action(s, goal),
        }
    }

    /// TD error of one experience and the forward pass at `s` it refers to.
    pub fn td_error(&self, t: &IntrinsicTransition) -> Result<(f64, ForwardPass)> {
        let rows = self.net.gate(t.goal)?;
        let pass = self.net.forward_gated(self.state_code(t.s).to_vec(), &rows);
        let target = if t.attained || t.terminal {
            t.r_tilde
        } else {
            let next = self.net.q_gated(self.state_code(t.s_next), &rows);
            t.r_tilde + self.gamma * next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        Ok((target - pass.q[t.a.index()], pass))
    }

    /// One Q-learning step; returns the TD error before the update.
    pub fn td_update_one(&mut self, t: &IntrinsicTransition) -> Result<f64> {
        let (delta, pass) = self.td_error(t)?;
        self.net.backprop_update(&pass, t.a, delta, self.alpha);
        Ok(delta)
    }

    /// Applies the entries in order, each seeing the previous updates.
    pub fn td_update(&mut self, batch: &[IntrinsicTransition]) -> Result<()> {
        for t in batch {
            self.td_update_one(t)?;
        }
        Ok(())
    }
}
