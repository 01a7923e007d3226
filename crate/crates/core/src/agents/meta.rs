use rand::Rng;

use crate::approx::{MetaDiscount, MetaQTable};
use crate::discovery::{KMeansState, SubgoalSet};
use crate::env::GridPos;
use crate::error::{contract, Result};
use crate::memory::MetaTransition;

use super::{epsilon_greedy, EpsilonSchedule};

/// Tabular subgoal selector `Q(state index, subgoal)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaControllerAgent {
    pub table: MetaQTable,
    pub epsilon: EpsilonSchedule,
    pub alpha: f64,
    pub gamma: f64,
    pub mode: MetaDiscount,
}

impl MetaControllerAgent {
    pub fn new(epsilon: EpsilonSchedule, alpha: f64, gamma: f64, mode: MetaDiscount) -> Self {
        assert!(alpha > 0.0, "alpha must be positive");
        assert!((0.0..=1.0).contains(&gamma), "gamma must lie in [0, 1]");
        Self { table: MetaQTable::new(0), epsilon, alpha, gamma, mode }
    }

    /// Grows the table to cover every subgoal (new entries are zero).
    pub fn sync(&mut self, gset: &SubgoalSet) {
        if self.table.size() < gset.len() {
            self.table.resize(gset.len());
        }
    }

    pub fn select<R: Rng + ?Sized>(
        &mut self,
        s: GridPos,
        gset: &SubgoalSet,
        kstate: &KMeansState,
        rng: &mut R,
    ) -> Result<usize> {
        let eps = self.epsilon.value();
        self.select_with(s, gset, kstate, eps, rng)
    }

    pub fn select_with<R: Rng + ?Sized>(
        &mut self,
        s: GridPos,
        gset: &SubgoalSet,
        kstate: &KMeansState,
        eps: f64,
        rng: &mut R,
    ) -> Result<usize> {
        if gset.is_empty() {
            return contract("subgoal selection with an empty subgoal set");
        }
        self.sync(gset);
        let i = gset.state_index(s, kstate)?;
        Ok(epsilon_greedy(&self.table.row(i)[..gset.len()], eps, rng))
    }

    /// Read-only greedy choice.
    pub fn greedy(&self, s: GridPos, gset: &SubgoalSet, kstate: &KMeansState) -> Result<usize> {
        if gset.is_empty() {
            return contract("subgoal selection with an empty subgoal set");
        }
        let i = gset.state_index(s, kstate)?;
        if i >= self.table.size() {
            return Ok(0);
        }
        let n = gset.len().min(self.table.size());
        Ok(super::argmax(&self.table.row(i)[..n]))
    }

    /// One tabular TD step; state cells are mapped through the current
    /// subgoal set. Returns the TD error.
    pub fn update(&mut self, mt: &MetaTransition, gset: &SubgoalSet, kstate: &KMeansState) -> Result<f64> {
        self.sync(gset);
        let i0 = gset.state_index(mt.s0, kstate)?;
        let i1 = if mt.end_terminal { i0 } else { gset.state_index(mt.s_end, kstate)? };
        let s0 = mt.s0;
        self.table.update(mt, self.alpha, self.gamma, self.mode, |p| if p == s0 { i0 } else { i1 })
    }
}
