use serde::{Deserialize, Serialize};

use crate::env::GridPos;
use crate::error::{contract, HrlError, Result};
use crate::memory::MetaTransition;

pub const META_TABLE_FORMAT_VERSION: u32 = 1;

/// Discount applied to the bootstrap term of the meta target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaDiscount {
    /// `γ^T` with `T` the measured length of the controller episode.
    #[default]
    Effective,
    /// Plain `γ` per subgoal selection.
    Literal,
}

/// Square table `Q(i, g)`: rows are state indices (the subgoal a state maps
/// to), columns are subgoals. Both grow together with the subgoal set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr", into = "TableRepr")]
pub struct MetaQTable {
    n: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRepr {
    format_version: u32,
    size: usize,
    values: Vec<Vec<f64>>,
}

impl From<MetaQTable> for TableRepr {
    fn from(t: MetaQTable) -> Self {
        let values = (0..t.n).map(|i| t.row(i).to_vec()).collect();
        TableRepr { format_version: META_TABLE_FORMAT_VERSION, size: t.n, values }
    }
}

impl TryFrom<TableRepr> for MetaQTable {
    type Error = HrlError;

    fn try_from(r: TableRepr) -> Result<Self> {
        if r.format_version != META_TABLE_FORMAT_VERSION {
            return Err(HrlError::Format(format!("meta table format_version {}", r.format_version)));
        }
        if r.values.len() != r.size || r.values.iter().any(|row| row.len() != r.size) {
            return Err(HrlError::Format("meta table is not square".into()));
        }
        Ok(MetaQTable { n: r.size, values: r.values.into_iter().flatten().collect() })
    }
}

impl MetaQTable {
    pub fn new(n: usize) -> Self {
        Self { n, values: vec![0.0; n * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Grows to `n x n`, keeping existing entries; new cells start at 0.
    pub fn resize(&mut self, n: usize) {
        if n <= self.n {
            return;
        }
        let mut values = vec![0.0; n * n];
        for i in 0..self.n {
            values[i * n..i * n + self.n].copy_from_slice(self.row(i));
        }
        self.n = n;
        self.values = values;
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.n..(state + 1) * self.n]
    }

    pub fn get(&self, state: usize, subgoal: usize) -> Result<f64> {
        self.check(state, subgoal)?;
        Ok(self.values[state * self.n + subgoal])
    }

    pub fn set(&mut self, state: usize, subgoal: usize, v: f64) -> Result<()> {
        self.check(state, subgoal)?;
        self.values[state * self.n + subgoal] = v;
        Ok(())
    }

    pub fn max_row(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn check(&self, state: usize, subgoal: usize) -> Result<()> {
        if state >= self.n || subgoal >= self.n {
            return contract(format!("meta index ({state}, {subgoal}) outside {0}x{0} table", self.n));
        }
        Ok(())
    }

    /// Target for one meta experience.
    pub fn target(
        &self,
        mt: &MetaTransition,
        gamma: f64,
        mode: MetaDiscount,
        index_of: impl Fn(GridPos) -> usize,
    ) -> Result<f64> {
        if mt.end_terminal {
            return Ok(mt.ret);
        }
        let next = index_of(mt.s_end);
        self.check(next, 0)?;
        let discount = match mode {
            MetaDiscount::Effective => gamma.powi(mt.steps as i32),
            MetaDiscount::Literal => gamma,
        };
        Ok(mt.ret + discount * self.max_row(next))
    }

    /// One tabular TD(0) step: `Q(i,g) += α (Y - Q(i,g))`. Returns the TD error.
    pub fn update(
        &mut self,
        mt: &MetaTransition,
        alpha: f64,
        gamma: f64,
        mode: MetaDiscount,
        index_of: impl Fn(GridPos) -> usize,
    ) -> Result<f64> {
        let i = index_of(mt.s0);
        let old = self.get(i, mt.g)?;
        let y = self.target(mt, gamma, mode, index_of)?;
        let delta = y - old;
        self.values[i * self.n + mt.g] = old + alpha * delta;
        Ok(delta)
    }
}
