//! Goal-gated state network with k-winners-take-all hidden rows.
//!
//! The goal's Gaussian code selects a set of hidden rows (those whose gate
//! activation exceeds `gate_threshold`). Each selected row sees the state's
//! Gaussian code through its own input weights, keeps its `k` strongest
//! units, and adds a linear read-out per action. Rows that the goal does not
//! select neither contribute to the output nor receive updates.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gaussian::GaussianCoder;
use crate::env::{Action, Point};
use crate::error::{contract, HrlError, Result};

/// Net input given to losing units; `sigmoid(-30) ≈ 9.4e-14`.
pub const KWTA_SUPPRESSED: f64 = -30.0;

const CHECKPOINT_MAGIC: &[u8; 8] = b"SGNETBIN";
pub const CHECKPOINT_FORMAT_VERSION: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    /// State code grid, `[rows, cols]`.
    pub state_grid: [usize; 2],
    pub state_coding: StateCoding,
    /// Goal gate grid, `[rows, cols]`; one hidden row per center.
    pub goal_grid: [usize; 2],
    /// Defaults to half the center spacing.
    pub state_sigma: Option<f64>,
    pub goal_sigma: Option<f64>,
    pub hidden_per_row: usize,
    pub k: usize,
    pub gate_threshold: f64,
    /// Initial weights are drawn from `uniform(-init_scale, init_scale)`.
    pub init_scale: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            state_grid: [20, 20],
            state_coding: StateCoding::Separable,
            goal_grid: [5, 5],
            state_sigma: None,
            goal_sigma: None,
            hidden_per_row: 50,
            k: 5,
            gate_threshold: 0.1,
            init_scale: 0.05,
        }
    }
}

/// How the state code covers the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateCoding {
    /// One Gaussian per `state_grid` center.
    Grid,
    /// Separate 1-D pools for x (`state_grid[1]` centers) and y
    /// (`state_grid[0]` centers).
    #[default]
    Separable,
}

impl NetConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.state_grid.contains(&0) || self.goal_grid.contains(&0) {
            return Err("coder grids must be non-empty".into());
        }
        if self.hidden_per_row == 0 {
            return Err("hidden_per_row must be positive".into());
        }
        if self.k == 0 || self.k > self.hidden_per_row {
            return Err(format!("k must be in [1, {}]", self.hidden_per_row));
        }
        for s in [self.state_sigma, self.goal_sigma].into_iter().flatten() {
            if !(s > 0.0 && s.is_finite()) {
                return Err("sigma must be positive".into());
            }
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err("init_scale must be non-negative".into());
        }
        Ok(())
    }

    fn coder(grid: [usize; 2], sigma: Option<f64>) -> GaussianCoder {
        let sigma = sigma.unwrap_or_else(|| GaussianCoder::half_spacing(grid[0], grid[1]));
        GaussianCoder::new(grid[0], grid[1], sigma)
    }
}

/// Keeps the `k` largest entries and replaces the rest by
/// [`KWTA_SUPPRESSED`]. Ties go to the lower index.
pub fn kwta(net: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > net.len() {
        return contract(format!("kwta with k={k} over {} units", net.len()));
    }
    let mut winners = Vec::with_capacity(k);
    kwta_winners(net, k, &mut winners);
    let mut out = vec![KWTA_SUPPRESSED; net.len()];
    for &j in &winners {
        out[j] = net[j];
    }
    Ok(out)
}

/// Indices of the `k` winners, in ascending index order.
pub(crate) fn kwta_winners(net: &[f64], k: usize, winners: &mut Vec<usize>) {
    winners.clear();
    if k >= net.len() {
        winners.extend(0..net.len());
        return;
    }
    // descending top-k list; a later index never displaces an equal earlier one
    for (j, &v) in net.iter().enumerate() {
        let len = winners.len();
        if len == k {
            if v <= net[winners[k - 1]] {
                continue;
            }
            winners[k - 1] = j;
        } else {
            winners.push(j);
        }
        let mut pos = winners.len() - 1;
        while pos > 0 && v > net[winners[pos - 1]] {
            winners.swap(pos, pos - 1);
            pos -= 1;
        }
    }
    winners.sort_unstable();
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Activity of one gated row during a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct RowActivity {
    pub row: usize,
    pub winners: Vec<usize>,
    /// Sigmoid activity of every unit in the row (losers ≈ 0).
    pub h: Vec<f64>,
}

/// Everything backprop needs from the forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub q: [f64; Action::COUNT],
    pub state_code: Vec<f64>,
    pub rows: Vec<RowActivity>,
}

impl ForwardPass {
    pub fn max_q(&self) -> f64 {
        self.q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateGoalNet {
    config: NetConfig,
    state_coder: GaussianCoder,
    goal_coder: GaussianCoder,
    /// `[row][input][unit]`
    w1: Vec<f64>,
    /// `[row][action][unit]`
    w2: Vec<f64>,
}

impl StateGoalNet {
    pub fn new<R: Rng + ?Sized>(config: NetConfig, rng: &mut R) -> Self {
        let mut net = Self::zeros(config);
        let scale = net.config.init_scale;
        if scale > 0.0 {
            for w in net.w1.iter_mut().chain(net.w2.iter_mut()) {
                *w = rng.gen_range(-scale..scale);
            }
        }
        net
    }

    pub fn zeros(config: NetConfig) -> Self {
        let state_coder = match config.state_coding {
            StateCoding::Grid => NetConfig::coder(config.state_grid, config.state_sigma),
            StateCoding::Separable => {
                let [r, c] = config.state_grid;
                let sigma = config.state_sigma.unwrap_or_else(|| GaussianCoder::half_spacing(r, c));
                GaussianCoder::separable(r, c, sigma)
            }
        };
        let goal_coder = NetConfig::coder(config.goal_grid, config.goal_sigma);
        let rows = goal_coder.len();
        let w1 = vec![0.0; rows * config.hidden_per_row * state_coder.len()];
        let w2 = vec![0.0; rows * Action::COUNT * config.hidden_per_row];
        Self { config, state_coder, goal_coder, w1, w2 }
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn state_coder(&self) -> &GaussianCoder {
        &self.state_coder
    }

    pub fn goal_coder(&self) -> &GaussianCoder {
        &self.goal_coder
    }

    pub fn rows(&self) -> usize {
        self.goal_coder.len()
    }

    pub fn hidden(&self) -> usize {
        self.config.hidden_per_row
    }

    pub fn inputs(&self) -> usize {
        self.state_coder.len()
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn parameter_count(&self) -> usize {
        self.w1.len() + self.w2.len()
    }

    pub fn w1(&self) -> &[f64] {
        &self.w1
    }

    pub fn w2(&self) -> &[f64] {
        &self.w2
    }

    pub fn w1_mut(&mut self) -> &mut [f64] {
        &mut self.w1
    }

    pub fn w2_mut(&mut self) -> &mut [f64] {
        &mut self.w2
    }

    pub fn w1_index(&self, row: usize, unit: usize, input: usize) -> usize {
        (row * self.inputs() + input) * self.hidden() + unit
    }

    pub fn w2_index(&self, row: usize, action: usize, unit: usize) -> usize {
        (row * Action::COUNT + action) * self.hidden() + unit
    }

    pub fn encode_state(&self, s: Point) -> Vec<f64> {
        self.state_coder.encode(s)
    }

    /// Rows whose gate activation for goal `g` exceeds the threshold.
    pub fn gate(&self, g: Point) -> Result<Vec<usize>> {
        let code = self.goal_coder.encode(g);
        let rows: Vec<usize> =
            code.iter().enumerate().filter(|(_, &v)| v > self.config.gate_threshold).map(|(i, _)| i).collect();
        if rows.is_empty() {
            return contract(format!("goal {g:?} opens no gate rows"));
        }
        Ok(rows)
    }

    pub fn forward(&self, s: Point, g: Point) -> Result<ForwardPass> {
        let rows = self.gate(g)?;
        Ok(self.forward_gated(self.encode_state(s), &rows))
    }

    /// Output values only.
    pub fn q_values(&self, s: Point, g: Point) -> Result<[f64; Action::COUNT]> {
        Ok(self.forward(s, g)?.q)
    }

    /// Forward pass from a precomputed state code and gate set.
    pub fn forward_gated(&self, state_code: Vec<f64>, gate_rows: &[usize]) -> ForwardPass {
        debug_assert_eq!(state_code.len(), self.inputs());
        let mut q = [0.0; Action::COUNT];
        let mut rows = Vec::with_capacity(gate_rows.len());
        let mut net = vec![0.0; self.hidden()];
        for &row in gate_rows {
            let mut winners = Vec::with_capacity(self.config.k + 1);
            let mut h = Vec::new();
            self.row_forward(row, &state_code, &mut net, &mut winners, &mut h, &mut q);
            rows.push(RowActivity { row, winners, h });
        }
        ForwardPass { q, state_code, rows }
    }

    /// Output values only, from a precomputed state code and gate set.
    pub fn q_gated(&self, state_code: &[f64], gate_rows: &[usize]) -> [f64; Action::COUNT] {
        debug_assert_eq!(state_code.len(), self.inputs());
        let mut q = [0.0; Action::COUNT];
        let mut net = vec![0.0; self.hidden()];
        let mut winners = Vec::with_capacity(self.config.k + 1);
        let mut h = Vec::with_capacity(self.hidden());
        for &row in gate_rows {
            self.row_forward(row, state_code, &mut net, &mut winners, &mut h, &mut q);
        }
        q
    }

    /// One gated row: net input, kWTA, sigmoid, and its read-out added to `q`.
    fn row_forward(
        &self,
        row: usize,
        state_code: &[f64],
        net: &mut [f64],
        winners: &mut Vec<usize>,
        h: &mut Vec<f64>,
        q: &mut [f64; Action::COUNT],
    ) {
        let hidden = self.hidden();
        let inputs = self.inputs();
        let block = &self.w1[row * hidden * inputs..(row + 1) * hidden * inputs];
        net.fill(0.0);
        for (&x, col) in state_code.iter().zip(block.chunks_exact(hidden)) {
            if x == 0.0 {
                continue;
            }
            for (n, w) in net.iter_mut().zip(col) {
                *n += w * x;
            }
        }
        kwta_winners(net, self.config.k, winners);
        h.clear();
        h.resize(hidden, sigmoid(KWTA_SUPPRESSED));
        for &j in winners.iter() {
            h[j] = sigmoid(net[j]);
        }
        for (a, qa) in q.iter_mut().enumerate() {
            let base = (row * Action::COUNT + a) * hidden;
            *qa += dot(&self.w2[base..base + hidden], h);
        }
    }

    /// Moves `q(s, g, a)` by gradient ascent scaled by the TD error `delta`.
    ///
    /// Only rows in the pass and only action `a`'s read-out change. The
    /// input weights of losing units are untouched (their net input is
    /// clamped, so they carry no gradient).
    pub fn backprop_update(&mut self, pass: &ForwardPass, a: Action, delta: f64, alpha: f64) {
        if delta == 0.0 {
            return;
        }
        let hidden = self.hidden();
        let inputs = self.inputs();
        let a = a.index();
        for act in &pass.rows {
            let base2 = (act.row * Action::COUNT + a) * hidden;
            let block = act.row * inputs * hidden;
            // input weights first, so the propagated error sees the old read-out
            for (i, &x) in pass.state_code.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let col = block + i * hidden;
                for &j in &act.winners {
                    let hj = act.h[j];
                    self.w1[col + j] += alpha * delta * self.w2[base2 + j] * hj * (1.0 - hj) * x;
                }
            }
            for (w, hj) in self.w2[base2..base2 + hidden].iter_mut().zip(&act.h) {
                *w += alpha * delta * hj;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.w1.iter().chain(&self.w2).all(|w| w.is_finite())
    }

    /// Binary checkpoint: magic, little-endian header, then `w1` and `w2`
    /// as little-endian `f64` in memory order.
    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(CHECKPOINT_MAGIC)?;
        let c = &self.config;
        for v in [
            CHECKPOINT_FORMAT_VERSION,
            c.state_grid[0] as u32,
            c.state_grid[1] as u32,
            c.goal_grid[0] as u32,
            c.goal_grid[1] as u32,
            c.hidden_per_row as u32,
            Action::COUNT as u32,
            c.k as u32,
            (c.state_coding == StateCoding::Separable) as u32,
        ] {
            out.write_all(&v.to_le_bytes())?;
        }
        for v in [self.state_coder.sigma(), self.goal_coder.sigma(), c.gate_threshold, c.init_scale] {
            out.write_all(&v.to_le_bytes())?;
        }
        for w in self.w1.iter().chain(&self.w2) {
            out.write_all(&w.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(HrlError::Format("not a state-goal network checkpoint".into()));
        }
        let mut u = [0u32; 9];
        for v in u.iter_mut() {
            let mut b = [0u8; 4];
            input.read_exact(&mut b)?;
            *v = u32::from_le_bytes(b);
        }
        let [version, sr, sc, gr, gc, hidden, actions, k, coding] = u;
        if version != CHECKPOINT_FORMAT_VERSION {
            return Err(HrlError::Format(format!("checkpoint format_version {version}")));
        }
        if actions as usize != Action::COUNT {
            return Err(HrlError::Format(format!("checkpoint has {actions} actions")));
        }
        let mut f = [0f64; 4];
        for v in f.iter_mut() {
            *v = read_f64(&mut input)?;
        }
        let state_coding = match coding {
            0 => StateCoding::Grid,
            1 => StateCoding::Separable,
            other => return Err(HrlError::Format(format!("unknown state coding {other}"))),
        };
        let config = NetConfig {
            state_grid: [sr as usize, sc as usize],
            state_coding,
            goal_grid: [gr as usize, gc as usize],
            state_sigma: Some(f[0]),
            goal_sigma: Some(f[1]),
            hidden_per_row: hidden as usize,
            k: k as usize,
            gate_threshold: f[2],
            init_scale: f[3],
        };
        config.validate().map_err(HrlError::Format)?;
        let mut net = Self::zeros(config);
        for w in net.w1.iter_mut().chain(net.w2.iter_mut()) {
            *w = read_f64(&mut input)?;
        }
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(HrlError::Format("trailing bytes after checkpoint weights".into()));
        }
        Ok(net)
    }

    /// JSON sidecar describing a binary checkpoint.
    pub fn manifest(&self, weights_file: &str) -> CheckpointManifest {
        CheckpointManifest {
            format_version: CHECKPOINT_FORMAT_VERSION,
            weights_file: weights_file.to_string(),
            state_grid: self.config.state_grid,
            state_coding: self.config.state_coding,
            goal_grid: self.config.goal_grid,
            hidden_per_row: self.hidden(),
            actions: Action::COUNT,
            k: self.k(),
            state_sigma: self.state_coder.sigma(),
            goal_sigma: self.goal_coder.sigma(),
            gate_threshold: self.config.gate_threshold,
            w1_len: self.w1.len(),
            w2_len: self.w2.len(),
            byte_order: "little-endian".into(),
            float: "f64".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub weights_file: String,
    pub state_grid: [usize; 2],
    pub state_coding: StateCoding,
    pub goal_grid: [usize; 2],
    pub hidden_per_row: usize,
    pub actions: usize,
    pub k: usize,
    pub state_sigma: f64,
    pub goal_sigma: f64,
    pub gate_threshold: f64,
    pub w1_len: usize,
    pub w2_len: usize,
    pub byte_order: String,
    pub float: String,
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators let the compiler vectorize without reassociation
    let mut acc = [0.0f64; 4];
    let (ac, ar) = a.split_at(a.len() / 4 * 4);
    let (bc, br) = b.split_at(ac.len());
    for (x, y) in ac.chunks_exact(4).zip(bc.chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ar.iter().zip(br) {
        s += x * y;
    }
    s
}
