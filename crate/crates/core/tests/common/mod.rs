//! Oracles shared by the integration tests and the acceptance report.
#![allow(dead_code)]

use hrl_core::agents::{EpsilonSchedule, SarsaBaseline};
use hrl_core::approx::{sigmoid, MetaDiscount, MetaQTable, NetConfig, StateCoding, StateGoalNet, KWTA_SUPPRESSED};
use hrl_core::discovery::{kmeans_fit, KMeansParams, KMeansState};
use hrl_core::env::{Action, GridPos, Point};
use hrl_core::memory::MetaTransition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub mod props;
pub mod rooms;

/// Row contribution to `q`, written straight from the forward pseudocode
/// with the winners of the row given.
pub fn reference_row(net: &StateGoalNet, row: usize, code: &[f64], winners: &[usize]) -> [f64; Action::COUNT] {
    let (w1, w2) = (net.w1(), net.w2());
    let mut q = [0.0; Action::COUNT];
    for j in 0..net.hidden() {
        let mut x = 0.0;
        for (i, s) in code.iter().enumerate() {
            x += w1[net.w1_index(row, j, i)] * s;
        }
        let h = if winners.contains(&j) { sigmoid(x) } else { sigmoid(KWTA_SUPPRESSED) };
        for (a, qa) in q.iter_mut().enumerate() {
            *qa += w2[net.w2_index(row, a, j)] * h;
        }
    }
    q
}

/// Per-unit terms `w2[a, j] h_j` of one row's output for action `a`.
pub fn reference_terms(net: &StateGoalNet, row: usize, code: &[f64], winners: &[usize], a: usize) -> Vec<f64> {
    let (w1, w2) = (net.w1(), net.w2());
    (0..net.hidden())
        .map(|j| {
            let x: f64 = code.iter().enumerate().map(|(i, s)| w1[net.w1_index(row, j, i)] * s).sum();
            let h = if winners.contains(&j) { sigmoid(x) } else { sigmoid(KWTA_SUPPRESSED) };
            w2[net.w2_index(row, a, j)] * h
        })
        .collect()
}

pub fn reference_q(net: &StateGoalNet, code: &[f64], rows: &[(usize, Vec<usize>)]) -> [f64; Action::COUNT] {
    let mut q = [0.0; Action::COUNT];
    for (row, winners) in rows {
        for (t, v) in q.iter_mut().zip(reference_row(net, *row, code, winners)) {
            *t += v;
        }
    }
    q
}

#[derive(Debug, Clone, Copy)]
pub struct GradReport {
    pub max_rel_err: f64,
    pub checked: usize,
}

pub const FD_STEP: f64 = 1e-6;
/// Denominator floor of the relative error, for entries whose true
/// gradient is too small for a step of `FD_STEP` to resolve.
pub const REL_FLOOR: f64 = 1e-6;

fn random_config(rng: &mut ChaCha8Rng) -> NetConfig {
    let mut c = NetConfig { init_scale: 0.5, ..NetConfig::default() };
    if rng.gen_bool(0.5) {
        c.state_grid = [rng.gen_range(4..=20), rng.gen_range(4..=20)];
        c.state_coding = StateCoding::Separable;
    } else {
        c.state_grid = [rng.gen_range(3..=6), rng.gen_range(3..=6)];
        c.state_coding = StateCoding::Grid;
    }
    c.hidden_per_row = rng.gen_range(10..=50);
    c.k = rng.gen_range(1..=c.hidden_per_row / 2);
    c
}

fn set_param(net: &mut StateGoalNet, first_layer: bool, idx: usize, v: f64) {
    if first_layer {
        net.w1_mut()[idx] = v;
    } else {
        net.w2_mut()[idx] = v;
    }
}

/// Analytic gradient of `½(y - q_a)²` from one backprop step against
/// central differences with the kWTA winners held fixed.
pub fn gradient_check(seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = random_config(&mut rng);
    let net = StateGoalNet::new(config, &mut rng);
    let s: Point = [rng.gen(), rng.gen()];
    let g: Point = [rng.gen(), rng.gen()];
    let a = Action::from_index(rng.gen_range(0..Action::COUNT));
    let pass = net.forward(s, g).expect("goal inside the unit square opens a gate");
    let y = pass.q[a.index()] + rng.gen_range(-1.0..1.0);
    let delta = y - pass.q[a.index()];

    let mut stepped = net.clone();
    stepped.backprop_update(&pass, a, delta, 1.0);

    let rows: Vec<(usize, Vec<usize>)> = pass.rows.iter().map(|r| (r.row, r.winners.clone())).collect();
    let code = &pass.state_code;
    let base: Vec<Vec<f64>> = rows.iter().map(|(r, w)| reference_terms(&net, *r, code, w, a.index())).collect();
    // change of q_a when only row `k` differs, summed term by term so that
    // unchanged units cancel exactly
    let shift = |n: &StateGoalNet, k: usize| -> f64 {
        let (row, winners) = &rows[k];
        reference_terms(n, *row, code, winners, a.index()).iter().zip(&base[k]).map(|(t, b)| t - b).sum()
    };

    let mut params: Vec<(usize, bool, usize)> = Vec::new();
    for (k, (row, winners)) in rows.iter().enumerate() {
        for act in 0..Action::COUNT {
            for j in 0..net.hidden() {
                params.push((k, false, net.w2_index(*row, act, j)));
            }
        }
        for &j in winners {
            for i in 0..net.inputs() {
                params.push((k, true, net.w1_index(*row, j, i)));
            }
        }
        // a few loser inputs, whose gradient must vanish
        for _ in 0..5 {
            let j = rng.gen_range(0..net.hidden());
            params.push((k, true, net.w1_index(*row, j, rng.gen_range(0..net.inputs()))));
        }
    }

    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for &(k, first, idx) in &params {
        let (w, after) = if first { (net.w1()[idx], stepped.w1()[idx]) } else { (net.w2()[idx], stepped.w2()[idx]) };
        let analytic = -(after - w);
        set_param(&mut probe, first, idx, w + FD_STEP);
        let up = shift(&probe, k);
        set_param(&mut probe, first, idx, w - FD_STEP);
        let down = shift(&probe, k);
        set_param(&mut probe, first, idx, w);
        // ½(δ - up)² - ½(δ - down)², factored to avoid cancellation
        let numeric = 0.5 * (down - up) * (2.0 * delta - up - down) / (2.0 * FD_STEP);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR);
        worst = worst.max(rel);
    }
    GradReport { max_rel_err: worst, checked: params.len() }
}

// ---- meta-controller TD vs value iteration ----

/// Outcome of choosing subgoal `g` in abstract state `i`.
#[derive(Debug, Clone, Copy)]
struct MetaEdge {
    ret: f64,
    steps: u32,
    /// `None` ends the episode.
    next: Option<usize>,
}

/// Two abstract states (away from the key, at the key) and two subgoals
/// (key, lock). The lock pays only from the key state.
fn key_lock_meta_mdp() -> [[MetaEdge; 2]; 2] {
    let e = |ret, steps, next| MetaEdge { ret, steps, next };
    [[e(10.0, 6, Some(1)), e(-2.0, 9, Some(0))], [e(0.0, 6, Some(0)), e(40.0, 12, None)]]
}

fn discount(gamma: f64, steps: u32, mode: MetaDiscount) -> f64 {
    match mode {
        MetaDiscount::Effective => gamma.powi(steps as i32),
        MetaDiscount::Literal => gamma,
    }
}

fn meta_value_iteration(mdp: &[[MetaEdge; 2]; 2], gamma: f64, mode: MetaDiscount) -> [[f64; 2]; 2] {
    let mut q = [[0.0f64; 2]; 2];
    for _ in 0..100_000 {
        let v = [q[0][0].max(q[0][1]), q[1][0].max(q[1][1])];
        let mut next = q;
        for i in 0..2 {
            for g in 0..2 {
                let e = mdp[i][g];
                next[i][g] = e.ret + e.next.map_or(0.0, |j| discount(gamma, e.steps, mode) * v[j]);
            }
        }
        let change = (0..4).map(|k| (next[k / 2][k % 2] - q[k / 2][k % 2]).abs()).fold(0.0, f64::max);
        q = next;
        if change < 1e-13 {
            break;
        }
    }
    q
}

#[derive(Debug, Clone, Copy)]
pub struct MetaOracleReport {
    pub mode: MetaDiscount,
    pub max_abs_err: f64,
    pub greedy_agrees: bool,
}

/// Tabular meta updates with sampled pairs against value iteration, for
/// both discount modes.
pub fn meta_td_vs_value_iteration() -> Vec<MetaOracleReport> {
    let mdp = key_lock_meta_mdp();
    let gamma = 0.95;
    let index_of = |p: GridPos| p.x as usize;
    [MetaDiscount::Effective, MetaDiscount::Literal]
        .into_iter()
        .map(|mode| {
            let exact = meta_value_iteration(&mdp, gamma, mode);
            let mut table = MetaQTable::new(2);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..200_000 {
                let (i, g) = (rng.gen_range(0..2), rng.gen_range(0..2));
                let e = mdp[i][g];
                let mt = MetaTransition {
                    s0: GridPos::new(i as i32, 0),
                    g,
                    ret: e.ret,
                    s_end: GridPos::new(e.next.unwrap_or(0) as i32, 0),
                    end_terminal: e.next.is_none(),
                    steps: e.steps,
                };
                table.update(&mt, 0.05, gamma, mode, index_of).unwrap();
            }
            let mut max_abs_err: f64 = 0.0;
            let mut greedy_agrees = true;
            for i in 0..2 {
                for g in 0..2 {
                    max_abs_err = max_abs_err.max((table.get(i, g).unwrap() - exact[i][g]).abs());
                }
                let learned = if table.get(i, 1).unwrap() > table.get(i, 0).unwrap() { 1 } else { 0 };
                let best = if exact[i][1] > exact[i][0] { 1 } else { 0 };
                greedy_agrees &= learned == best;
            }
            MetaOracleReport { mode, max_abs_err, greedy_agrees }
        })
        .collect()
}

// ---- SARSA vs value iteration on a 3x3 room ----

const ROOM: i32 = 3;
const GOAL: GridPos = GridPos { x: 2, y: 2 };
const BUMP: f64 = -2.0;
const GOAL_REWARD: f64 = 1.0;

fn room_step(s: GridPos, a: Action) -> (GridPos, f64) {
    let n = s.offset(a);
    if n.x < 0 || n.y < 0 || n.x >= ROOM || n.y >= ROOM {
        (s, BUMP)
    } else if n == GOAL {
        (n, GOAL_REWARD)
    } else {
        (n, 0.0)
    }
}

fn room_cells() -> Vec<GridPos> {
    (0..ROOM).flat_map(|y| (0..ROOM).map(move |x| GridPos::new(x, y))).collect()
}

/// Optimal action sets by value iteration.
fn room_optimal_actions(gamma: f64) -> Vec<(GridPos, Vec<Action>)> {
    let cells = room_cells();
    let idx = |p: GridPos| (p.y * ROOM + p.x) as usize;
    let mut v = vec![0.0; cells.len()];
    let backup = |v: &[f64], s: GridPos, a: Action| {
        let (n, r) = room_step(s, a);
        r + if n == GOAL { 0.0 } else { gamma * v[idx(n)] }
    };
    for _ in 0..10_000 {
        let next: Vec<f64> =
            cells
                .iter()
                .map(|&s| {
                    if s == GOAL {
                        0.0
                    } else {
                        Action::ALL.iter().map(|&a| backup(&v, s, a)).fold(f64::MIN, f64::max)
                    }
                })
                .collect();
        v = next;
    }
    cells
        .into_iter()
        .filter(|&s| s != GOAL)
        .map(|s| {
            let qs: Vec<f64> = Action::ALL.iter().map(|&a| backup(&v, s, a)).collect();
            let best = qs.iter().copied().fold(f64::MIN, f64::max);
            let acts = Action::ALL.iter().zip(&qs).filter(|(_, &q)| best - q < 1e-9).map(|(&a, _)| a).collect();
            (s, acts)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct SarsaOracleReport {
    pub states: usize,
    pub agreement: f64,
}

/// 5000 ε-greedy SARSA episodes, then greedy actions against the
/// value-iteration optimal sets.
pub fn sarsa_vs_value_iteration(seed: u64) -> SarsaOracleReport {
    let gamma = 0.9;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = StateGoalNet::new(NetConfig::default(), &mut rng);
    let mut agent = SarsaBaseline::new(net, EpsilonSchedule::constant(0.2), 0.05, gamma, (ROOM, ROOM)).unwrap();
    let starts: Vec<GridPos> = room_cells().into_iter().filter(|&c| c != GOAL).collect();
    for _ in 0..5000 {
        let mut s = starts[rng.gen_range(0..starts.len())];
        let mut a = agent.act(s, &mut rng);
        for _ in 0..50 {
            let (n, r) = room_step(s, a);
            let done = n == GOAL;
            let a2 = agent.act(n, &mut rng);
            agent.sarsa_update(s, a, r, n, a2, done);
            if done {
                break;
            }
            s = n;
            a = a2;
        }
    }
    let optimal = room_optimal_actions(gamma);
    let hits = optimal.iter().filter(|(s, acts)| acts.contains(&agent.greedy_action(*s))).count();
    SarsaOracleReport { states: optimal.len(), agreement: hits as f64 / optimal.len() as f64 }
}

// ---- K-means on Gaussian blobs ----

#[derive(Debug, Clone)]
pub struct BlobReport {
    pub sigma: f64,
    /// Largest distance from a true mean to its matched centroid, in units
    /// of the blob standard deviation.
    pub max_err_in_sigmas: f64,
}

pub fn kmeans_blob_errors(seed: u64) -> BlobReport {
    let means: [Point; 4] = [[0.2, 0.25], [0.75, 0.2], [0.3, 0.8], [0.8, 0.7]];
    let sigma = 0.04;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut points = Vec::new();
    for m in &means {
        for _ in 0..250 {
            points.push([m[0] + noise.sample(&mut rng), m[1] + noise.sample(&mut rng)]);
        }
    }
    let (fit, _) = kmeans_fit(&points, &KMeansState::new(4), &KMeansParams::default(), &mut rng).unwrap();
    let mut worst: f64 = 0.0;
    for m in &means {
        let d = fit
            .centroids
            .iter()
            .map(|c| ((c[0] - m[0]).powi(2) + (c[1] - m[1]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(d / sigma);
    }
    BlobReport { sigma, max_err_in_sigmas: worst }
}

// ---- intrinsic reward ----

/// `(attained, r, intrinsic_reward, expected)` for every case.
pub fn intrinsic_cases() -> Vec<(bool, f64, f64, f64)> {
    let mut out = Vec::new();
    for attained in [false, true] {
        for r in [-2.0, -1.0, 0.0, 10.0, 40.0] {
            let want = if attained {
                1.0
            } else if r < -1.0 {
                r
            } else {
                -1.0
            };
            out.push((attained, r, hrl_core::agents::intrinsic_reward(attained, r), want));
        }
    }
    out
}
