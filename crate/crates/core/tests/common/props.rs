//! Property checks shared by the proptest suite and the acceptance report.

use hrl_core::agents::EpsilonSchedule;
use hrl_core::approx::{kwta, NetConfig, StateGoalNet, KWTA_SUPPRESSED};
use hrl_core::env::{Action, Point};
use hrl_core::memory::ReplayBuffer;
use hrl_core::trainer::TrainConfig;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestError, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn replay_fifo(cap: usize, items: &[u16]) -> Result<(), TestCaseError> {
    let mut b = ReplayBuffer::new(cap);
    for (n, &x) in items.iter().enumerate() {
        b.push(x);
        prop_assert_eq!(b.len(), (n + 1).min(cap));
    }
    let tail: Vec<u16> = items[items.len().saturating_sub(cap)..].to_vec();
    prop_assert_eq!(b.iter().copied().collect::<Vec<_>>(), tail);
    Ok(())
}

pub fn kwta_exact_k(net: &[f64], kseed: usize) -> Result<(), TestCaseError> {
    let k = 1 + kseed % net.len();
    let out = kwta(net, k).unwrap();
    let kept: Vec<usize> = (0..net.len()).filter(|&j| out[j] != KWTA_SUPPRESSED).collect();
    prop_assert_eq!(kept.len(), k);
    for &j in &kept {
        prop_assert_eq!(out[j], net[j]);
        for l in (0..net.len()).filter(|l| !kept.contains(l)) {
            // every winner beats every loser; equal values favor the lower index
            prop_assert!(net[j] > net[l] || (net[j] == net[l] && j < l));
        }
    }
    Ok(())
}

pub fn kwta_ties(len: usize, k: usize) -> Result<(), TestCaseError> {
    let k = k.min(len);
    let out = kwta(&vec![0.5; len], k).unwrap();
    for (j, v) in out.iter().enumerate() {
        prop_assert_eq!(*v != KWTA_SUPPRESSED, j < k);
    }
    Ok(())
}

pub fn gating_locality(seed: u64, s: Point, g: Point, a: usize, delta: f64) -> Result<(), TestCaseError> {
    let mut net = StateGoalNet::new(NetConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed));
    let before = net.clone();
    let pass = net.forward(s, g).unwrap();
    let gated = net.gate(g).unwrap();
    net.backprop_update(&pass, Action::from_index(a), delta, 0.1);
    for row in 0..net.rows() {
        for unit in 0..net.hidden() {
            for input in 0..net.inputs() {
                let i = net.w1_index(row, unit, input);
                if !gated.contains(&row) {
                    prop_assert_eq!(net.w1()[i], before.w1()[i]);
                }
            }
            for act in 0..Action::COUNT {
                let i = net.w2_index(row, act, unit);
                if !gated.contains(&row) || act != a {
                    prop_assert_eq!(net.w2()[i], before.w2()[i]);
                }
            }
        }
    }
    Ok(())
}

pub fn epsilon_monotone(start: f64, frac: f64, decay: u64, a: u64, b: u64) -> Result<(), TestCaseError> {
    let e = EpsilonSchedule::linear(start, start * frac, decay);
    let (lo, hi) = (a.min(b), a.max(b));
    prop_assert!(e.value_at(lo) >= e.value_at(hi));
    prop_assert_eq!(e.value_at(decay.max(hi)), e.end);
    prop_assert!(e.value_at(lo) <= start);
    Ok(())
}

pub fn unit_point() -> impl Strategy<Value = Point> {
    (0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(x, y)| [x, y])
}

/// Runs every property above for `cases` cases each; returns the failures.
pub fn run_all(cases: u32) -> Vec<String> {
    let mut failures = Vec::new();
    fn record<T: std::fmt::Debug>(failures: &mut Vec<String>, name: &str, r: Result<(), TestError<T>>) {
        if let Err(e) = r {
            failures.push(format!("{name}: {e}"));
        }
    }
    let runner = || TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    record(
        &mut failures,
        "replay_fifo",
        runner().run(&(1usize..40, prop::collection::vec(any::<u16>(), 0..120)), |(c, v)| replay_fifo(c, &v)),
    );
    record(
        &mut failures,
        "kwta_exact_k",
        runner().run(&(prop::collection::vec(-10.0f64..10.0, 1..80), any::<usize>()), |(n, k)| kwta_exact_k(&n, k)),
    );
    record(&mut failures, "kwta_ties", runner().run(&(2usize..40, 1usize..40), |(l, k)| kwta_ties(l, k)));
    record(
        &mut failures,
        "gating_locality",
        runner().run(&(any::<u64>(), unit_point(), unit_point(), 0usize..4, -5.0f64..5.0), |(seed, s, g, a, d)| {
            gating_locality(seed, s, g, a, d)
        }),
    );
    record(
        &mut failures,
        "epsilon_monotone",
        runner().run(&(0.0f64..=1.0, 0.0f64..=1.0, 0u64..500, 0u64..1000, 0u64..1000), |(s, f, d, a, b)| {
            epsilon_monotone(s, f, d, a, b)
        }),
    );
    failures
}

/// A run small enough to repeat in a test.
pub fn tiny_run(seed: u64) -> TrainConfig {
    TrainConfig {
        grid: Some([10, 10]),
        episodes: 20,
        max_steps: 60,
        segment_steps: 15,
        pretrain_episodes: 5,
        walk_episodes: 10,
        discovery_interval: 200,
        eval_interval: 10,
        eval_episodes: 5,
        final_eval_episodes: 10,
        seed,
        ..TrainConfig::default()
    }
}
