//! Subgoal discovery: reward-anomaly detection plus incremental K-means over
//! the next states stored in the agent memory.

mod anomaly;
mod kmeans;
mod subgoals;

use std::collections::BTreeMap;

use rand::Rng;

pub use anomaly::{AnomalyDetector, AnomalyParams};
pub use kmeans::{assign_cluster, dist2, kmeans_fit, kmeans_fit_weighted, FitReport, KMeansParams, KMeansState};
pub use subgoals::{Subgoal, SubgoalKind, SubgoalSet, SUBGOALS_FORMAT_VERSION};

use crate::env::GridPos;
use crate::error::{HrlError, Result};
use crate::memory::{ReplayBuffer, Transition};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscoveryReport {
    /// Subgoal ids appended as anomalies by this call.
    pub new_anomalies: Vec<usize>,
    /// Transitions dropped from the memory as anomalous.
    pub removed: usize,
    /// `None` when K-means was not ready (too few distinct cells).
    pub fit: Option<FitReport>,
}

/// `s'` cells of `memory` with their multiplicities, in cell order.
pub fn next_state_histogram(memory: &ReplayBuffer<Transition>) -> Vec<(GridPos, f64)> {
    let mut counts: BTreeMap<(i32, i32), f64> = BTreeMap::new();
    for t in memory.iter() {
        *counts.entry((t.s_next.y, t.s_next.x)).or_default() += 1.0;
    }
    counts.into_iter().map(|((y, x), c)| (GridPos::new(x, y), c)).collect()
}

/// One pass of the discovery loop over `memory`: anomalous transitions are
/// promoted to subgoals and removed, then the centroids are refit on the
/// remaining next states and written back into `gset`.
pub fn discover<R: Rng + ?Sized>(
    memory: &mut ReplayBuffer<Transition>,
    detector: &mut AnomalyDetector,
    kstate: &mut KMeansState,
    gset: &mut SubgoalSet,
    params: &KMeansParams,
    rng: &mut R,
) -> Result<DiscoveryReport> {
    let mut report = DiscoveryReport::default();
    for t in memory.iter() {
        if detector.detect_anomaly(t) {
            if let Some(id) = gset.add_anomaly(t.s_next) {
                report.new_anomalies.push(id);
            }
        }
    }
    report.removed = memory.remove_if(|t| detector.is_anomalous(t));

    let hist = next_state_histogram(memory);
    let points: Vec<_> = hist.iter().map(|&(c, _)| gset.normalize(c)).collect();
    let weights: Vec<_> = hist.iter().map(|&(_, w)| w).collect();
    match kmeans_fit_weighted(&points, &weights, kstate, params, rng) {
        Ok((fitted, fit)) => {
            gset.set_centroids(&fitted.centroids)?;
            *kstate = fitted;
            report.fit = Some(fit);
        }
        Err(HrlError::NotReady(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(report)
}
