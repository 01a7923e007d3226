//! Lloyd's K-means over weighted 2-D points, warm-started from the previous
//! centroids when they exist.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::Point;
use crate::error::{contract, HrlError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansState {
    pub k: usize,
    /// Empty until the first successful fit.
    pub centroids: Vec<Point>,
    /// Total point weight assigned to each centroid by the last fit.
    pub counts: Vec<f64>,
}

impl KMeansState {
    pub fn new(k: usize) -> Self {
        assert!(k > 0, "K must be positive");
        Self { k, centroids: Vec::new(), counts: Vec::new() }
    }

    pub fn is_initialized(&self) -> bool {
        self.centroids.len() == self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KMeansParams {
    pub max_iters: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
    /// Independent k-means++ seedings tried on a cold start; the lowest
    /// objective wins.
    pub restarts: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self { max_iters: 100, tol: 1e-9, restarts: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitReport {
    pub cold_start: bool,
    pub iterations: usize,
    /// Objective after every assignment step, first to last.
    pub objective_history: Vec<f64>,
    pub reseeds: usize,
}

impl FitReport {
    pub fn objective(&self) -> f64 {
        self.objective_history.last().copied().unwrap_or(0.0)
    }
}

#[inline]
pub fn dist2(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Nearest centroid, ties to the lowest index. The caller guarantees a
/// non-empty slice.
fn nearest(centroids: &[Point], p: Point) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &c) in centroids.iter().enumerate() {
        let d = dist2(c, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Index of the centroid closest to `p` (Euclidean; ties to the lowest index).
pub fn assign_cluster(state: &KMeansState, p: Point) -> Result<usize> {
    if state.centroids.is_empty() {
        return contract("assign_cluster before any K-means fit");
    }
    Ok(nearest(&state.centroids, p).0)
}

pub fn kmeans_fit<R: Rng + ?Sized>(
    points: &[Point],
    state: &KMeansState,
    params: &KMeansParams,
    rng: &mut R,
) -> Result<(KMeansState, FitReport)> {
    let weights = vec![1.0; points.len()];
    kmeans_fit_weighted(points, &weights, state, params, rng)
}

/// Fits `state.k` centroids. Warm-starts from `state.centroids` when present,
/// otherwise runs k-means++ seeding `params.restarts` times. A cold start
/// with fewer than `k` points returns [`HrlError::NotReady`].
pub fn kmeans_fit_weighted<R: Rng + ?Sized>(
    points: &[Point],
    weights: &[f64],
    state: &KMeansState,
    params: &KMeansParams,
    rng: &mut R,
) -> Result<(KMeansState, FitReport)> {
    assert_eq!(points.len(), weights.len());
    let k = state.k;
    let support = weights.iter().filter(|&&w| w > 0.0).count();
    if state.is_initialized() {
        if support == 0 {
            return Err(HrlError::NotReady("no points to cluster".into()));
        }
        let (centroids, report) = lloyd(points, weights, state.centroids.clone(), params, false);
        return Ok((finish(points, weights, k, centroids), report));
    }
    if support < k {
        return Err(HrlError::NotReady(format!("{support} points for K={k}")));
    }
    let mut best: Option<(Vec<Point>, FitReport)> = None;
    for _ in 0..params.restarts.max(1) {
        let seeds = plus_plus(points, weights, k, rng);
        let (centroids, report) = lloyd(points, weights, seeds, params, true);
        if best.as_ref().is_none_or(|(_, b)| report.objective() < b.objective()) {
            best = Some((centroids, report));
        }
    }
    let (centroids, report) = best.expect("at least one restart");
    Ok((finish(points, weights, k, centroids), report))
}

fn finish(points: &[Point], weights: &[f64], k: usize, centroids: Vec<Point>) -> KMeansState {
    let mut counts = vec![0.0; k];
    for (p, w) in points.iter().zip(weights) {
        counts[nearest(&centroids, *p).0] += w;
    }
    KMeansState { k, centroids, counts }
}

fn plus_plus<R: Rng + ?Sized>(points: &[Point], weights: &[f64], k: usize, rng: &mut R) -> Vec<Point> {
    let mut centers = Vec::with_capacity(k);
    centers.push(points[weighted_pick(weights, rng)]);
    let mut d2: Vec<f64> = points.iter().map(|&p| dist2(p, centers[0])).collect();
    while centers.len() < k {
        let scores: Vec<f64> = d2.iter().zip(weights).map(|(d, w)| d * w).collect();
        let idx =
            if scores.iter().sum::<f64>() > 0.0 { weighted_pick(&scores, rng) } else { weighted_pick(weights, rng) };
        let c = points[idx];
        centers.push(c);
        for (d, &p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, c));
        }
    }
    centers
}

fn weighted_pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if x < w {
                return i;
            }
            x -= w;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn lloyd(
    points: &[Point],
    weights: &[f64],
    mut centroids: Vec<Point>,
    params: &KMeansParams,
    cold_start: bool,
) -> (Vec<Point>, FitReport) {
    let k = centroids.len();
    let mut report = FitReport { cold_start, ..FitReport::default() };
    let mut assign = vec![0usize; points.len()];
    let mut dists = vec![0.0; points.len()];
    loop {
        let mut objective = 0.0;
        for (i, (&p, &w)) in points.iter().zip(weights).enumerate() {
            let (c, d) = nearest(&centroids, p);
            assign[i] = c;
            dists[i] = d;
            objective += w * d;
        }
        if let Some(&prev) = report.objective_history.last() {
            debug_assert!(objective <= prev * (1.0 + 1e-12) + 1e-12, "K-means objective rose");
        }
        report.objective_history.push(objective);
        if report.iterations >= params.max_iters {
            break;
        }
        report.iterations += 1;

        let mut sums = vec![[0.0f64; 3]; k];
        for (i, (&p, &w)) in points.iter().zip(weights).enumerate() {
            let s = &mut sums[assign[i]];
            s[0] += w * p[0];
            s[1] += w * p[1];
            s[2] += w;
        }
        let mut next = centroids.clone();
        let mut taken = vec![false; points.len()];
        for c in 0..k {
            if sums[c][2] > 0.0 {
                next[c] = [sums[c][0] / sums[c][2], sums[c][1] / sums[c][2]];
            } else {
                // empty cluster: move it onto the worst-served point
                let far = (0..points.len())
                    .filter(|&i| weights[i] > 0.0 && !taken[i])
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
                if let Some(i) = far {
                    taken[i] = true;
                    next[c] = points[i];
                    report.reseeds += 1;
                }
            }
        }
        let shift = centroids.iter().zip(&next).map(|(a, b)| dist2(*a, *b).sqrt()).fold(0.0, f64::max);
        centroids = next;
        if shift <= params.tol {
            // one more assignment pass so the history ends on the final centroids
            let objective: f64 = points.iter().zip(weights).map(|(&p, &w)| w * nearest(&centroids, p).1).sum();
            report.objective_history.push(objective);
            break;
        }
    }
    (centroids, report)
}
