use serde::{Deserialize, Serialize};

use crate::env::{normalize_in, GridPos};
use crate::memory::Transition;

use super::kmeans::dist2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnomalyParams {
    /// Rewards at or above this are anomalous. Negative rewards never are.
    pub positive_threshold: f64,
    /// When set, a jump `‖s' - s‖` (normalized units) at or above this is
    /// anomalous too.
    pub feature_distance_threshold: Option<f64>,
    /// Anomalous states closer than this (normalized units) count as one.
    /// `None` means one cell width.
    pub merge_radius: Option<f64>,
}

impl Default for AnomalyParams {
    fn default() -> Self {
        Self { positive_threshold: 1.0, feature_distance_threshold: None, merge_radius: None }
    }
}

/// Flags transitions with rare large positive rewards (and, optionally,
/// large state jumps), remembering which states were already promoted.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyDetector {
    pub positive_threshold: f64,
    pub feature_distance_threshold: Option<f64>,
    pub merge_radius: f64,
    grid: (i32, i32),
    registry: Vec<GridPos>,
}

impl AnomalyDetector {
    pub fn new(params: &AnomalyParams, grid: (i32, i32)) -> Self {
        let cell = 1.0 / (grid.0 - 1).max(1) as f64;
        Self {
            positive_threshold: params.positive_threshold,
            feature_distance_threshold: params.feature_distance_threshold,
            merge_radius: params.merge_radius.unwrap_or(cell),
            grid,
            registry: Vec::new(),
        }
    }

    /// Stateless test; repeated visits to a known anomaly still match.
    pub fn is_anomalous(&self, t: &Transition) -> bool {
        if t.r >= self.positive_threshold {
            return true;
        }
        match self.feature_distance_threshold {
            Some(limit) => {
                let jump = dist2(normalize_in(self.grid, t.s), normalize_in(self.grid, t.s_next)).sqrt();
                jump >= limit
            }
            None => false,
        }
    }

    /// True only the first time an anomalous next state (up to the merge
    /// radius) is seen.
    pub fn detect_anomaly(&mut self, t: &Transition) -> bool {
        if !self.is_anomalous(t) || self.is_registered(t.s_next) {
            return false;
        }
        self.registry.push(t.s_next);
        true
    }

    pub fn is_registered(&self, cell: GridPos) -> bool {
        let p = normalize_in(self.grid, cell);
        self.registry.iter().any(|&c| dist2(normalize_in(self.grid, c), p).sqrt() < self.merge_radius)
    }

    pub fn registry(&self) -> &[GridPos] {
        &self.registry
    }

    /// Marks `cell` as already promoted.
    pub fn register(&mut self, cell: GridPos) {
        if !self.is_registered(cell) {
            self.registry.push(cell);
        }
    }
}
