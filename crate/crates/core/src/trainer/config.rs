use serde::{Deserialize, Serialize};

use crate::agents::EpsilonSchedule;
use crate::approx::{MetaDiscount, NetConfig};
use crate::discovery::{AnomalyParams, KMeansParams};
use crate::env::{generate_layout_with, Layout, LayoutOptions, Placement, Variant, DEFAULT_MAX_STEPS};

/// Everything a training run depends on. Two runs with equal configs
/// produce identical artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub variant: Variant,
    pub layout_seed: u64,
    pub placement: Placement,
    /// `[width, height]`; the variant's default size when absent.
    pub grid: Option<[i32; 2]>,
    /// Task episodes `M`.
    pub episodes: u64,
    /// Step cap per task episode.
    pub max_steps: u32,
    /// Step cap per controller attempt at one subgoal.
    pub segment_steps: u32,
    /// Number of centroid subgoals `K`.
    pub k: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub gamma: f64,
    pub epsilon1: EpsilonSchedule,
    pub epsilon2: EpsilonSchedule,
    /// Environment steps between K-means refits `N`.
    pub discovery_interval: u64,
    pub agent_capacity: usize,
    pub controller_capacity: usize,
    pub meta_capacity: usize,
    /// Controller minibatch `J1`.
    pub batch1: usize,
    /// Meta-controller minibatch `J2`.
    pub batch2: usize,
    pub pretrain_episodes: u64,
    /// Random-walk episodes `M'` collected before the first discovery.
    pub walk_episodes: u64,
    pub meta_discount_mode: MetaDiscount,
    pub net: NetConfig,
    pub anomaly: AnomalyParams,
    pub kmeans: KMeansParams,
    /// Episodes between greedy evaluations; 0 disables them.
    pub eval_interval: u64,
    pub eval_episodes: u64,
    /// Greedy episodes evaluated after training; 0 skips.
    pub final_eval_episodes: u64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: Variant::FourRoomKeyLock,
            layout_seed: 0,
            placement: Placement::Hard,
            grid: None,
            episodes: 50_000,
            max_steps: DEFAULT_MAX_STEPS,
            segment_steps: 50,
            k: 4,
            alpha1: 0.001,
            alpha2: 0.001,
            gamma: 0.99,
            epsilon1: EpsilonSchedule::constant(0.2),
            epsilon2: EpsilonSchedule::constant(0.2),
            discovery_interval: 10_000,
            agent_capacity: 1_000_000,
            controller_capacity: 1_000_000,
            meta_capacity: 50_000,
            batch1: 32,
            batch2: 32,
            pretrain_episodes: 200,
            walk_episodes: 100,
            meta_discount_mode: MetaDiscount::Effective,
            net: NetConfig::default(),
            anomaly: AnomalyParams::default(),
            kmeans: KMeansParams::default(),
            eval_interval: 1_000,
            eval_episodes: 100,
            final_eval_episodes: 1_000,
            seed: 1,
        }
    }
}

/// A rejected configuration value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub value: String,
    pub allowed: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid value for `{}`: {} (allowed: {})", self.key, self.value, self.allowed)
    }
}

impl std::error::Error for ConfigError {}

fn bad(key: &str, value: impl std::fmt::Display, allowed: &str) -> ConfigError {
    ConfigError { key: key.into(), value: value.to_string(), allowed: allowed.into() }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive: [(&str, u64); 9] = [
            ("max_steps", self.max_steps as u64),
            ("segment_steps", self.segment_steps as u64),
            ("k", self.k as u64),
            ("discovery_interval", self.discovery_interval),
            ("agent_capacity", self.agent_capacity as u64),
            ("controller_capacity", self.controller_capacity as u64),
            ("meta_capacity", self.meta_capacity as u64),
            ("batch1", self.batch1 as u64),
            ("batch2", self.batch2 as u64),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(bad(key, v, "integer >= 1"));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(bad("gamma", self.gamma, "[0, 1]"));
        }
        for (key, v) in [("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(key, v, "(0, inf)"));
            }
        }
        for (key, e) in [("epsilon1", &self.epsilon1), ("epsilon2", &self.epsilon2)] {
            for (part, v) in [("start", e.start), ("end", e.end)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(bad(&format!("{key}.{part}"), v, "[0, 1]"));
                }
            }
            if e.end > e.start {
                return Err(bad(&format!("{key}.end"), e.end, "[0, epsilon start]"));
            }
        }
        if let Some([w, h]) = self.grid {
            let min = if self.variant.is_four_room() { 5 } else { 2 };
            if w < min || h < min {
                return Err(bad("grid", format!("[{w}, {h}]"), &format!("both sides >= {min}")));
            }
        }
        if let Err(msg) = self.net.validate() {
            return Err(bad("net", msg, "see net defaults"));
        }
        if self.anomaly.positive_threshold <= 0.0 || !self.anomaly.positive_threshold.is_finite() {
            return Err(bad("anomaly.positive_threshold", self.anomaly.positive_threshold, "(0, inf)"));
        }
        if self.kmeans.max_iters == 0 {
            return Err(bad("kmeans.max_iters", 0, "integer >= 1"));
        }
        if self.eval_interval > 0 && self.eval_episodes == 0 {
            return Err(bad("eval_episodes", 0, "integer >= 1 when eval_interval > 0"));
        }
        Ok(())
    }

    pub fn layout_options(&self) -> LayoutOptions {
        let mut opts = LayoutOptions::for_variant(self.variant);
        if let Some([w, h]) = self.grid {
            opts.width = w;
            opts.height = h;
        }
        opts.placement = self.placement;
        opts
    }

    pub fn layout(&self) -> Layout {
        generate_layout_with(self.variant, &self.layout_options(), self.layout_seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn gamma_range_is_named() {
        let c = TrainConfig { gamma: 1.5, ..TrainConfig::default() };
        let err = c.validate().unwrap_err();
        assert_eq!(err.key, "gamma");
        assert!(err.to_string().contains("[0, 1]"));
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let c = TrainConfig { k: 6, seed: 9, ..TrainConfig::default() };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<TrainConfig>(&text).unwrap(), c);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"kk": 3}"#).is_err());
        assert_eq!(serde_json::from_str::<TrainConfig>("{}").unwrap(), TrainConfig::default());
    }
}
