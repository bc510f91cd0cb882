// SPDX-License-Identifier: Apache-2.0

use crate::error::ConfigError;
use serde::{Deserialize, Serialize};

/// Clocking, attacker model, construction targets and solver knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    /// Clock period.
    pub period: f64,
    /// Attacker delay inaccuracy.
    pub tau: f64,
    /// Process/voltage/temperature margin.
    pub delta: f64,
    pub t_su: f64,
    pub t_h: f64,
    pub t_cq: f64,
    /// Target number of wave-pipelined false paths.
    pub n_wpf: usize,
    /// Target number of wave-pipelined true paths.
    pub n_wpt: usize,
    /// Flip-flop blocking distance; `None` means ten times the minimum
    /// pairwise distance.
    pub dis_t: Option<f64>,
    pub path_sample_limit: usize,
    pub fanio_threshold: usize,
    /// Maximum inserted delay per gate, in time units.
    pub xi_max: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub warmup_cycles: usize,
    pub big_m: f64,
    /// Paths sampled per flip-flop side when screening.
    pub screen_limit: usize,
    /// Branch-and-bound node budget per model.
    pub node_limit: usize,
    /// Nodes without incumbent improvement before the search stops; zero
    /// disables the check.
    pub stall_limit: usize,
    /// Repair iterations before a site is abandoned.
    pub repair_iters: usize,
    /// Largest region (in gates) handed to a construction model.
    pub region_cap: usize,
    /// Safety margin kept inside every timing window by the construction.
    pub margin: f64,
    /// Extra trim of the two-wave window inside the construction models,
    /// lower end then upper end. Set by the construction when lookup-mode
    /// delays drift from typical ones.
    pub band_trim: (f64, f64),
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            period: 10.0,
            tau: 0.2,
            delta: 0.15,
            t_su: 0.1,
            t_h: 0.05,
            t_cq: 0.1,
            n_wpf: 3,
            n_wpt: 3,
            dis_t: None,
            path_sample_limit: 500,
            fanio_threshold: 30,
            xi_max: 3.0,
            alpha: 1.0,
            beta: 0.1,
            gamma: 0.5,
            warmup_cycles: 2,
            big_m: 100.0,
            screen_limit: 200,
            node_limit: 4000,
            stall_limit: 200,
            repair_iters: 8,
            region_cap: 60,
            margin: 0.01,
            band_trim: (0.0, 0.0),
        }
    }
}

impl TimingConfig {
    pub fn parse(text: &str) -> Result<TimingConfig, ConfigError> {
        let cfg: TimingConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_document(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau must lie in (0,1)");
        }
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return bad("delta must lie in [0,1)");
        }
        if self.period <= self.t_su + self.t_h {
            return bad("period must exceed t_su + t_h");
        }
        if [self.t_su, self.t_h, self.t_cq].iter().any(|&t| t < 0.0) {
            return bad("flip-flop times must be non-negative");
        }
        if !(self.alpha >= self.gamma && self.gamma >= self.beta && self.beta > 0.0) {
            return bad("weights must satisfy alpha >= gamma >= beta > 0");
        }
        if self.big_m < 4.0 * self.period {
            return bad("big_m must be at least four clock periods");
        }
        if self.xi_max < 0.0 {
            return bad("xi_max must be non-negative");
        }
        Ok(())
    }

    /// Two-wave window used by the construction models.
    pub fn model_band(&self) -> (f64, f64) {
        let (lo, hi) = self.wp_band();
        (lo + self.margin + self.band_trim.0, hi - self.margin - self.band_trim.1)
    }

    /// Bounds on a two-wave arrival: PVT window intersected with the gray
    /// region of both the arrival and the arrival plus setup time.
    pub fn wp_band(&self) -> (f64, f64) {
        let t = self.period;
        let lo = ((t + self.t_h) / (1.0 - self.delta)).max(t / (1.0 + self.tau));
        let hi = ((2.0 * t - self.t_su) / (1.0 + self.delta)).min(t / (1.0 - self.tau) - self.t_su);
        (lo, hi)
    }
}
