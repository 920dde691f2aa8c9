use std::path::Path;

use serde::{Deserialize, Serialize};

use intcorr::{Method, ScenarioConfig, SdpSettings};

use crate::HarnessError;

/// Settings of the gridless back-ends inside a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridlessPlan {
    /// Fixed sparsity weight; calibrated per ROT and back-end when absent.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_eta_grid")]
    pub eta_grid: Vec<f64>,
    #[serde(default = "default_calibration_trials")]
    pub calibration_trials: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_feas_tol")]
    pub feas_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
}

fn default_eta_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}
fn default_calibration_trials() -> usize {
    8
}
// Looser than the library defaults: Monte-Carlo estimation error dwarfs
// the solver error well before the library tolerances are reached.
fn default_eps() -> f64 {
    1e-6
}
fn default_feas_tol() -> f64 {
    1e-4
}
fn default_max_iter() -> usize {
    3000
}
fn default_rank_tol() -> f64 {
    1e-6
}

impl Default for GridlessPlan {
    fn default() -> Self {
        Self {
            eta: None,
            eta_grid: default_eta_grid(),
            calibration_trials: default_calibration_trials(),
            eps: default_eps(),
            feas_tol: default_feas_tol(),
            max_iter: default_max_iter(),
            rank_tol: default_rank_tol(),
        }
    }
}

impl GridlessPlan {
    pub fn settings(&self, eta: f64) -> SdpSettings {
        SdpSettings {
            eta,
            eps: self.eps,
            max_iter: self.max_iter,
            feas_tol: self.feas_tol,
            rank_tol: self.rank_tol,
            ..SdpSettings::default()
        }
    }
}

/// A Monte-Carlo sweep over ROT and snapshot count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    #[serde(default)]
    pub scenario: ScenarioConfig,
    pub rot_db: Vec<f64>,
    pub t_values: Vec<usize>,
    pub estimators: Vec<String>,
    pub trials: usize,
    #[serde(default = "default_delta_step")]
    pub delta_step: f64,
    /// Freeze geometry and rays at those of trial 0.
    #[serde(default)]
    pub fixed_rays: bool,
    /// GEC window length.
    #[serde(default = "default_t0")]
    pub t0: usize,
    #[serde(default = "default_music_grid")]
    pub music_grid: usize,
    #[serde(default = "default_user_power")]
    pub user_power: f64,
    #[serde(default)]
    pub gridless: GridlessPlan,
    #[serde(default)]
    pub out_dir: Option<String>,
}

fn default_delta_step() -> f64 {
    0.01
}
fn default_t0() -> usize {
    1
}
fn default_music_grid() -> usize {
    1000
}
fn default_user_power() -> f64 {
    1.0
}

impl ExperimentPlan {
    pub fn from_json(s: &str) -> Result<Self, HarnessError> {
        let plan: Self = serde_json::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialises")
    }

    pub fn methods(&self) -> Result<Vec<Method>, HarnessError> {
        self.estimators
            .iter()
            .map(|s| {
                Method::parse(s)
                    .filter(|m| *m != Method::True)
                    .ok_or_else(|| HarnessError::Config(format!("unknown estimator {s:?}")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        self.scenario.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.estimators.is_empty() {
            return bad("estimator list is empty".into());
        }
        let methods = self.methods()?;
        if self.rot_db.is_empty() || self.rot_db.iter().any(|r| !r.is_finite()) {
            return bad("ROT values must be finite and non-empty".into());
        }
        if self.t_values.is_empty() || self.t_values.contains(&0) {
            return bad("T values must be positive and non-empty".into());
        }
        if !(self.delta_step > 0.0 && self.delta_step <= 1.0) {
            return bad(format!("delta_step {} outside (0, 1]", self.delta_step));
        }
        if self.t0 == 0 {
            return bad("t0 must be positive".into());
        }
        if !(self.user_power > 0.0) {
            return bad("user_power must be positive".into());
        }
        let s = self.scenario.n_sources();
        let pbce = methods.iter().any(|m| !matches!(m, Method::Ls | Method::PbceId));
        if pbce && s >= self.scenario.n_bs_antennas {
            return bad(format!(
                "{s} interfering rays leave no noise subspace with {} antennas",
                self.scenario.n_bs_antennas
            ));
        }
        if methods.contains(&Method::PbceMusic) && self.music_grid < 2 * s.max(1) {
            return bad(format!("music_grid {} too coarse for {s} sources", self.music_grid));
        }
        let g = &self.gridless;
        let eta_ok = |e: f64| e > 0.0 && e < 1.0;
        if let Some(e) = g.eta {
            if !eta_ok(e) {
                return bad(format!("eta {e} outside (0, 1)"));
            }
        } else if g.eta_grid.is_empty() || !g.eta_grid.iter().all(|&e| eta_ok(e)) || g.calibration_trials == 0 {
            return bad("eta calibration needs a non-empty grid inside (0, 1) and at least one trial".into());
        }
        g.settings(g.eta.unwrap_or(0.5))
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }
}
