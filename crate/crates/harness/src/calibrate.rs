//! Choice of the gridless sparsity weight per ROT and back-end.

use rayon::prelude::*;

use intcorr::num::cyclic_distance;
use intcorr::scenario::Streams;
use intcorr::Method;

use crate::plan::ExperimentPlan;
use crate::runner::{estimate_phases, prepare_trial};
use crate::HarnessError;

/// Calibration draws use trial ids far above any run.
pub const CALIBRATION_TRIAL_BASE: u64 = 1 << 40;

/// Symmetric chamfer distance between two phase sets in cycles: the mean
/// of both directed average nearest-neighbour distances. An empty side
/// scores the worst case, 1/2.
pub fn chamfer(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 0.0 } else { 0.5 };
    }
    let directed = |x: &[f64], y: &[f64]| {
        x.iter()
            .map(|&p| y.iter().map(|&q| cyclic_distance(p, q)).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / x.len() as f64
    };
    0.5 * (directed(a, b) + directed(b, a))
}

pub fn is_gridless(m: Method) -> bool {
    matches!(m, Method::PbceGae | Method::PbceSge | Method::PbceGec)
}

/// Sparsity weight per `(ROT index, back-end)`.
#[derive(Debug, Clone, Default)]
pub struct EtaTable {
    entries: Vec<(usize, Method, f64)>,
}

impl EtaTable {
    pub fn get(&self, rot_idx: usize, m: Method) -> Option<f64> {
        self.entries
            .iter()
            .find(|(r, x, _)| *r == rot_idx && *x == m)
            .map(|e| e.2)
    }

    pub fn choices(&self, plan: &ExperimentPlan) -> Vec<crate::runner::EtaChoice> {
        self.entries
            .iter()
            .map(|&(r, m, eta)| crate::runner::EtaChoice {
                rot_db: plan.rot_db[r],
                estimator: m.as_str().to_string(),
                eta,
            })
            .collect()
    }
}

/// Fixed weight from the plan, or the grid value with the lowest mean
/// chamfer distance over the calibration draws at the first `T` of the
/// plan. Ties go to the earlier grid value; failed estimates score 1/2.
pub fn calibrate(plan: &ExperimentPlan, methods: &[Method], streams: &Streams) -> Result<EtaTable, HarnessError> {
    let mut table = EtaTable::default();
    let gridless: Vec<Method> = methods.iter().copied().filter(|&m| is_gridless(m)).collect();
    if gridless.is_empty() {
        return Ok(table);
    }
    let g = &plan.gridless;
    let t = plan.t_values[0];
    for rot_idx in 0..plan.rot_db.len() {
        if let Some(eta) = g.eta {
            table.entries.extend(gridless.iter().map(|&m| (rot_idx, m, eta)));
            continue;
        }
        let rot = plan.rot_db[rot_idx];
        let data: Vec<_> = (0..g.calibration_trials as u64)
            .into_par_iter()
            .map(|c| {
                let id = CALIBRATION_TRIAL_BASE + c;
                let ray_trial = if plan.fixed_rays { 0 } else { id };
                (id, prepare_trial(plan, streams, id, ray_trial, rot, t))
            })
            .collect();
        for &m in &gridless {
            let jobs: Vec<(usize, usize)> =
                (0..g.eta_grid.len()).flat_map(|e| (0..data.len()).map(move |d| (e, d))).collect();
            let scores: Vec<f64> = jobs
                .par_iter()
                .map(|&(e, d)| {
                    let (id, trial) = &data[d];
                    let Ok(trial) = trial else { return 0.5 };
                    let settings = g.settings(g.eta_grid[e]);
                    match estimate_phases(m, trial, plan, &settings, streams, *id) {
                        Ok(est) => chamfer(est.values(), &trial.true_phases),
                        Err(_) => 0.5,
                    }
                })
                .collect();
            let mut best = (g.eta_grid[0], f64::INFINITY);
            for (e, &eta) in g.eta_grid.iter().enumerate() {
                let s = &scores[e * data.len()..(e + 1) * data.len()];
                let mean = s.iter().sum::<f64>() / s.len() as f64;
                log::debug!("calibration {} rot {rot} eta {eta}: {mean:.3e}", m.as_str());
                if mean < best.1 {
                    best = (eta, mean);
                }
            }
            log::info!("{} at ROT {rot} dB: eta = {}", m.as_str(), best.0);
            table.entries.push((rot_idx, m, best.0));
        }
    }
    Ok(table)
}
