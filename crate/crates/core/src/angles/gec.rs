use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gridless::{gae_estimate, SdpSettings};
use crate::num::Real;
use crate::phase::{AngleMethod, Diagnostics, PhaseShiftEstimate};
use crate::scenario::SampleBatch;

use super::cluster::cluster_phases_with;

/// Windowed GAE with clustering: every window contributes `S` phase
/// shifts, and the estimate is the set of heads of `S` balanced clusters
/// over everything gathered so far.
#[derive(Debug, Clone)]
pub struct GecEstimator<T: Real> {
    s: usize,
    settings: SdpSettings,
    seed: u64,
    points: Vec<T>,
    windows: usize,
    failed: usize,
    iterations: usize,
    all_converged: bool,
}

impl<T: Real> GecEstimator<T> {
    /// `seed` drives the clustering initialisation.
    pub fn new(s: usize, settings: SdpSettings, seed: u64) -> Result<Self> {
        settings.validate()?;
        if s == 0 {
            return Err(Error::invalid("S must be positive"));
        }
        Ok(Self {
            s,
            settings,
            seed,
            points: Vec::new(),
            windows: 0,
            failed: 0,
            iterations: 0,
            all_converged: true,
        })
    }

    /// Runs GAE on one window. A failing window is counted and skipped;
    /// its error is still returned to the caller.
    pub fn push(&mut self, window: &SampleBatch<T>) -> Result<()> {
        self.windows += 1;
        match gae_estimate(&window.samples, &self.settings, self.s) {
            Ok(est) => {
                self.iterations += est.diagnostics.solver_iterations;
                self.all_converged &= est.diagnostics.solver_converged;
                self.points.extend_from_slice(est.values());
                Ok(())
            }
            Err(e) => {
                self.failed += 1;
                Err(e)
            }
        }
    }

    pub fn windows(&self) -> usize {
        self.windows
    }

    pub fn failed_windows(&self) -> usize {
        self.failed
    }

    /// Current cluster heads.
    pub fn estimate(&self) -> Result<PhaseShiftEstimate<T>> {
        if self.points.is_empty() {
            return Err(Error::invalid(format!(
                "no usable window ({} of {} failed)",
                self.failed, self.windows
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let state = cluster_phases_with(&self.points, self.s, &mut rng)?;
        let mut diag = Diagnostics {
            solver_iterations: self.iterations,
            solver_converged: self.all_converged,
            windows: self.windows,
            failed_windows: self.failed,
            ..Diagnostics::default()
        };
        if self.failed > 0 {
            diag.flag("failed-windows");
        }
        Ok(PhaseShiftEstimate::new(state.head_phases()?, AngleMethod::Gec).with_diagnostics(diag))
    }
}

/// Splits the batch into windows of `t0` snapshots (a trailing partial
/// window is dropped) and fuses the per-window estimates.
pub fn gec_estimate<T: Real>(
    batch: &SampleBatch<T>,
    t0: usize,
    s: usize,
    settings: &SdpSettings,
    seed: u64,
) -> Result<PhaseShiftEstimate<T>> {
    if t0 == 0 {
        return Err(Error::invalid("window length must be positive"));
    }
    if s == 0 {
        return Ok(PhaseShiftEstimate::new(Vec::new(), AngleMethod::Gec));
    }
    let windows = batch.windows(t0);
    if windows.is_empty() {
        return Err(Error::invalid(format!("{} snapshots make no window of {t0}", batch.len())));
    }
    let mut gec = GecEstimator::new(s, settings.clone(), seed)?;
    for w in &windows {
        if let Err(e) = gec.push(w) {
            log::debug!("GEC window skipped: {e}");
        }
    }
    gec.estimate()
}
