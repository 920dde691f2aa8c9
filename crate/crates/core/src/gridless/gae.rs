use crate::error::{Error, Result};
use crate::linalg::{CVector, HermitianEigen};
use crate::num::Real;
use crate::phase::{AngleMethod, Diagnostics, PhaseShiftEstimate};

use super::sdp::{solve_an_sdp, SdpError, SdpSettings, SdpSolution};
use super::vandermonde::{decompose_with_rank, numeric_rank, AtomicDecomposition};

/// Gridless estimate of `s` phase shifts from raw snapshots.
pub fn gae_estimate<T: Real>(batch: &[CVector<T>], settings: &SdpSettings, s: usize) -> Result<PhaseShiftEstimate<T>> {
    gae_with_method(batch, settings, s, AngleMethod::Gae)
}

pub(crate) fn gae_with_method<T: Real>(
    batch: &[CVector<T>],
    settings: &SdpSettings,
    s: usize,
    method: AngleMethod,
) -> Result<PhaseShiftEstimate<T>> {
    settings.validate()?;
    if s == 0 {
        return Ok(PhaseShiftEstimate::new(Vec::new(), method));
    }
    let n = batch.first().map(|v| v.len()).unwrap_or(0);
    if n == 0 {
        return Err(Error::invalid("empty batch"));
    }
    if s > n - 1 {
        return Err(Error::invalid(format!("S = {s} needs at most N - 1 = {}", n - 1)));
    }
    let mut diag = Diagnostics::default();
    let sol = match solve_an_sdp(batch, settings) {
        Ok(sol) => sol,
        Err(SdpError::NotConverged(best)) => {
            diag.flag("not-converged");
            *best
        }
        Err(SdpError::Invalid(e)) => return Err(e),
    };
    diag.solver_iterations = sol.stats.iterations;
    diag.solver_converged = sol.stats.converged;
    diag.primal_residual = sol.stats.primal_residual;
    let dec = atoms_for(&sol, settings.rank_tol, s, &mut diag)?;
    if dec.len() > s {
        diag.flag("selected-by-power");
    }
    let picked: Vec<T> = dec.by_power().into_iter().take(s).map(|i| dec.phases[i]).collect();
    Ok(PhaseShiftEstimate::new(picked, method).with_diagnostics(diag))
}

/// Decomposition with at least `s` atoms. A rank short of `s` is retried
/// at a tenth of the tolerance; a full-rank `Q` (no noise subspace, common
/// when the solver stops short of exact low rank) falls back to the `s`
/// dominant eigenvectors.
fn atoms_for<T: Real>(sol: &SdpSolution<T>, rank_tol: f64, s: usize, diag: &mut Diagnostics) -> Result<AtomicDecomposition<T>> {
    let m = sol.q.matrix();
    let n = m.nrows();
    let eig = HermitianEigen::new(&m)?;
    let mut r = numeric_rank(&eig, T::lit(rank_tol));
    if r < s {
        r = numeric_rank(&eig, T::lit(rank_tol / 10.0));
        diag.flag("rank-retry");
    }
    if r < s {
        return Err(Error::InsufficientAtoms { found: r, needed: s });
    }
    if r >= n {
        diag.flag("full-rank-fallback");
        r = s;
    }
    decompose_with_rank(&m, &eig, r)
}
