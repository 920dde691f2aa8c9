use crate::cov::{denoise, hermitize, CovEstimate};
use crate::error::{Error, Result};
use crate::gridless::gae::gae_with_method;
use crate::gridless::SdpSettings;
use crate::linalg::{CMatrix, CVector, HermitianEigen};
use crate::num::{Complex, Real};
use crate::phase::{AngleMethod, PhaseShiftEstimate};

/// `V_S diag(sqrt(lambda_1..lambda_S))` for the hermitized, denoised
/// estimate; negative eigenvalues are floored at zero.
pub fn sge_square_root<T: Real>(ls: &CovEstimate<T>, noise_power: T, s: usize) -> Result<CMatrix<T>> {
    let n = ls.dim();
    if s >= n {
        return Err(Error::invalid(format!("S = {s} must be below N = {n}")));
    }
    let r = hermitize(&denoise(ls, noise_power));
    let eig = HermitianEigen::new(&r.matrix)?;
    if !(eig.max() > T::zero()) {
        return Err(Error::NoInterferenceSubspace);
    }
    let mut out = CMatrix::zeros(n, s);
    for k in 0..s {
        let lam = eig.values[k].max(T::zero());
        out.set_column(k, &(eig.vectors.column(k) * Complex::new(lam.sqrt(), T::zero())));
    }
    Ok(out)
}

/// Gridless estimation on the columns of the truncated square root, i.e.
/// GAE with `T = S`.
pub fn sge_estimate<T: Real>(
    ls: &CovEstimate<T>,
    noise_power: T,
    s: usize,
    settings: &SdpSettings,
) -> Result<PhaseShiftEstimate<T>> {
    if s == 0 {
        return Ok(PhaseShiftEstimate::new(Vec::new(), AngleMethod::Sge));
    }
    let root = sge_square_root(ls, noise_power, s)?;
    let cols: Vec<CVector<T>> = root.column_iter().map(|c| c.into_owned()).collect();
    gae_with_method(&cols, settings, s, AngleMethod::Sge)
}
