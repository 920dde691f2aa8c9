use crate::cov::{denoise, hermitize, CovEstimate};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianEigen};
use crate::num::Real;
use crate::phase::{AngleMethod, PhaseShiftEstimate};
use crate::scenario::channel::steering_unchecked;

/// Eigenvectors of the `N - S` smallest eigenvalues.
pub fn noise_subspace<T: Real>(ls: &CovEstimate<T>, noise_power: T, s: usize) -> Result<CMatrix<T>> {
    let n = ls.dim();
    if s >= n {
        return Err(Error::invalid(format!("S = {s} must be below N = {n}")));
    }
    let r = hermitize(&denoise(ls, noise_power));
    let eig = HermitianEigen::new(&r.matrix)?;
    Ok(eig.vectors.columns(s, n - s).into_owned())
}

/// `1 / |V^H a(theta_k)|^2` on `theta_k = -1/2 + k / n_grid`.
pub fn music_spectrum<T: Real>(basis: &CMatrix<T>, n_grid: usize) -> Vec<T> {
    let n = basis.nrows();
    let vh = basis.adjoint();
    (0..n_grid)
        .map(|k| {
            let theta = T::lit(-0.5 + k as f64 / n_grid as f64);
            let proj = &vh * steering_unchecked::<T>(n, theta);
            let d = proj.norm_squared();
            if d > T::zero() {
                T::one() / d
            } else {
                T::max_value().unwrap_or_else(T::one)
            }
        })
        .collect()
}

/// The `S` circular local maxima of the MUSIC pseudo-spectrum with the
/// largest values. If there are fewer than `S` peaks the rest is filled
/// with the largest remaining grid values and the estimate is flagged.
pub fn music_estimate<T: Real>(ls: &CovEstimate<T>, noise_power: T, s: usize, n_grid: usize) -> Result<PhaseShiftEstimate<T>> {
    if n_grid < 2 * s || n_grid < 2 {
        return Err(Error::invalid(format!("grid of {n_grid} points is too coarse for S = {s}")));
    }
    let vn = noise_subspace(ls, noise_power, s)?;
    if s == 0 {
        return Ok(PhaseShiftEstimate::new(Vec::new(), AngleMethod::Music));
    }
    let p = music_spectrum(&vn, n_grid);
    let (peaks, filled) = select_peaks(&p, s);
    let mut est_diag = crate::phase::Diagnostics::default();
    if filled {
        est_diag.flag("grid-fill");
    }
    let g = n_grid;
    let values = peaks.iter().map(|&k| T::lit(-0.5 + k as f64 / g as f64));
    Ok(PhaseShiftEstimate::new(values, AngleMethod::Music).with_diagnostics(est_diag))
}

/// Indices of the `s` largest circular local maxima, topped up with the
/// largest remaining values when there are too few. Ties go to the lower
/// index.
fn select_peaks<T: Real>(p: &[T], s: usize) -> (Vec<usize>, bool) {
    let g = p.len();
    let mut peaks: Vec<usize> = (0..g)
        .filter(|&k| {
            let left = p[(k + g - 1) % g];
            let right = p[(k + 1) % g];
            p[k] > left && p[k] >= right
        })
        .collect();
    let by_value = |a: &usize, b: &usize| p[*b].partial_cmp(&p[*a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(b));
    peaks.sort_by(by_value);
    peaks.truncate(s);
    let filled = peaks.len() < s;
    if filled {
        let mut rest: Vec<usize> = (0..g).filter(|k| !peaks.contains(k)).collect();
        rest.sort_by(by_value);
        let missing = s - peaks.len();
        peaks.extend(rest.into_iter().take(missing));
    }
    (peaks, filled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cov::Method;
    use crate::num::{cyclic_distance, Complex};
    use crate::scenario::steering_vector;

    fn covariance(n: usize, atoms: &[(f64, f64)], s2: f64) -> CovEstimate<f64> {
        let mut r = CMatrix::identity(n, n) * Complex::new(s2, 0.0);
        for &(b, p) in atoms {
            let a = steering_vector::<f64>(n, b).unwrap();
            r += &a * a.adjoint() * Complex::new(p, 0.0);
        }
        CovEstimate::new(r, Method::True, 0)
    }

    #[test]
    fn two_sources_within_grid_resolution() {
        let r = covariance(16, &[(0.1, 1.0), (0.4, 2.0)], 0.5);
        let est = music_estimate(&r, 0.5, 2, 1000).unwrap();
        let v = est.values();
        assert!(cyclic_distance(v[0], 0.1) <= 1e-3 && cyclic_distance(v[1], 0.4) <= 1e-3, "{v:?}");
        assert!(est.diagnostics.flags.is_empty());
    }

    #[test]
    fn single_source_peaks_at_nearest_grid_point() {
        let truth = 0.123456;
        let r = covariance(8, &[(truth, 1.0)], 0.1);
        let est = music_estimate(&r, 0.1, 1, 1000).unwrap();
        let nearest = ((truth + 0.5) * 1000.0).round() / 1000.0 - 0.5;
        assert!((est.values()[0] - nearest).abs() < 1e-12, "{:?}", est.values());
    }

    #[test]
    fn full_basis_spectrum_is_flat() {
        let n = 7;
        let u = HermitianEigen::new(&covariance(n, &[(0.2, 1.0)], 1.0).matrix).unwrap().vectors;
        for v in music_spectrum(&u, 64) {
            assert!((v - 1.0 / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_refinement_never_moves_away() {
        let truths = [(-0.31, 0.7), (0.0734, 1.0), (0.2519, 0.4)];
        let r = covariance(12, &truths, 0.2);
        let mut prev: Option<Vec<f64>> = None;
        for g in [250usize, 500, 1000, 2000, 4000] {
            let est = music_estimate(&r, 0.2, 3, g).unwrap();
            let mut errs: Vec<f64> = truths
                .iter()
                .map(|t| est.values().iter().map(|v| cyclic_distance(*v, t.0)).fold(f64::MAX, f64::min))
                .collect();
            if let Some(p) = &prev {
                for (e, q) in errs.iter().zip(p) {
                    assert!(*e <= *q + 1e-15, "grid {g}: {errs:?} vs {p:?}");
                }
            }
            prev = Some(std::mem::take(&mut errs));
        }
    }

    #[test]
    fn too_few_peaks_are_filled() {
        let (idx, filled) = select_peaks(&[1.0, 2.0, 3.0, 2.0], 2);
        assert!(filled);
        assert_eq!(idx, vec![2, 1]);
        let (idx, filled) = select_peaks(&[5.0, 1.0, 4.0, 1.0, 3.0, 0.5], 2);
        assert!(!filled);
        assert_eq!(idx, vec![0, 2]);
        let (idx, filled) = select_peaks(&[1.0; 5], 1);
        assert!(filled);
        assert_eq!(idx, vec![0]);
    }

    #[test]
    fn rejects_coarse_grid() {
        let r = covariance(6, &[(0.1, 1.0)], 1.0);
        assert!(music_estimate(&r, 1.0, 3, 5).is_err());
        assert!(music_estimate(&r, 1.0, 6, 100).is_err());
    }
}
