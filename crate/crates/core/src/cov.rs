//! Correlation estimates: the sample (LS) estimate, the projection-based
//! reconstruction on a set of steering vectors, and the closed-form MSE of
//! both.

use std::fmt;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, trace_re, CMatrix, HermitianEigen};
use crate::num::{compensated_sum, complex_normal, cyclic_distance, Complex, Real};
use crate::phase::{AngleMethod, PhaseShiftEstimate};
use crate::scenario::{SampleBatch, SteeringBasis};

/// Provenance of a correlation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    True,
    Ls,
    PbceGae,
    PbceSge,
    PbceGec,
    PbceMusic,
    PbceId,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::True,
        Method::Ls,
        Method::PbceGae,
        Method::PbceSge,
        Method::PbceGec,
        Method::PbceMusic,
        Method::PbceId,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::True => "TRUE",
            Method::Ls => "LS",
            Method::PbceGae => "PBCE-GAE",
            Method::PbceSge => "PBCE-SGE",
            Method::PbceGec => "PBCE-GEC",
            Method::PbceMusic => "PBCE-MUSIC",
            Method::PbceId => "PBCE-ID",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str().eq_ignore_ascii_case(s))
    }

    pub fn for_angles(m: AngleMethod) -> Self {
        match m {
            AngleMethod::Gae => Method::PbceGae,
            AngleMethod::Sge => Method::PbceSge,
            AngleMethod::Gec => Method::PbceGec,
            AngleMethod::Music => Method::PbceMusic,
            AngleMethod::Ideal => Method::PbceId,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An `N x N` correlation matrix with the method that produced it and the
/// number of snapshots it was estimated from.
#[derive(Debug, Clone, PartialEq)]
pub struct CovEstimate<T: Real> {
    pub matrix: CMatrix<T>,
    pub method: Method,
    pub samples: usize,
}

impl<T: Real> CovEstimate<T> {
    pub fn new(matrix: CMatrix<T>, method: Method, samples: usize) -> Self {
        Self {
            matrix,
            method,
            samples,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        linalg::max_abs_diff(&self.matrix, &self.matrix.adjoint()) <= tol
    }

    /// Row-major dump, one matrix row per line as `re,im` pairs.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.matrix.nrows() {
            let row: Vec<String> = (0..self.matrix.ncols())
                .map(|j| {
                    let z = self.matrix[(i, j)];
                    format!("{:.16e},{:.16e}", z.re.as_f64(), z.im.as_f64())
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

fn add_identity<T: Real>(m: &CMatrix<T>, c: T) -> CMatrix<T> {
    let mut out = m.clone();
    for k in 0..out.nrows().min(out.ncols()) {
        out[(k, k)] += Complex::new(c, T::zero());
    }
    out
}

/// Sample correlation `(1/T) sum_t N(t) N(t)^H`.
pub fn ls_estimate<T: Real>(batch: &SampleBatch<T>) -> Result<CovEstimate<T>> {
    batch.check()?;
    let n = batch.n_antennas();
    let t = batch.len();
    let mut acc = CMatrix::zeros(n, n);
    for s in &batch.samples {
        acc.gerc(Complex::new(T::one(), T::zero()), s, s, Complex::new(T::one(), T::zero()));
    }
    let inv = Complex::new(T::one() / T::lit(t as f64), T::zero());
    // outer products are Hermitian up to rounding; make it exact
    let m = linalg::hermitize(&(acc * inv));
    Ok(CovEstimate::new(m, Method::Ls, t))
}

/// `est - sigma^2 I`. The result may be indefinite.
pub fn denoise<T: Real>(est: &CovEstimate<T>, noise_power: T) -> CovEstimate<T> {
    CovEstimate::new(add_identity(&est.matrix, -noise_power), est.method, est.samples)
}

/// `(M + M^H) / 2`.
pub fn hermitize<T: Real>(est: &CovEstimate<T>) -> CovEstimate<T> {
    CovEstimate::new(linalg::hermitize(&est.matrix), est.method, est.samples)
}

/// Floors negative eigenvalues at zero.
pub fn clip_psd<T: Real>(est: &CovEstimate<T>) -> Result<CovEstimate<T>> {
    Ok(CovEstimate::new(linalg::project_psd(&est.matrix)?, est.method, est.samples))
}

/// Steering basis for estimated phase shifts. Phase shifts closer than
/// 1e-9 cycles to an earlier one are moved by 1e-7 cycles so that the
/// basis keeps full column rank.
pub fn estimated_basis<T: Real>(n: usize, phases: &[T]) -> Result<SteeringBasis<T>> {
    let dup_tol = T::lit(1e-9);
    let nudge = T::lit(1e-7);
    let mut adjusted: Vec<T> = Vec::with_capacity(phases.len());
    for &b in phases {
        let mut b = b;
        let mut moved = false;
        while adjusted.iter().any(|&p| cyclic_distance(p, b) < dup_tol) {
            b += nudge;
            moved = true;
        }
        if moved {
            log::warn!("duplicate phase shift {}; perturbed to {}", b.as_f64() - nudge.as_f64(), b.as_f64());
        }
        adjusted.push(b);
    }
    SteeringBasis::new(n, &adjusted)
}

/// Inner correlation `A^+ (R_LS - sigma^2 I) (A^+)^H`.
pub fn pbce_inner<T: Real>(ls: &CovEstimate<T>, basis: &SteeringBasis<T>, noise_power: T) -> Result<CMatrix<T>> {
    if basis.n_antennas() != ls.dim() {
        return Err(Error::dims(ls.dim(), basis.n_antennas()));
    }
    let pinv = linalg::pinv(&basis.matrix)?;
    let denoised = add_identity(&ls.matrix, -noise_power);
    Ok(&pinv * denoised * pinv.adjoint())
}

/// Projection-based reconstruction `A R_x A^H + sigma^2 I` with `A` built
/// from the estimated phase shifts.
pub fn pbce_reconstruct<T: Real>(
    ls: &CovEstimate<T>,
    phases: &PhaseShiftEstimate<T>,
    noise_power: T,
) -> Result<CovEstimate<T>> {
    let n = ls.dim();
    if phases.len() > n {
        return Err(Error::invalid(format!(
            "{} phase shifts exceed {} antennas",
            phases.len(),
            n
        )));
    }
    let basis = estimated_basis(n, phases.values())?;
    let m = pbce_from_basis(ls, &basis, noise_power)?;
    Ok(CovEstimate::new(m, Method::for_angles(phases.method), ls.samples))
}

pub(crate) fn pbce_from_basis<T: Real>(
    ls: &CovEstimate<T>,
    basis: &SteeringBasis<T>,
    noise_power: T,
) -> Result<CMatrix<T>> {
    if basis.n_antennas() != ls.dim() {
        return Err(Error::dims(ls.dim(), basis.n_antennas()));
    }
    // A A^+ X (A^+)^H A^H = P X P with P = A A^+; forming P directly keeps
    // nearly coincident phase shifts from blowing up A^+.
    let p = linalg::range_projector(&basis.matrix)?;
    let denoised = add_identity(&ls.matrix, -noise_power);
    let out = add_identity(&(&p * denoised * &p), noise_power);
    Ok(linalg::hermitize(&out))
}

/// Per-trial squared error `(1/N^2) sum |est - truth|^2`.
pub fn mse<T: Real>(est: &CovEstimate<T>, truth: &CovEstimate<T>) -> Result<T> {
    if est.matrix.shape() != truth.matrix.shape() {
        return Err(Error::dims(
            format!("{:?}", truth.matrix.shape()),
            format!("{:?}", est.matrix.shape()),
        ));
    }
    let n = T::lit(est.dim() as f64);
    let f = linalg::frobenius(&(&est.matrix - &truth.matrix));
    Ok(f * f / (n * n))
}

/// Closed-form LS error, `trace^2(R) / (T N^2)`.
pub fn gamma_ls<T: Real>(r: &CovEstimate<T>, n_samples: usize) -> Result<T> {
    if n_samples == 0 {
        return Err(Error::invalid("T must be at least 1"));
    }
    let n = T::lit(r.dim() as f64);
    let tr = trace_re(&r.matrix);
    Ok(tr * tr / (T::lit(n_samples as f64) * n * n))
}

/// Closed-form error of the projection estimate with exact phase shifts,
/// `trace^2[R - sigma^2 (I - A A^+)] / (T N^2)`.
pub fn gamma_pbce<T: Real>(
    r: &CovEstimate<T>,
    basis: &SteeringBasis<T>,
    noise_power: T,
    n_samples: usize,
) -> Result<T> {
    if n_samples == 0 {
        return Err(Error::invalid("T must be at least 1"));
    }
    let n = r.dim();
    if basis.n_antennas() != n {
        return Err(Error::dims(n, basis.n_antennas()));
    }
    let s = basis.n_columns();
    let rk = linalg::rank(&basis.matrix);
    if rk < s {
        return Err(Error::RankDeficient(format!("steering basis has rank {rk} < {s}")));
    }
    let proj = linalg::range_projector(&basis.matrix)?;
    // trace(I - A A^+) = N - trace(A A^+)
    let tr = trace_re(&r.matrix) - noise_power * (T::lit(n as f64) - trace_re(&proj));
    let nf = T::lit(n as f64);
    Ok(tr * tr / (T::lit(n_samples as f64) * nf * nf))
}

/// `trace^2[R - sigma^2 (I - A A^+ R (A^+)^H A^H)] / (T N^2)`.
///
/// A variant in which the projector acts on `R` inside the noise term. It
/// is kept for comparison only: it does not collapse to [`gamma_ls`] when
/// `A` is square, and it disagrees with simulation whenever `sigma^2 > 0`.
/// [`gamma_pbce`] is the one to use.
pub fn gamma_pbce_literal<T: Real>(
    r: &CovEstimate<T>,
    basis: &SteeringBasis<T>,
    noise_power: T,
    n_samples: usize,
) -> Result<T> {
    if n_samples == 0 {
        return Err(Error::invalid("T must be at least 1"));
    }
    let n = r.dim();
    if basis.n_antennas() != n {
        return Err(Error::dims(n, basis.n_antennas()));
    }
    let proj = linalg::range_projector(&basis.matrix)?;
    let inner = add_identity(&(-(&proj * &r.matrix * proj.adjoint())), T::one());
    let tr = trace_re(&r.matrix) - noise_power * trace_re(&inner);
    let nf = T::lit(n as f64);
    Ok(tr * tr / (T::lit(n_samples as f64) * nf * nf))
}

/// Analytic and empirical variance of `x y^*` for jointly circular complex
/// Gaussians with powers `var_x`, `var_y` and correlation coefficient `xi`.
/// The analytic value is `var_x * var_y` for every `xi`.
pub fn gaussian_product_variance_oracle<R: Rng + ?Sized>(
    var_x: f64,
    var_y: f64,
    xi: Complex<f64>,
    n_draws: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if xi.norm() > 1.0 {
        return Err(Error::invalid(format!("|xi| = {} exceeds 1", xi.norm())));
    }
    if !(var_x > 0.0 && var_y > 0.0) {
        return Err(Error::invalid("powers must be positive"));
    }
    if n_draws < 2 {
        return Err(Error::invalid("need at least two draws"));
    }
    let (sx, sy) = (var_x.sqrt(), var_y.sqrt());
    let resid = (var_y - xi.norm_sqr() * var_y).max(0.0).sqrt();
    let mut prods = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let x = complex_normal(rng, var_x);
        let w = complex_normal(rng, 1.0);
        let y = xi.conj() * (sy / sx) * x + w * resid;
        prods.push(x * y.conj());
    }
    let nf = n_draws as f64;
    let mean = Complex::new(
        compensated_sum(prods.iter().map(|p| p.re)) / nf,
        compensated_sum(prods.iter().map(|p| p.im)) / nf,
    );
    let var = compensated_sum(prods.iter().map(|p| (p - mean).norm_sqr())) / (nf - 1.0);
    Ok((var_x * var_y, var))
}

/// Convenience: the PBCE estimate with the true phase shifts.
pub fn pbce_ideal<T: Real>(ls: &CovEstimate<T>, true_phases: &[T], noise_power: T) -> Result<CovEstimate<T>> {
    let est = PhaseShiftEstimate::new(true_phases.iter().copied(), AngleMethod::Ideal);
    pbce_reconstruct(ls, &est, noise_power)
}

/// Smallest eigenvalue, used by invariant checks.
pub fn min_eigenvalue<T: Real>(est: &CovEstimate<T>) -> Result<T> {
    Ok(HermitianEigen::new(&est.matrix)?.min())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, CVector};
    use crate::scenario::{draw_rayset, generate_samples, true_covariance, ScenarioConfig, Streams};
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn eye(n: usize, s: f64) -> CovEstimate<f64> {
        CovEstimate::new(CMatrix::identity(n, n) * c(s, 0.0), Method::Ls, 1)
    }

    #[test]
    fn ls_examples() {
        let b = SampleBatch::new(vec![CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])]).unwrap();
        let e = ls_estimate(&b).unwrap();
        assert_eq!(e.matrix[(0, 0)], c(1.0, 0.0));
        assert_eq!(e.matrix[(1, 1)], c(0.0, 0.0));
        let b = SampleBatch::new(vec![
            CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]),
        ])
        .unwrap();
        let e = ls_estimate(&b).unwrap();
        assert!(max_abs_diff(&e.matrix, &eye(2, 0.5).matrix) < 1e-15);
        assert_eq!(e.samples, 2);
    }

    #[test]
    fn ls_rejects_empty_batch() {
        let b = SampleBatch::<f64> {
            samples: vec![],
            interference: None,
            noise: None,
        };
        assert!(ls_estimate(&b).is_err());
    }

    #[test]
    fn denoise_examples() {
        assert!(denoise(&eye(3, 1.0), 1.0).matrix.norm() == 0.0);
        assert!(max_abs_diff(&denoise(&eye(3, 2.0), 1.0).matrix, &eye(3, 1.0).matrix) < 1e-15);
        assert!(max_abs_diff(&denoise(&eye(3, 0.5), 1.0).matrix, &eye(3, -0.5).matrix) < 1e-15);
    }

    #[test]
    fn hermitize_examples() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let h = hermitize(&CovEstimate::new(m.clone(), Method::Ls, 1));
        let expect = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.5), c(0.0, -0.5), c(1.0, 0.0)]);
        assert!(max_abs_diff(&h.matrix, &expect) < 1e-15);
        let hh = hermitize(&h);
        assert_eq!(hh.matrix, h.matrix);
        let d = &h.matrix - &m;
        assert!(max_abs_diff(&d, &(-d.adjoint())) < 1e-15);
    }

    #[test]
    fn clip_psd_floors() {
        let e = clip_psd(&eye(2, -1.0)).unwrap();
        assert!(e.matrix.norm() < 1e-15);
    }

    #[test]
    fn mse_examples() {
        let truth = eye(4, 2.0);
        assert_eq!(mse(&truth, &truth).unwrap(), 0.0);
        let plus_i = CovEstimate::new(&truth.matrix + CMatrix::identity(4, 4), Method::Ls, 1);
        assert!((mse(&plus_i, &truth).unwrap() - 0.25).abs() < 1e-15);
        let ones = CMatrix::from_element(4, 4, c(1.0, 0.0));
        let plus_ones = CovEstimate::new(&truth.matrix + ones, Method::Ls, 1);
        assert!((mse(&plus_ones, &truth).unwrap() - 1.0).abs() < 1e-15);
        assert!(mse(&eye(3, 1.0), &truth).is_err());
    }

    #[test]
    fn gamma_ls_examples() {
        assert!((gamma_ls(&eye(5, 2.0), 3).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        assert!((gamma_ls(&eye(32, 1.0), 4).unwrap() - 0.25).abs() < 1e-15);
        assert!(gamma_ls(&eye(2, 1.0), 0).is_err());
    }

    fn scenario(n: usize, l: usize, ng: usize, s2: f64) -> (ScenarioConfig, Vec<f64>, CovEstimate<f64>) {
        let cfg = ScenarioConfig {
            n_bs_antennas: n,
            n_interferers: l,
            n_rays: ng,
            noise_power: s2,
            ..ScenarioConfig::default()
        };
        let means: Vec<f64> = (0..l).map(|k| -1.0 + 0.9 * k as f64).collect();
        let rays = draw_rayset::<f64>(&cfg, &means, &Streams::new(3), 0).unwrap();
        let r = true_covariance(&rays, &cfg).unwrap();
        (cfg, rays.rx_phases(), r)
    }

    #[test]
    fn pbce_is_lossless_at_truth() {
        let (cfg, phases, r) = scenario(8, 1, 3, 0.5);
        let out = pbce_ideal(&r, &phases, cfg.noise_power).unwrap();
        assert!(max_abs_diff(&out.matrix, &r.matrix) < 1e-10);
        assert_eq!(out.method, Method::PbceId);
    }

    #[test]
    fn pbce_on_full_dft_basis_is_hermitize() {
        let n = 6;
        let m = CMatrix::from_fn(n, n, |i, j| c((i * j) as f64 * 0.1, i as f64 - j as f64 * 0.3));
        let ls = CovEstimate::new(m, Method::Ls, 2);
        let phases: Vec<f64> = (0..n).map(|k| k as f64 / n as f64).collect();
        let est = PhaseShiftEstimate::new(phases, AngleMethod::Gae);
        let out = pbce_reconstruct(&ls, &est, 0.7).unwrap();
        assert!(max_abs_diff(&out.matrix, &hermitize(&ls).matrix) < 1e-10);
    }

    #[test]
    fn pbce_matches_single_expression_form() {
        let (cfg, phases, r) = scenario(8, 2, 2, 0.8);
        let streams = Streams::new(8);
        let rays = draw_rayset::<f64>(&cfg, &[-1.0, -0.1], &streams, 0).unwrap();
        let batch = generate_samples(&rays, &cfg, 3, &streams, 0).unwrap();
        let ls = ls_estimate(&batch).unwrap();
        let _ = r;
        let est = PhaseShiftEstimate::new(phases.clone(), AngleMethod::Gae);
        let out = pbce_reconstruct(&ls, &est, cfg.noise_power).unwrap();
        let basis = estimated_basis(8, est.values()).unwrap();
        let a = &basis.matrix;
        let p = linalg::pinv(a).unwrap();
        let s2 = c(cfg.noise_power, 0.0);
        let inner = &p * &ls.matrix * p.adjoint() - &p * p.adjoint() * s2;
        let alt = a * inner * a.adjoint() + CMatrix::identity(8, 8) * s2;
        assert!(max_abs_diff(&out.matrix, &alt) < 1e-10);
        // round trip of the inner matrix
        let rx = pbce_inner(&ls, &basis, cfg.noise_power).unwrap();
        let back = &p * (&out.matrix - CMatrix::identity(8, 8) * s2) * p.adjoint();
        assert!(max_abs_diff(&back, &rx) < 1e-9);
        assert!(out.is_hermitian(1e-12));
    }

    #[test]
    fn duplicate_phases_are_perturbed() {
        let basis = estimated_basis(8, &[0.1f64, 0.1, 0.3]).unwrap();
        assert_eq!(linalg::rank(&basis.matrix), 3);
        assert!((basis.phases[1] - 0.1 - 1e-7).abs() < 1e-12);
    }

    #[test]
    fn too_many_phases_rejected() {
        let est = PhaseShiftEstimate::new(vec![0.0f64; 5], AngleMethod::Gae);
        assert!(pbce_reconstruct(&eye(4, 1.0), &est, 1.0).is_err());
    }

    #[test]
    fn gamma_pbce_examples() {
        // S = N collapses to the LS value
        let n = 5;
        let phases: Vec<f64> = (0..n).map(|k| k as f64 / n as f64 - 0.5).collect();
        let basis = SteeringBasis::new(n, &phases).unwrap();
        let r = CovEstimate::new(
            CMatrix::from_fn(n, n, |i, j| if i == j { c(3.0, 0.0) } else { c(0.2, 0.1 * (i as f64 - j as f64)) }),
            Method::True,
            0,
        );
        let g1 = gamma_pbce(&r, &basis, 0.9, 3).unwrap();
        let g2 = gamma_ls(&r, 3).unwrap();
        assert!((g1 - g2).abs() < 1e-12 * g2);
        // sigma^2 = 0 on a noiseless structured R
        let (_, phases, _) = scenario(8, 1, 3, 0.5);
        let cfg = ScenarioConfig {
            n_bs_antennas: 8,
            n_interferers: 1,
            n_rays: 3,
            noise_power: 1e-300,
            ..ScenarioConfig::default()
        };
        let rays = draw_rayset::<f64>(&cfg, &[-1.0], &Streams::new(3), 0).unwrap();
        let mut r0 = true_covariance(&rays, &cfg).unwrap();
        r0.matrix -= CMatrix::identity(8, 8) * c(1e-300, 0.0);
        let basis = SteeringBasis::new(8, &phases).unwrap();
        let g = gamma_pbce(&r0, &basis, 0.0, 2).unwrap();
        assert!((g - gamma_ls(&r0, 2).unwrap()).abs() < 1e-12 * g);
        // rank deficient basis
        let dup = SteeringBasis::new(8, &[0.1, 0.1]).unwrap();
        assert!(matches!(gamma_pbce(&r0, &dup, 1.0, 2), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn gamma_pbce_equals_projected_trace() {
        // trace(P R P) with P = A A^+ is the same quantity by a second route
        let (cfg, phases, r) = scenario(8, 1, 3, 0.7);
        let basis = SteeringBasis::new(8, &phases).unwrap();
        let p = &basis.matrix * linalg::pinv(&basis.matrix).unwrap();
        let tr = trace_re(&(&p * &r.matrix * p.adjoint()));
        let expect = tr * tr / (4.0 * 64.0);
        let g = gamma_pbce(&r, &basis, cfg.noise_power, 4).unwrap();
        assert!((g - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn gamma_invariant_under_unitary_rotation() {
        let (cfg, phases, r) = scenario(6, 1, 2, 0.4);
        let basis = SteeringBasis::new(6, &phases).unwrap();
        // a unitary from the eigenvectors of an arbitrary Hermitian matrix
        let h = CMatrix::from_fn(6, 6, |i, j| c((i + j) as f64, i as f64 - j as f64));
        let u = HermitianEigen::new(&linalg::hermitize(&h)).unwrap().vectors;
        let r_rot = CovEstimate::new(&u * &r.matrix * u.adjoint(), Method::True, 0);
        let basis_rot = SteeringBasis {
            phases: phases.clone(),
            matrix: &u * &basis.matrix,
        };
        let g = gamma_pbce(&r, &basis, cfg.noise_power, 2).unwrap();
        let g_rot = gamma_pbce(&r_rot, &basis_rot, cfg.noise_power, 2).unwrap();
        assert!((g - g_rot).abs() < 1e-10 * g);
        assert!((gamma_ls(&r, 2).unwrap() - gamma_ls(&r_rot, 2).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn oracle_rejects_bad_xi() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert!(gaussian_product_variance_oracle(1.0, 1.0, c(0.9, 0.9), 10, &mut rng).is_err());
    }

    #[test]
    fn oracle_independent_and_identical_cases() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let (a, e) = gaussian_product_variance_oracle(2.0, 0.5, c(0.0, 0.0), 200_000, &mut rng).unwrap();
        assert_eq!(a, 1.0);
        assert!((e - a).abs() < 0.03 * a);
        // x = y: var(|x|^2) = sigma^4
        let (a, e) = gaussian_product_variance_oracle(1.5, 1.5, c(1.0, 0.0), 200_000, &mut rng).unwrap();
        assert!((a - 2.25).abs() < 1e-15);
        assert!((e - a).abs() < 0.03 * a);
    }

    #[test]
    fn oracle_correlated_case() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (a, e) = gaussian_product_variance_oracle(2.0, 3.0, c(0.6, 0.3), 1_000_000, &mut rng).unwrap();
        assert_eq!(a, 6.0);
        assert!((e - 6.0).abs() < 0.02 * 6.0, "empirical {e}");
    }

    #[test]
    fn csv_export_shape() {
        let e = eye(2, 1.0);
        let csv = e.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), 4);
    }

    #[test]
    fn single_precision_pipeline() {
        let b = SampleBatch::new(vec![
            CVector::from_vec(vec![Complex::new(1.0f32, 0.0), Complex::new(0.0, 1.0)]),
            CVector::from_vec(vec![Complex::new(0.5f32, 0.0), Complex::new(1.0, 0.0)]),
        ])
        .unwrap();
        let ls = ls_estimate(&b).unwrap();
        let est = PhaseShiftEstimate::new([0.0f32, 0.5], AngleMethod::Gae);
        let out = pbce_reconstruct(&ls, &est, 0.1).unwrap();
        // S = N: projection is the identity
        assert!(max_abs_diff(&out.matrix, &ls.matrix) < 1e-5);
    }
}
