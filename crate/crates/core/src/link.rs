//! Single-user uplink metrics after whitening with an estimated
//! interference-plus-noise correlation.

use crate::cov::CovEstimate;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, HermitianEigen};
use crate::num::{compensated_sum, complex_normal, Real};
use crate::scenario::channel::{phase_shift_from_angle, steering_unchecked};
use crate::scenario::{Role, ScenarioConfig, Streams};

/// `W = Lambda^{-1/2} U^H` with eigenvalues in ascending order, so that
/// `W R W^H = I`.
pub fn whiten<T: Real>(est: &CovEstimate<T>) -> Result<CMatrix<T>> {
    let eig = HermitianEigen::new(&est.matrix)?;
    let n = eig.dim();
    let bad: Vec<f64> = eig.values.iter().filter(|&&l| !(l > T::zero())).map(|l| l.as_f64()).collect();
    if !bad.is_empty() {
        return Err(Error::NotPositiveDefinite(bad));
    }
    // ascending eigenvalues; equal ones keep their original order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.values[a]
            .partial_cmp(&eig.values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut w = CMatrix::zeros(n, n);
    for (row, &k) in order.iter().enumerate() {
        let s = T::one() / eig.values[k].sqrt();
        for j in 0..n {
            w[(row, j)] = eig.vectors[(j, k)].conj() * s;
        }
    }
    Ok(w)
}

/// One uplink: user channel, user symbol power, the correlation used by
/// the receiver and the true one.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkRealization<T: Real> {
    pub h: CVector<T>,
    pub symbol_power: T,
    pub estimate: CovEstimate<T>,
    pub truth: CovEstimate<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    /// Achievable rate with the estimated whitening, bits/s/Hz.
    pub c: f64,
    /// Rate the receiver believes it gets.
    pub c_hat: f64,
    /// Rate with the true correlation.
    pub c_opt: f64,
    pub delta: f64,
    pub rho: f64,
    pub outage: bool,
}

impl RateReport {
    /// Throughput of the same link at another back-off.
    pub fn throughput_at(&self, delta: f64) -> f64 {
        let req = delta * self.c_hat;
        if req <= self.c {
            req
        } else {
            0.0
        }
    }
}

fn mrc_rates<T: Real>(h: &CVector<T>, w: &CMatrix<T>, truth: &CMatrix<T>, sx2: T) -> (T, T) {
    let g = w * h;
    let gg = g.norm_squared();
    let rn = w * truth * w.adjoint();
    let grg = g.dotc(&(&rn * &g)).re;
    let c = if grg > T::zero() {
        (T::one() + gg * gg * sx2 / grg).log2()
    } else {
        T::zero()
    };
    let c_hat = (T::one() + gg * sx2).log2();
    (c, c_hat)
}

/// Rates and throughput of one link at back-off `delta`.
pub fn rate_report<T: Real>(link: &LinkRealization<T>, delta: f64) -> Result<RateReport> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta = {delta} outside [0, 1]")));
    }
    let n = link.h.len();
    if link.estimate.dim() != n || link.truth.dim() != n {
        return Err(Error::dims(n, format!("{} / {}", link.estimate.dim(), link.truth.dim())));
    }
    let w = whiten(&link.estimate)?;
    let (c, c_hat) = mrc_rates(&link.h, &w, &link.truth.matrix, link.symbol_power);
    let w_opt = whiten(&link.truth)?;
    let (_, c_opt) = mrc_rates(&link.h, &w_opt, &link.truth.matrix, link.symbol_power);
    let (c, c_hat, c_opt) = (c.as_f64(), c_hat.as_f64(), c_opt.as_f64());
    let req = delta * c_hat;
    let outage = req > c;
    Ok(RateReport {
        c,
        c_hat,
        c_opt,
        delta,
        rho: if outage { 0.0 } else { req },
        outage,
    })
}

/// Back-off on `{0, step, ..., 1}` maximising the mean throughput over the
/// ensemble. Ties go to the smaller value.
pub fn optimize_delta(ensemble: &[RateReport], step: f64) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(Error::invalid("empty ensemble"));
    }
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::invalid(format!("grid step {step} outside (0, 1]")));
    }
    let k = (1.0 / step).round() as usize;
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..=k {
        let d = (i as f64 * step).min(1.0);
        let mean = compensated_sum(ensemble.iter().map(|r| r.throughput_at(d))) / ensemble.len() as f64;
        if mean > best.1 {
            best = (d, mean);
        }
    }
    Ok(best.0)
}

/// Desired-user channel from the same few-ray model as the interferers:
/// `n_rays` rays of total unit power around a mean AoA uniform on
/// `(-pi/2, pi/2)`. Uses the stream `(trial, UserChannel, 0, 0)`.
pub fn draw_user_channel<T: Real>(cfg: &ScenarioConfig, streams: &Streams, trial: u64) -> Result<CVector<T>> {
    let n = cfg.n_bs_antennas;
    let ng = cfg.n_rays.max(1);
    let mut rng = streams.rng(trial, Role::UserChannel, 0, 0);
    let half_pi = T::pi() / T::lit(2.0);
    let mean = (T::unit_uniform(&mut rng) - T::lit(0.5)) * T::pi();
    let support = T::lit(cfg.aoa_support);
    let lam = T::lit(cfg.carrier_wavelength);
    let d = T::lit(cfg.rx_spacing());
    let mut h = CVector::zeros(n);
    for _ in 0..ng {
        let aoa = (mean + (T::unit_uniform(&mut rng) - T::lit(0.5)) * support).max(-half_pi).min(half_pi);
        let gain = complex_normal(&mut rng, T::one() / T::lit(ng as f64));
        h += steering_unchecked(n, phase_shift_from_angle(aoa, d, lam)?) * gain;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cov::Method;
    use crate::linalg::{frobenius, hermitize, max_abs_diff};
    use crate::num::Complex;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn est(m: CMatrix<f64>) -> CovEstimate<f64> {
        CovEstimate::new(m, Method::Ls, 1)
    }

    fn random_pd(n: usize, rng: &mut impl Rng) -> CMatrix<f64> {
        let a = CMatrix::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        hermitize(&(&a * a.adjoint())) + CMatrix::identity(n, n) * c(0.1, 0.0)
    }

    #[test]
    fn whitening_examples() {
        let w = whiten(&est(CMatrix::identity(3, 3) * c(4.0, 0.0))).unwrap();
        assert!(max_abs_diff(&w.map(|z| c(z.norm_sqr().sqrt(), 0.0)), &(CMatrix::identity(3, 3) * c(0.5, 0.0))) < 1e-15);
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(4.0, 0.0)]));
        let w = whiten(&est(d)).unwrap();
        let mag = w.map(|z| z.norm_sqr().sqrt());
        assert!((mag[(0, 0)] - 1.0).abs() < 1e-15 && (mag[(1, 1)] - 0.5).abs() < 1e-15);
        assert!(mag[(0, 1)] < 1e-15 && mag[(1, 0)] < 1e-15);
    }

    #[test]
    fn whitening_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in [2usize, 5, 16, 32] {
            let r = random_pd(n, &mut rng);
            let w = whiten(&est(r.clone())).unwrap();
            let e = &w * &r * w.adjoint() - CMatrix::identity(n, n);
            assert!(frobenius(&e) < 1e-8);
        }
    }

    #[test]
    fn indefinite_input_lists_eigenvalues() {
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(-2.0, 0.0), c(0.0, 0.0)]));
        match whiten(&est(d)) {
            Err(Error::NotPositiveDefinite(v)) => assert_eq!(v, vec![0.0, -2.0]),
            other => panic!("{other:?}"),
        }
    }

    fn link(h: CVector<f64>, r_hat: CMatrix<f64>, r: CMatrix<f64>) -> LinkRealization<f64> {
        LinkRealization {
            h,
            symbol_power: 1.3,
            estimate: est(r_hat),
            truth: CovEstimate::new(r, Method::True, 0),
        }
    }

    #[test]
    fn white_noise_rates() {
        let s2 = 0.4;
        let h = CVector::from_vec(vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.0, 1.0)]);
        let r = CMatrix::identity(3, 3) * c(s2, 0.0);
        let rep = rate_report(&link(h.clone(), r.clone(), r), 0.7).unwrap();
        let expect = (1.0 + h.norm_squared() * 1.3 / s2).log2();
        assert!((rep.c - expect).abs() < 1e-12);
        assert!((rep.c_hat - expect).abs() < 1e-12);
        assert!(!rep.outage);
        assert!((rep.rho - 0.7 * expect).abs() < 1e-12);
    }

    #[test]
    fn zero_backoff_gives_zero_throughput() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let r = random_pd(4, &mut rng);
        let h = CVector::from_fn(4, |_, _| c(rng.random(), rng.random()));
        let rep = rate_report(&link(h, CMatrix::identity(4, 4), r), 0.0).unwrap();
        assert_eq!(rep.rho, 0.0);
    }

    #[test]
    fn perfect_estimate_full_rate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let r = random_pd(6, &mut rng);
            let h = CVector::from_fn(6, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let rep = rate_report(&link(h, r.clone(), r), 1.0).unwrap();
            assert!((rep.c - rep.c_opt).abs() < 1e-10 && (rep.c_hat - rep.c_opt).abs() < 1e-10);
            assert!(!rep.outage || rep.c_hat - rep.c < 1e-12);
            assert!((rep.rho - rep.c_opt).abs() < 1e-10 || rep.rho == 0.0);
        }
    }

    #[test]
    fn underestimated_interference_overstates_rate() {
        let s2 = 0.5;
        let n = 4;
        let q = CVector::from_vec(vec![c(1.0, 0.0), c(0.3, 0.3), c(-0.2, 0.5), c(0.4, -0.1)]);
        let r = CMatrix::identity(n, n) * c(s2, 0.0) + &q * q.adjoint();
        let h = CVector::from_vec(vec![c(0.5, 0.1), c(0.2, -0.4), c(0.3, 0.0), c(-0.1, 0.2)]);
        let rep = rate_report(&link(h, CMatrix::identity(n, n) * c(s2, 0.0), r), 0.5).unwrap();
        assert!(rep.c_hat >= rep.c);
        assert!(rep.rho <= rep.c);
    }

    #[test]
    fn rejects_bad_delta() {
        let r = CMatrix::identity(2, 2);
        let h = CVector::from_element(2, c(1.0, 0.0));
        assert!(rate_report(&link(h, r.clone(), r), 1.5).is_err());
    }

    fn pair(c_: f64, c_hat: f64) -> RateReport {
        RateReport {
            c: c_,
            c_hat,
            c_opt: c_,
            delta: 1.0,
            rho: 0.0,
            outage: false,
        }
    }

    #[test]
    fn optimize_delta_examples() {
        let same: Vec<_> = (1..20).map(|k| pair(k as f64, k as f64)).collect();
        assert_eq!(optimize_delta(&same, 0.01).unwrap(), 1.0);
        let double: Vec<_> = (1..20).map(|k| pair(k as f64, 2.0 * k as f64)).collect();
        assert!(optimize_delta(&double, 0.01).unwrap() <= 0.5);
        assert!(optimize_delta(&[], 0.01).is_err());
        // all-zero throughput everywhere: ties resolve to the smallest delta
        assert_eq!(optimize_delta(&[pair(0.0, 1.0)], 0.1).unwrap(), 0.0);
    }

    #[test]
    fn optimize_delta_matches_fine_grid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let ens: Vec<_> = (0..500)
            .map(|_| {
                let c_ = 1.0 + 4.0 * rng.random::<f64>();
                pair(c_, c_ * (0.8 + 0.45 * rng.random::<f64>()))
            })
            .collect();
        let coarse = optimize_delta(&ens, 0.01).unwrap();
        let fine = optimize_delta(&ens, 0.001).unwrap();
        assert!((coarse - fine).abs() <= 0.01 + 1e-12, "{coarse} vs {fine}");
    }

    #[test]
    fn user_channel_has_unit_mean_power() {
        let cfg = ScenarioConfig::default();
        let streams = Streams::new(2);
        let mut acc = 0.0;
        let trials = 4000;
        for t in 0..trials {
            let h: CVector<f64> = draw_user_channel(&cfg, &streams, t).unwrap();
            acc += h.norm_squared() / cfg.n_bs_antennas as f64;
        }
        let mean = acc / trials as f64;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }
}
