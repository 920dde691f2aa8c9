use crate::cov::{CovEstimate, Method};
use crate::error::{Error, Result};
use crate::linalg::{trace_re, CMatrix, CVector, HermitianEigen};
use crate::num::{complex_normal, Complex, Real};

use super::channel::steering_unchecked;
use super::config::ScenarioConfig;
use super::rays::{synth_channel, RaySet};
use super::rng::{Role, Streams};

/// `T` received interference-plus-noise snapshots, optionally with the
/// interference and noise parts kept separately.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch<T: Real> {
    pub samples: Vec<CVector<T>>,
    pub interference: Option<Vec<CVector<T>>>,
    pub noise: Option<Vec<CVector<T>>>,
}

impl<T: Real> SampleBatch<T> {
    pub fn new(samples: Vec<CVector<T>>) -> Result<Self> {
        let batch = Self {
            samples,
            interference: None,
            noise: None,
        };
        batch.check()?;
        Ok(batch)
    }

    pub fn check(&self) -> Result<()> {
        let Some(first) = self.samples.first() else {
            return Err(Error::invalid("sample batch is empty"));
        };
        let n = first.len();
        if n == 0 {
            return Err(Error::invalid("samples must have at least one entry"));
        }
        if let Some(bad) = self.samples.iter().find(|s| s.len() != n) {
            return Err(Error::dims(n, bad.len()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_antennas(&self) -> usize {
        self.samples.first().map_or(0, |s| s.len())
    }

    /// Splits into consecutive windows of `size` snapshots; a trailing
    /// partial window is dropped.
    pub fn windows(&self, size: usize) -> Vec<SampleBatch<T>> {
        if size == 0 {
            return Vec::new();
        }
        self.samples
            .chunks_exact(size)
            .map(|c| SampleBatch {
                samples: c.to_vec(),
                interference: None,
                noise: None,
            })
            .collect()
    }

    pub fn scaled(&self, c: T) -> SampleBatch<T> {
        SampleBatch {
            samples: self.samples.iter().map(|s| s.map(|z| z * c)).collect(),
            interference: None,
            noise: None,
        }
    }
}

/// Hermitian square root of a PSD matrix.
fn psd_sqrt<T: Real>(m: &CMatrix<T>) -> Result<CMatrix<T>> {
    let eig = HermitianEigen::new(m)?;
    Ok(eig.reconstruct_with(|l| if l > T::zero() { l.sqrt() } else { T::zero() }))
}

/// Symbols `J^(l)(t) ~ CN(0, R_J)`, indexed `[t][l]`. Interferer `l` draws
/// from stream `(trial, Symbols, l, 0)`.
pub fn draw_symbols<T: Real>(
    cfg: &ScenarioConfig,
    n_samples: usize,
    streams: &Streams,
    trial: u64,
) -> Result<Vec<Vec<CVector<T>>>> {
    let ni = cfg.n_int_antennas;
    let root = psd_sqrt(&cfg.symbol_correlation::<T>()?)?;
    let mut rngs: Vec<_> = (0..cfg.n_interferers)
        .map(|l| streams.rng(trial, Role::Symbols, l as u64, 0))
        .collect();
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut per_l = Vec::with_capacity(cfg.n_interferers);
        for rng in rngs.iter_mut() {
            let w = CVector::from_fn(ni, |_, _| complex_normal(rng, T::one()));
            per_l.push(&root * w);
        }
        out.push(per_l);
    }
    Ok(out)
}

/// Unit-variance white noise, stream `(trial, Noise, 0, 0)`. Scale by
/// `sigma` to obtain `CN(0, sigma^2 I)`.
pub fn draw_unit_noise<T: Real>(n: usize, n_samples: usize, streams: &Streams, trial: u64) -> Vec<CVector<T>> {
    let mut rng = streams.rng(trial, Role::Noise, 0, 0);
    (0..n_samples)
        .map(|_| CVector::from_fn(n, |_, _| complex_normal(&mut rng, T::one())))
        .collect()
}

/// Per-ray sources `x_{i,l}(t) = v_{i,l} a_{N_I}(gamma_{i,l})^H J^(l)(t)`,
/// stacked in steering-basis column order.
pub fn inner_sources<T: Real>(rays: &RaySet<T>, ni: usize, symbols: &[CVector<T>]) -> CVector<T> {
    let ng = rays.n_rays;
    CVector::from_fn(rays.rays.len(), |s, _| {
        let (l, i) = (s / ng, s % ng);
        let r = rays.ray(l, i);
        let a = steering_unchecked(ni, r.tx_phase);
        r.gain * a.dotc(&symbols[l])
    })
}

/// `N(t) = sum_l G(l) J^(l)(t) + Z(t)` for `t = 1..T`, keeping both parts.
pub fn generate_samples<T: Real>(
    rays: &RaySet<T>,
    cfg: &ScenarioConfig,
    n_samples: usize,
    streams: &Streams,
    trial: u64,
) -> Result<SampleBatch<T>> {
    if n_samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let n = cfg.n_bs_antennas;
    let channels = synth_channel(rays, cfg)?;
    let symbols = draw_symbols::<T>(cfg, n_samples, streams, trial)?;
    let sigma = T::lit(cfg.noise_power.max(0.0).sqrt());
    let noise: Vec<CVector<T>> = draw_unit_noise(n, n_samples, streams, trial)
        .into_iter()
        .map(|z| z * Complex::new(sigma, T::zero()))
        .collect();
    let interference: Vec<CVector<T>> = symbols
        .iter()
        .map(|js| {
            channels
                .iter()
                .zip(js)
                .fold(CVector::zeros(n), |acc, (g, j)| acc + g * j)
        })
        .collect();
    let samples = interference.iter().zip(&noise).map(|(y, z)| y + z).collect();
    Ok(SampleBatch {
        samples,
        interference: Some(interference),
        noise: Some(noise),
    })
}

/// Interference-only correlation `sum_l G(l) R_J G(l)^H`.
pub fn interference_covariance<T: Real>(rays: &RaySet<T>, cfg: &ScenarioConfig) -> Result<CMatrix<T>> {
    let rj = cfg.symbol_correlation::<T>()?;
    let n = cfg.n_bs_antennas;
    let channels = synth_channel(rays, cfg)?;
    Ok(channels
        .iter()
        .fold(CMatrix::zeros(n, n), |acc, g| acc + g * &rj * g.adjoint()))
}

/// `R = sum_l G(l) R_J G(l)^H + sigma^2 I` using `cfg.noise_power`.
pub fn true_covariance<T: Real>(rays: &RaySet<T>, cfg: &ScenarioConfig) -> Result<CovEstimate<T>> {
    let n = cfg.n_bs_antennas;
    let mut r = interference_covariance(rays, cfg)?;
    let s2 = T::lit(cfg.noise_power);
    for k in 0..n {
        r[(k, k)] += Complex::new(s2, T::zero());
    }
    Ok(CovEstimate::new(r, Method::True, 0))
}

/// Mean interference power per antenna, `trace(R_int) / N`.
pub fn interference_power<T: Real>(rays: &RaySet<T>, cfg: &ScenarioConfig) -> Result<T> {
    let r = interference_covariance(rays, cfg)?;
    Ok(trace_re(&r) / T::lit(cfg.n_bs_antennas as f64))
}

/// Noise power that yields the requested rise over thermal for a fixed
/// interference power.
pub fn noise_for_rot(interference_power: f64, rot_db: f64) -> f64 {
    interference_power / 10f64.powf(rot_db / 10.0)
}

/// Rise over thermal in dB, `10 log10(trace(R) / (N sigma^2) - 1)`.
/// Returns `-inf` when there is no interference.
pub fn rot_of<T: Real>(r: &CMatrix<T>, noise_power: T) -> Result<f64> {
    if !(noise_power > T::zero()) {
        return Err(Error::invalid("noise power must be positive"));
    }
    let n = T::lit(r.nrows() as f64);
    let ratio = (trace_re(r) / (n * noise_power)).as_f64() - 1.0;
    if ratio <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(10.0 * ratio.log10())
}
