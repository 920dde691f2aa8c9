use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::num::{complex_normal, Complex, Real};

use super::channel::{phase_shift_from_angle, steering_unchecked, SteeringBasis};
use super::config::ScenarioConfig;
use super::rng::{Role, Streams};

/// One propagation ray of one interferer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray<T: Real> {
    pub gain: Complex<T>,
    pub power: T,
    pub aoa: T,
    pub aod: T,
    /// Receive phase shift in cycles.
    pub rx_phase: T,
    /// Transmit phase shift in cycles.
    pub tx_phase: T,
}

/// All rays of all interferers. Ray `i` of interferer `l` is stored at
/// index `l * n_rays + i`, which is also its column in the steering basis.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySet<T: Real> {
    pub n_interferers: usize,
    pub n_rays: usize,
    pub rays: Vec<Ray<T>>,
}

impl<T: Real> RaySet<T> {
    pub fn ray(&self, interferer: usize, ray: usize) -> &Ray<T> {
        &self.rays[interferer * self.n_rays + ray]
    }

    pub fn rx_phases(&self) -> Vec<T> {
        self.rays.iter().map(|r| r.rx_phase).collect()
    }

    pub fn steering_basis(&self, n_antennas: usize) -> Result<SteeringBasis<T>> {
        SteeringBasis::new(n_antennas, &self.rx_phases())
    }

    /// Builds a ray set from explicit receive phases and gains, with zero
    /// transmit phases. Handy for constructed scenarios.
    pub fn from_phases(n_interferers: usize, n_rays: usize, phases: &[T], gains: &[Complex<T>]) -> Result<Self> {
        let s = n_interferers * n_rays;
        if phases.len() != s || gains.len() != s {
            return Err(Error::dims(s, format!("{} phases / {} gains", phases.len(), gains.len())));
        }
        let rays = phases
            .iter()
            .zip(gains)
            .map(|(&b, &g)| Ray {
                gain: g,
                power: g.norm_sqr(),
                aoa: (b * T::lit(2.0)).asin(),
                aod: T::zero(),
                rx_phase: b,
                tx_phase: T::zero(),
            })
            .collect();
        Ok(Self {
            n_interferers,
            n_rays,
            rays,
        })
    }
}

/// Draws AoAs uniformly on `[mean - support/2, mean + support/2]`, AoDs
/// uniformly on `aod_interval` and gains `CN(0, P)`. Each ray uses its own
/// stream `(trial, Ray, l, i)`.
pub fn draw_rayset<T: Real>(
    cfg: &ScenarioConfig,
    aoa_means: &[f64],
    streams: &Streams,
    trial: u64,
) -> Result<RaySet<T>> {
    if aoa_means.len() != cfg.n_interferers {
        return Err(Error::dims(cfg.n_interferers, aoa_means.len()));
    }
    let lam = T::lit(cfg.carrier_wavelength);
    let d_rx = T::lit(cfg.rx_spacing());
    let d_tx = T::lit(cfg.tx_spacing());
    let support = T::lit(cfg.aoa_support);
    let (aod_lo, aod_hi) = (T::lit(cfg.aod_interval[0]), T::lit(cfg.aod_interval[1]));
    let half = T::lit(0.5);
    let mut rays = Vec::with_capacity(cfg.n_sources());
    for (l, &mean) in aoa_means.iter().enumerate() {
        for i in 0..cfg.n_rays {
            let mut rng = streams.rng(trial, Role::Ray, l as u64, i as u64);
            let u_aoa = T::unit_uniform(&mut rng);
            let u_aod = T::unit_uniform(&mut rng);
            let power = T::lit(cfg.path_power(l, i));
            let gain = complex_normal(&mut rng, power);
            let aoa = T::lit(mean) + (u_aoa - half) * support;
            let aod = aod_lo + u_aod * (aod_hi - aod_lo);
            rays.push(Ray {
                gain,
                power,
                aoa,
                aod,
                rx_phase: phase_shift_from_angle(aoa, d_rx, lam)?,
                tx_phase: phase_shift_from_angle(aod, d_tx, lam)?,
            });
        }
    }
    Ok(RaySet {
        n_interferers: cfg.n_interferers,
        n_rays: cfg.n_rays,
        rays,
    })
}

/// `G(l) = sum_i v_{i,l} a_N(beta_{i,l}) a_{N_I}(gamma_{i,l})^H`, one matrix
/// of size `N x N_I` per interferer.
pub fn synth_channel<T: Real>(rays: &RaySet<T>, cfg: &ScenarioConfig) -> Result<Vec<CMatrix<T>>> {
    if rays.n_interferers != cfg.n_interferers || rays.n_rays != cfg.n_rays {
        return Err(Error::dims(
            format!("{}x{} rays", cfg.n_interferers, cfg.n_rays),
            format!("{}x{}", rays.n_interferers, rays.n_rays),
        ));
    }
    let n = cfg.n_bs_antennas;
    let ni = cfg.n_int_antennas;
    let mut out = Vec::with_capacity(rays.n_interferers);
    for l in 0..rays.n_interferers {
        let mut g = CMatrix::zeros(n, ni);
        for i in 0..rays.n_rays {
            let r = rays.ray(l, i);
            let a_rx = steering_unchecked(n, r.rx_phase);
            let a_tx = steering_unchecked(ni, r.tx_phase);
            g += (a_rx * a_tx.adjoint()) * r.gain;
        }
        out.push(g);
    }
    Ok(out)
}

/// Correlation of the per-ray sources, `R_x`, block diagonal with one
/// `N_g x N_g` block per interferer:
/// `E[x_i x_j^*] = v_i v_j^* a(gamma_i)^H R_J a(gamma_j)`.
pub fn inner_covariance<T: Real>(rays: &RaySet<T>, cfg: &ScenarioConfig) -> Result<CMatrix<T>> {
    let rj = cfg.symbol_correlation::<T>()?;
    let ni = cfg.n_int_antennas;
    let ng = rays.n_rays;
    let s = rays.rays.len();
    let mut rx = CMatrix::zeros(s, s);
    for l in 0..rays.n_interferers {
        for i in 0..ng {
            let ri = rays.ray(l, i);
            let ai = steering_unchecked(ni, ri.tx_phase);
            for j in 0..ng {
                let rjy = rays.ray(l, j);
                let aj = steering_unchecked(ni, rjy.tx_phase);
                let q = (ai.adjoint() * &rj * aj)[(0, 0)];
                rx[(l * ng + i, l * ng + j)] = ri.gain * rjy.gain.conj() * q;
            }
        }
    }
    Ok(rx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rank;

    fn cfg(l: usize, ng: usize) -> ScenarioConfig {
        ScenarioConfig {
            n_bs_antennas: 8,
            n_interferers: l,
            n_rays: ng,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn degenerate_support_gives_exact_mean() {
        let mut c = cfg(1, 1);
        c.aoa_support = 0.0;
        let rays: RaySet<f64> = draw_rayset(&c, &[0.0], &Streams::new(1), 0).unwrap();
        assert_eq!(rays.rays[0].aoa, 0.0);
        assert_eq!(rays.rays[0].rx_phase, 0.0);
    }

    #[test]
    fn zero_path_power_gives_zero_gain() {
        let mut c = cfg(1, 2);
        c.path_power = Some(vec![vec![0.0, 1.0]]);
        let rays: RaySet<f64> = draw_rayset(&c, &[0.3], &Streams::new(1), 0).unwrap();
        assert_eq!(rays.ray(0, 0).gain.norm(), 0.0);
        assert!(rays.ray(0, 1).gain.norm() > 0.0);
    }

    #[test]
    fn aoa_stays_in_support() {
        let c = cfg(2, 3);
        let rays: RaySet<f64> = draw_rayset(&c, &[0.2, -1.0], &Streams::new(5), 9).unwrap();
        for l in 0..2 {
            let mean = [0.2, -1.0][l];
            for i in 0..3 {
                let r = rays.ray(l, i);
                assert!((r.aoa - mean).abs() <= c.aoa_support / 2.0 + 1e-12);
                assert!(r.aod >= 0.0 && r.aod <= std::f64::consts::PI);
                assert!(r.rx_phase >= -0.5 && r.rx_phase <= 0.5);
            }
        }
    }

    #[test]
    fn single_unit_ray_channel_is_all_ones() {
        let c = cfg(1, 1);
        let rays = RaySet::from_phases(1, 1, &[0.0f64], &[Complex::new(1.0, 0.0)]).unwrap();
        let g = synth_channel(&rays, &c).unwrap();
        assert_eq!(g[0].shape(), (8, 1));
        assert!(g[0].iter().all(|z| (*z - Complex::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn zero_ray_is_inert() {
        let one = RaySet::from_phases(1, 1, &[0.2f64], &[Complex::new(0.7, -0.2)]).unwrap();
        let two = RaySet::from_phases(
            1,
            2,
            &[0.2f64, -0.1],
            &[Complex::new(0.7, -0.2), Complex::new(0.0, 0.0)],
        )
        .unwrap();
        let g1 = synth_channel(&one, &cfg(1, 1)).unwrap();
        let g2 = synth_channel(&two, &cfg(1, 2)).unwrap();
        assert!((&g1[0] - &g2[0]).norm() < 1e-15);
    }

    #[test]
    fn channel_rank_bounded_by_rays() {
        for (ng, ni) in [(1usize, 3usize), (2, 4), (3, 2), (4, 6)] {
            let mut c = cfg(1, ng);
            c.n_int_antennas = ni;
            let rays: RaySet<f64> = draw_rayset(&c, &[0.4], &Streams::new(3), ng as u64).unwrap();
            let g = synth_channel(&rays, &c).unwrap();
            assert!(rank(&g[0]) <= ng.min(8).min(ni));
        }
    }

    #[test]
    fn unit_variance_gains() {
        // empirical E|v|^2 over 1e5 draws of the (N=32, L=4, N_g=3) setup
        let c = ScenarioConfig::default();
        let means = [0.0, 1.0, 2.0, -1.5];
        let streams = Streams::new(11);
        let mut acc = 0.0;
        let mut count = 0usize;
        let trials = 100_000 / c.n_sources() + 1;
        for t in 0..trials as u64 {
            let rays: RaySet<f64> = draw_rayset(&c, &means, &streams, t).unwrap();
            for r in &rays.rays {
                acc += r.gain.norm_sqr();
                count += 1;
            }
        }
        let var = acc / count as f64;
        assert!((var - 1.0).abs() < 0.02, "empirical variance {var}");
    }
}
