use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianEigen};
use crate::num::{Complex, Real};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default carrier: 28 GHz.
pub const DEFAULT_CARRIER_HZ: f64 = 28e9;

/// Correlation of the symbols sent by one interferer.
///
/// Accepts a scalar (`c * I`), a list (diagonal) or a full matrix given as
/// rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolPower {
    Scalar(f64),
    Diagonal(Vec<f64>),
    Full(Vec<Vec<[f64; 2]>>),
}

impl Default for SymbolPower {
    fn default() -> Self {
        SymbolPower::Scalar(1.0)
    }
}

impl SymbolPower {
    pub fn matrix<T: Real>(&self, n: usize) -> Result<CMatrix<T>> {
        let m = match self {
            SymbolPower::Scalar(c) => {
                CMatrix::from_diagonal_element(n, n, Complex::new(T::lit(*c), T::zero()))
            }
            SymbolPower::Diagonal(d) => {
                if d.len() != n {
                    return Err(Error::Config(format!(
                        "symbol_power diagonal has {} entries, expected {n}",
                        d.len()
                    )));
                }
                let mut m = CMatrix::zeros(n, n);
                for (i, v) in d.iter().enumerate() {
                    m[(i, i)] = Complex::new(T::lit(*v), T::zero());
                }
                m
            }
            SymbolPower::Full(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Config(format!("symbol_power must be {n}x{n}")));
                }
                CMatrix::from_fn(n, n, |i, j| {
                    Complex::new(T::lit(rows[i][j][0]), T::lit(rows[i][j][1]))
                })
            }
        };
        Ok(m)
    }
}

fn default_one() -> usize {
    1
}

fn default_support() -> f64 {
    PI / 6.0
}

fn default_aod() -> [f64; 2] {
    [0.0, PI]
}

fn default_wavelength() -> f64 {
    SPEED_OF_LIGHT / DEFAULT_CARRIER_HZ
}

fn default_cell_side() -> f64 {
    500.0
}

fn default_fraction() -> f64 {
    0.5
}

/// Generative description of the base station, the interferers and their
/// rays. Lengths are in meters and angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_bs_antennas: usize,
    pub n_interferers: usize,
    pub n_rays: usize,
    #[serde(default = "default_one")]
    pub n_int_antennas: usize,
    pub noise_power: f64,
    #[serde(default)]
    pub symbol_power: SymbolPower,
    #[serde(default = "default_wavelength")]
    pub carrier_wavelength: f64,
    /// Defaults to half a wavelength.
    #[serde(default)]
    pub tx_spacing: Option<f64>,
    /// Defaults to half a wavelength.
    #[serde(default)]
    pub rx_spacing: Option<f64>,
    /// Mean AoA per interferer. When absent the means come from the cell
    /// geometry (see [`super::geometry::place_interferers`]).
    #[serde(default)]
    pub aoa_mean: Option<Vec<f64>>,
    #[serde(default = "default_support")]
    pub aoa_support: f64,
    #[serde(default = "default_aod")]
    pub aod_interval: [f64; 2],
    #[serde(default)]
    pub rng_seed: u64,
    /// Per-ray path power `P[l][i]`; all ones when absent.
    #[serde(default)]
    pub path_power: Option<Vec<Vec<f64>>>,
    /// Side of the square cells used by the geometry.
    #[serde(default = "default_cell_side")]
    pub cell_side: f64,
    /// Position of each interferer along the main/secondary BS segment.
    #[serde(default = "default_fraction")]
    pub interferer_fraction: f64,
}

impl Default for ScenarioConfig {
    /// N = 32, L = 4, three rays, single-antenna interferers at 28 GHz.
    fn default() -> Self {
        Self {
            n_bs_antennas: 32,
            n_interferers: 4,
            n_rays: 3,
            n_int_antennas: 1,
            noise_power: 1.0,
            symbol_power: SymbolPower::default(),
            carrier_wavelength: default_wavelength(),
            tx_spacing: None,
            rx_spacing: None,
            aoa_mean: None,
            aoa_support: default_support(),
            aod_interval: default_aod(),
            rng_seed: 0,
            path_power: None,
            cell_side: default_cell_side(),
            interferer_fraction: default_fraction(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Number of steering columns `S = L * N_g`.
    pub fn n_sources(&self) -> usize {
        self.n_interferers * self.n_rays
    }

    pub fn rx_spacing(&self) -> f64 {
        self.rx_spacing.unwrap_or(self.carrier_wavelength / 2.0)
    }

    pub fn tx_spacing(&self) -> f64 {
        self.tx_spacing.unwrap_or(self.carrier_wavelength / 2.0)
    }

    pub fn path_power(&self, interferer: usize, ray: usize) -> f64 {
        self.path_power
            .as_ref()
            .map(|p| p[interferer][ray])
            .unwrap_or(1.0)
    }

    pub fn symbol_correlation<T: Real>(&self) -> Result<CMatrix<T>> {
        self.symbol_power.matrix(self.n_int_antennas)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_bs_antennas == 0 {
            return bad("n_bs_antennas must be positive".into());
        }
        if self.n_rays == 0 || self.n_int_antennas == 0 {
            return bad("n_rays and n_int_antennas must be positive".into());
        }
        if !(self.noise_power > 0.0) || !self.noise_power.is_finite() {
            return bad(format!("noise_power must be > 0, got {}", self.noise_power));
        }
        if !(self.carrier_wavelength > 0.0) {
            return bad("carrier_wavelength must be > 0".into());
        }
        let d_rx = self.rx_spacing();
        if !(d_rx > 0.0) || !(self.tx_spacing() > 0.0) {
            return bad("antenna spacings must be > 0".into());
        }
        if d_rx / self.carrier_wavelength > 0.5 + 1e-12 {
            return bad(format!(
                "rx_spacing / wavelength = {} exceeds 1/2 (phase ambiguity)",
                d_rx / self.carrier_wavelength
            ));
        }
        if !(self.aoa_support >= 0.0) {
            return bad("aoa_support must be >= 0".into());
        }
        if !(self.aod_interval[0] <= self.aod_interval[1]) {
            return bad("aod_interval must be ordered".into());
        }
        if let Some(m) = &self.aoa_mean {
            if m.len() != self.n_interferers {
                return bad(format!(
                    "aoa_mean has {} entries for {} interferers",
                    m.len(),
                    self.n_interferers
                ));
            }
        }
        if let Some(p) = &self.path_power {
            if p.len() != self.n_interferers
                || p.iter().any(|r| r.len() != self.n_rays || r.iter().any(|&x| !(x >= 0.0)))
            {
                return bad("path_power must be n_interferers x n_rays of values >= 0".into());
            }
        }
        if !(self.cell_side > 0.0) {
            return bad("cell_side must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.interferer_fraction) {
            return bad("interferer_fraction must lie in [0, 1]".into());
        }
        let rj = self.symbol_correlation::<f64>()?;
        let asym = (&rj - rj.adjoint()).norm();
        if asym > 1e-10 * (1.0 + rj.norm()) {
            return bad("symbol_power must be Hermitian".into());
        }
        let eig = HermitianEigen::new(&rj)?;
        if eig.min() < -1e-10 * (1.0 + eig.max().abs()) {
            return bad("symbol_power must be positive semidefinite".into());
        }
        Ok(())
    }

    /// `S = L * N_g < N`, required by the subspace back-ends.
    pub fn check_subspace_condition(&self) -> Result<()> {
        if self.n_sources() >= self.n_bs_antennas {
            return Err(Error::Config(format!(
                "S = L * N_g = {} must be smaller than N = {}",
                self.n_sources(),
                self.n_bs_antennas
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_json() {
        let cfg = ScenarioConfig::default();
        let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back);
        assert!((cfg.rx_spacing() / cfg.carrier_wavelength - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let json = r#"{"n_bs_antennas": 8, "n_interferers": 1, "n_rays": 1,
                       "noise_power": 1.0, "bogus": 3}"#;
        assert!(matches!(ScenarioConfig::from_json(json), Err(Error::Config(_))));
    }

    #[test]
    fn minimal_json_uses_defaults() {
        let json = r#"{"n_bs_antennas": 8, "n_interferers": 1, "n_rays": 2, "noise_power": 0.5}"#;
        let cfg = ScenarioConfig::from_json(json).unwrap();
        assert_eq!(cfg.n_int_antennas, 1);
        assert!((cfg.aoa_support - PI / 6.0).abs() < 1e-15);
        assert_eq!(cfg.n_sources(), 2);
    }

    #[test]
    fn symbol_power_forms() {
        let full: SymbolPower =
            serde_json::from_str("[[[2.0, 0.0], [0.0, 1.0]], [[0.0, -1.0], [2.0, 0.0]]]").unwrap();
        let m = full.matrix::<f64>(2).unwrap();
        assert_eq!(m[(0, 1)], Complex::new(0.0, 1.0));
        let diag: SymbolPower = serde_json::from_str("[1.0, 3.0]").unwrap();
        assert_eq!(diag.matrix::<f64>(2).unwrap()[(1, 1)].re, 3.0);
    }

    #[test]
    fn rejects_invalid_values() {
        let mut cfg = ScenarioConfig::default();
        cfg.noise_power = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.rx_spacing = Some(cfg.carrier_wavelength);
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.symbol_power = SymbolPower::Scalar(-1.0);
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.n_interferers = 11;
        assert!(cfg.check_subspace_condition().is_err());
    }
}
