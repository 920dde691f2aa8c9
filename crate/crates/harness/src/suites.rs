//! Validation suites. Each criterion returns a [`CriterionResult`]; the
//! CLI `validate` command and the acceptance test print them.

use std::fmt;
use std::time::Instant;

use rand::Rng;

use intcorr::angles::{music_estimate, sge_estimate};
use intcorr::cov::{gamma_pbce_literal, gaussian_product_variance_oracle, estimated_basis};
use intcorr::gridless::{gae_estimate, vandermonde_decompose, AtomicDecomposition, ToeplitzPsd};
use intcorr::linalg::{CMatrix, CVector};
use intcorr::link::{rate_report, LinkRealization};
use intcorr::num::cyclic_distance;
use intcorr::scenario::{draw_scenario, steering_vector, true_covariance, Role, Streams};
use intcorr::{Complex, CovEstimate, Method, ScenarioConfig, SdpSettings};

use crate::plan::{ExperimentPlan, GridlessPlan};
use crate::runner::{run_plan, write_outputs, RunOutput, TrialRecord};
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub elapsed: f64,
    /// Wall-clock budget in seconds, part of the verdict when present.
    pub budget: Option<f64>,
}

impl CriterionResult {
    fn new(id: u8, name: &str, ok: bool, detail: String, start: Instant, budget: Option<f64>) -> Self {
        let elapsed = start.elapsed().as_secs_f64();
        let in_time = budget.is_none_or(|b| elapsed < b);
        let detail = if in_time {
            detail
        } else {
            format!("{detail}; over budget ({elapsed:.1} s > {:.0} s)", budget.unwrap())
        };
        Self {
            id,
            name: name.to_string(),
            pass: ok && in_time,
            detail,
            elapsed,
            budget,
        }
    }
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}. {}: {} ({:.1} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    MseAnalysis,
    Appendix,
    Recovery,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mse-analysis" => Some(Suite::MseAnalysis),
            "appendix" => Some(Suite::Appendix),
            "recovery" => Some(Suite::Recovery),
            _ => None,
        }
    }

    pub fn run(self, seed: u64) -> Result<Vec<CriterionResult>, HarnessError> {
        Ok(match self {
            Suite::MseAnalysis => vec![
                closed_form_ls(&ClosedFormParams::default(), seed)?,
                closed_form_pbce(&ClosedFormParams::default(), seed)?,
            ],
            Suite::Appendix => vec![appendix_identity(5, 1_000_000, seed)?],
            Suite::Recovery => vec![
                gridless_recovery(&RecoveryParams::default(), seed)?,
                exact_covariance(seed)?,
            ],
        })
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Fixed-ray scenario for the closed-form checks.
#[derive(Debug, Clone)]
pub struct ClosedFormParams {
    pub n: usize,
    pub interferers: usize,
    pub rays: usize,
    pub t_values: Vec<usize>,
    pub trials: usize,
    pub rot_db: f64,
    pub tolerance: f64,
}

impl Default for ClosedFormParams {
    fn default() -> Self {
        Self {
            n: 8,
            interferers: 2,
            rays: 2,
            t_values: vec![2, 4, 8],
            trials: 10_000,
            rot_db: 0.0,
            tolerance: 0.03,
        }
    }
}

fn closed_form_plan(p: &ClosedFormParams, method: &str) -> ExperimentPlan {
    ExperimentPlan {
        scenario: ScenarioConfig {
            n_bs_antennas: p.n,
            n_interferers: p.interferers,
            n_rays: p.rays,
            ..ScenarioConfig::default()
        },
        rot_db: vec![p.rot_db],
        t_values: p.t_values.clone(),
        estimators: vec![method.to_string()],
        trials: p.trials,
        delta_step: 0.01,
        fixed_rays: true,
        t0: 1,
        music_grid: 1000,
        user_power: 1.0,
        gridless: GridlessPlan::default(),
        out_dir: None,
    }
}

/// Monte-Carlo LS error against `trace^2(R) / (T N^2)`.
pub fn closed_form_ls(p: &ClosedFormParams, seed: u64) -> Result<CriterionResult, HarnessError> {
    let start = Instant::now();
    let out = run_plan(&closed_form_plan(p, "LS"), Some(seed), None)?;
    let mut ok = out.failures() == 0;
    let mut parts = Vec::new();
    for &t in &p.t_values {
        let a = out.aggregate(Method::Ls, t, p.rot_db).expect("cell");
        let e = rel(a.mse.0, a.gamma_ls);
        ok &= e < p.tolerance;
        parts.push(format!("T={t} rel err {:.2}%", 100.0 * e));
    }
    Ok(CriterionResult::new(1, "closed-form LS error", ok, parts.join(", "), start, Some(60.0)))
}

/// Monte-Carlo PBCE error with the true phase shifts against the closed
/// form. The variant with the projector inside the noise term is printed
/// for comparison.
pub fn closed_form_pbce(p: &ClosedFormParams, seed: u64) -> Result<CriterionResult, HarnessError> {
    let start = Instant::now();
    let plan = closed_form_plan(p, "PBCE-ID");
    let out = run_plan(&plan, Some(seed), None)?;
    let mut ok = out.failures() == 0;
    let mut parts = Vec::new();
    // the literal variant, evaluated on the frozen scenario
    let streams = Streams::new(seed);
    let rays = draw_scenario::<f64>(&plan.scenario, &streams, 0)?;
    let probe = &out.records[0];
    let mut cfg = plan.scenario.clone();
    cfg.noise_power = probe.noise_power;
    let truth = true_covariance(&rays, &cfg)?;
    let basis = estimated_basis(p.n, &rays.rx_phases())?;
    for &t in &p.t_values {
        let a = out.aggregate(Method::PbceId, t, p.rot_db).expect("cell");
        let e = rel(a.mse.0, a.gamma_pbce);
        let lit = gamma_pbce_literal(&truth, &basis, cfg.noise_power, t)?;
        ok &= e < p.tolerance;
        parts.push(format!(
            "T={t} rel err {:.2}% (projector-on-R variant off by {:.1}%)",
            100.0 * e,
            100.0 * rel(a.mse.0, lit)
        ));
    }
    Ok(CriterionResult::new(2, "closed-form PBCE error", ok, parts.join(", "), start, Some(120.0)))
}

/// Empirical variance of `x y^*` against `var_x var_y`.
pub fn appendix_identity(triples: usize, draws: usize, seed: u64) -> Result<CriterionResult, HarnessError> {
    let start = Instant::now();
    let streams = Streams::new(seed);
    let mut rng = streams.rng(0, Role::Oracle, 3, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..triples {
        let vx = 0.1 + 9.9 * rng.random::<f64>();
        let vy = 0.1 + 9.9 * rng.random::<f64>();
        let xi = Complex::from_polar(rng.random::<f64>(), std::f64::consts::TAU * rng.random::<f64>());
        let (analytic, empirical) = gaussian_product_variance_oracle(vx, vy, xi, draws, &mut rng)?;
        worst = worst.max(rel(empirical, analytic));
    }
    Ok(CriterionResult::new(
        3,
        "product variance identity",
        worst < 0.02,
        format!("{triples} triples x {draws} draws, worst rel err {:.3}%", 100.0 * worst),
        start,
        Some(30.0),
    ))
}

#[derive(Debug, Clone)]
pub struct RecoveryParams {
    pub instances: usize,
    pub n: usize,
    pub max_atoms: usize,
    pub snapshots: usize,
    pub settings: SdpSettings,
}

impl Default for RecoveryParams {
    fn default() -> Self {
        Self {
            instances: 100,
            n: 16,
            max_atoms: 3,
            snapshots: 4,
            settings: SdpSettings {
                eta: 0.003,
                eps: 1e-9,
                feas_tol: 1e-7,
                max_iter: 50_000,
                ..SdpSettings::default()
            },
        }
    }
}

fn separated_phases<R: Rng>(k: usize, min_sep: f64, rng: &mut R) -> Vec<f64> {
    let mut f: Vec<f64> = Vec::with_capacity(k);
    while f.len() < k {
        let c = rng.random::<f64>() - 0.5;
        if f.iter().all(|&x| cyclic_distance(x, c) >= min_sep) {
            f.push(c);
        }
    }
    f.sort_by(f64::total_cmp);
    f
}

/// Largest distance from any phase in either set to the nearest in the other.
pub fn matching_error(est: &[f64], truth: &[f64]) -> f64 {
    if est.len() != truth.len() {
        return f64::INFINITY;
    }
    let d = |x: &[f64], y: &[f64]| {
        x.iter()
            .map(|&a| y.iter().map(|&b| cyclic_distance(a, b)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    d(est, truth).max(d(truth, est))
}

/// Noiseless recovery by GAE and exactness of the Vandermonde step.
pub fn gridless_recovery(p: &RecoveryParams, seed: u64) -> Result<CriterionResult, HarnessError> {
    let start = Instant::now();
    let streams = Streams::new(seed);
    let n = p.n;
    let (mut worst_gae, mut worst_vd, mut worst_pow) = (0.0f64, 0.0f64, 0.0f64);
    let mut misses = 0;
    for i in 0..p.instances as u64 {
        let mut rng = streams.rng(i, Role::Oracle, 4, 0);
        let k = rng.random_range(1..=p.max_atoms);
        let truth = separated_phases(k, 1.0 / n as f64, &mut rng);
        let steer: Vec<CVector<f64>> = truth.iter().map(|&b| steering_vector(n, b)).collect::<Result<_, _>>()?;
        let batch: Vec<CVector<f64>> = (0..p.snapshots)
            .map(|_| {
                steer.iter().fold(CVector::zeros(n), |acc, a| {
                    let g = Complex::from_polar(0.5 + rng.random::<f64>(), std::f64::consts::TAU * rng.random::<f64>());
                    acc + a * g
                })
            })
            .collect();
        match gae_estimate(&batch, &p.settings, k) {
            Ok(est) => {
                let e = matching_error(est.values(), &truth);
                if e > 1e-3 {
                    misses += 1;
                }
                worst_gae = worst_gae.max(e);
            }
            Err(_) => misses += 1,
        }
        // constructed Toeplitz input
        let powers: Vec<f64> = (0..k).map(|_| 0.2 + rng.random::<f64>()).collect();
        let dec = AtomicDecomposition {
            phases: truth.clone(),
            powers: powers.clone(),
            relative_residual: 0.0,
        };
        let q = ToeplitzPsd::from_matrix(&dec.reconstruct(n))?;
        let got = vandermonde_decompose(&q, 1e-9)?;
        worst_vd = worst_vd.max(matching_error(&got.phases, &truth));
        for (z, pw) in truth.iter().zip(&powers) {
            let j = (0..got.len())
                .min_by(|&a, &b| cyclic_distance(got.phases[a], *z).total_cmp(&cyclic_distance(got.phases[b], *z)))
                .expect("atoms");
            worst_pow = worst_pow.max(rel(got.powers[j], *pw));
        }
    }
    let ok = misses == 0 && worst_vd < 1e-6 && worst_pow < 1e-6;
    Ok(CriterionResult::new(
        4,
        "gridless recovery",
        ok,
        format!(
            "{} instances: GAE misses {misses}, worst {worst_gae:.2e} cycles; Vandermonde worst phase {worst_vd:.2e}, power rel {worst_pow:.2e}",
            p.instances
        ),
        start,
        Some(300.0),
    ))
}

fn covariance(n: usize, atoms: &[(f64, f64)], noise: f64) -> Result<CovEstimate, HarnessError> {
    let mut r = CMatrix::identity(n, n) * Complex::new(noise, 0.0);
    for &(b, p) in atoms {
        let a = steering_vector::<f64>(n, b)?;
        r += (&a * a.adjoint()) * Complex::new(p, 0.0);
    }
    Ok(CovEstimate::new(r, Method::True, 0))
}

/// SGE and MUSIC fed the exact correlation of well-separated atoms.
pub fn exact_covariance(seed: u64) -> Result<CriterionResult, HarnessError> {
    let start = Instant::now();
    let streams = Streams::new(seed);
    let settings = SdpSettings {
        eta: 1e-4,
        eps: 1e-12,
        feas_tol: 1e-10,
        max_iter: 200_000,
        rank_tol: 1e-8,
        ..SdpSettings::default()
    };
    let n_grid = 1000;
    let (mut worst_sge, mut worst_music) = (0.0f64, 0.0f64);
    let cases = 30;
    for i in 0..cases {
        let mut rng = streams.rng(i, Role::Oracle, 5, 0);
        let n = 16;
        let k = 1 + (i as usize % 3);
        let truth = separated_phases(k, 1.0 / n as f64, &mut rng);
        let atoms: Vec<(f64, f64)> = truth.iter().map(|&b| (b, 0.5 + rng.random::<f64>())).collect();
        let r = covariance(n, &atoms, 0.1)?;
        let sge = sge_estimate(&r, 0.1, k, &settings)?;
        worst_sge = worst_sge.max(matching_error(sge.values(), &truth));
        let music = music_estimate(&r, 0.1, k, n_grid)?;
        worst_music = worst_music.max(matching_error(music.values(), &truth));
    }
    let ok = worst_sge < 1e-6 && worst_music <= 1.0 / n_grid as f64;
    Ok(CriterionResult::new(
        5,
        "exact-correlation SGE and MUSIC",
        ok,
        format!("{cases} cases: SGE worst {worst_sge:.2e}, MUSIC worst {worst_music:.2e} cycles"),
        start,
        None,
    ))
}

/// Mean and standard error of the per-trial difference `a - b` over the
/// trials where both succeeded.
pub fn paired_difference(out: &RunOutput, a: Method, b: Method, t: usize, rot: f64) -> (f64, f64, usize) {
    paired_on(out, a, b, t, rot, |r| r.mse)
}

pub fn paired_on(
    out: &RunOutput,
    a: Method,
    b: Method,
    t: usize,
    rot: f64,
    f: impl Fn(&TrialRecord) -> Option<f64>,
) -> (f64, f64, usize) {
    let pick = |m: Method| -> Vec<&TrialRecord> {
        out.records
            .iter()
            .filter(|r| r.method == m && r.t == t && r.rot_db == rot)
            .collect()
    };
    let (ra, rb) = (pick(a), pick(b));
    let diffs: Vec<f64> = ra
        .iter()
        .filter_map(|x| {
            let y = rb.iter().find(|y| y.trial == x.trial)?;
            Some(f(x)? - f(y)?)
        })
        .collect();
    let (m, s) = crate::stats::mean_stderr(&diffs);
    (m, s, diffs.len())
}

/// Ratio of means within which two estimators count as comparable, about
/// 1.8 dB on a log MSE axis.
pub const COMPARABLE_RATIO: f64 = 1.5;

/// MSE ordering `ID <= {GAE ~ GEC ~ MUSIC} < SGE < LS`. `a < b` needs the
/// paired per-trial difference below -2 standard errors, `a <= b` needs it
/// below +2 standard errors, and `a ~ b` needs the means within
/// [`COMPARABLE_RATIO`] of each other.
pub fn mse_ordering(out: &RunOutput, t: usize, rot: f64) -> (bool, Vec<String>) {
    use Method::*;
    let mut ok = true;
    let mut lines = Vec::new();
    let mean = |m: Method| out.aggregate(m, t, rot).map(|a| a.mse.0).unwrap_or(f64::NAN);
    let mut check = |a: Method, b: Method, rel: &str| {
        let (d, s, n) = paired_difference(out, a, b, t, rot);
        let (ma, mb) = (mean(a), mean(b));
        let pass = n > 1
            && match rel {
                "<" => d < -2.0 * s,
                "<=" => d <= 2.0 * s,
                _ => ma.max(mb) <= COMPARABLE_RATIO * ma.min(mb),
            };
        ok &= pass;
        let stat = if rel == "~" {
            format!("ratio {:.2}", ma.max(mb) / ma.min(mb))
        } else {
            format!("diff {d:.3e} +- {s:.1e}")
        };
        lines.push(format!(
            "{} {rel} {}: {stat} {}",
            a.as_str(),
            b.as_str(),
            if pass { "ok" } else { "VIOLATED" }
        ));
    };
    for g in [PbceGae, PbceGec, PbceMusic] {
        check(PbceId, g, "<=");
        check(g, PbceSge, "<");
    }
    check(PbceGae, PbceGec, "~");
    check(PbceGae, PbceMusic, "~");
    check(PbceGec, PbceMusic, "~");
    check(PbceSge, Ls, "<");
    (ok, lines)
}

/// Plan with the default scenario for the trend criteria.
pub fn trend_plan(rot_db: Vec<f64>, t_values: Vec<usize>, trials: usize, estimators: &[Method]) -> ExperimentPlan {
    ExperimentPlan {
        scenario: ScenarioConfig::default(),
        rot_db,
        t_values,
        estimators: estimators.iter().map(|m| m.as_str().to_string()).collect(),
        trials,
        delta_step: 0.01,
        fixed_rays: false,
        t0: 1,
        music_grid: 1000,
        user_power: 1.0,
        gridless: GridlessPlan::default(),
        out_dir: None,
    }
}

pub const PBCE_ESTIMATED: [Method; 4] = [Method::PbceGae, Method::PbceSge, Method::PbceGec, Method::PbceMusic];

pub fn all_estimators() -> Vec<Method> {
    let mut v = vec![Method::Ls, Method::PbceId];
    v.extend(PBCE_ESTIMATED);
    v
}

/// MSE ordering at T = 2 and the lowest ROT of the sweep.
pub fn mse_trend(trials: usize, seed: u64, threads: Option<usize>) -> Result<(CriterionResult, RunOutput), HarnessError> {
    let start = Instant::now();
    let plan = trend_plan(vec![-10.0, 0.0, 10.0], vec![2], trials, &all_estimators());
    let out = run_plan(&plan, Some(seed), threads)?;
    let (ok, lines) = mse_ordering(&out, 2, -10.0);
    let r = CriterionResult::new(6, "MSE ordering at -10 dB", ok, lines.join("; "), start, None);
    Ok((r, out))
}

/// Throughput against T at 0 dB: non-decreasing within 2 standard errors
/// and every PBCE variant above LS.
pub fn throughput_trend(trials: usize, seed: u64, threads: Option<usize>) -> Result<(CriterionResult, RunOutput), HarnessError> {
    let start = Instant::now();
    let ts: Vec<usize> = (2..=10).collect();
    let plan = trend_plan(vec![0.0], ts.clone(), trials, &all_estimators());
    let out = run_plan(&plan, Some(seed), threads)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for m in all_estimators() {
        for w in ts.windows(2) {
            let (a, b) = (out.aggregate(m, w[0], 0.0).expect("cell"), out.aggregate(m, w[1], 0.0).expect("cell"));
            let slack = 2.0 * (a.rho.1 * a.rho.1 + b.rho.1 * b.rho.1).sqrt();
            if b.rho.0 < a.rho.0 - slack {
                ok = false;
                notes.push(format!("{} drops T={}->{}", m.as_str(), w[0], w[1]));
            }
        }
    }
    for m in PBCE_ESTIMATED.iter().copied().chain([Method::PbceId]) {
        for &t in &ts {
            let (a, l) = (out.aggregate(m, t, 0.0).expect("cell"), out.aggregate(Method::Ls, t, 0.0).expect("cell"));
            if a.rho.0 <= l.rho.0 {
                ok = false;
                notes.push(format!("{} not above LS at T={t}", m.as_str()));
            }
        }
    }
    let curve = |m: Method| {
        ts.iter()
            .map(|&t| format!("{:.2}", out.aggregate(m, t, 0.0).expect("cell").rho.0))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let curves = all_estimators()
        .into_iter()
        .map(|m| format!("{} [{}]", m.as_str(), curve(m)))
        .collect::<Vec<_>>()
        .join(", ");
    let detail = format!(
        "{curves}{}",
        if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
    );
    Ok((CriterionResult::new(7, "throughput vs T", ok, detail, start, None), out))
}

/// With the exact correlation all three rates coincide.
pub fn rate_sanity(links: usize, seed: u64) -> Result<CriterionResult, HarnessError> {
    let start = Instant::now();
    let streams = Streams::new(seed);
    let cfg = ScenarioConfig::default();
    let mut worst: f64 = 0.0;
    for i in 0..links as u64 {
        let rays = draw_scenario::<f64>(&cfg, &streams, i)?;
        let mut c = cfg.clone();
        c.noise_power = 0.1 + streams.rng(i, Role::Oracle, 8, 0).random::<f64>();
        let truth = true_covariance(&rays, &c)?;
        let link = LinkRealization {
            h: intcorr::link::draw_user_channel(&c, &streams, i)?,
            symbol_power: 1.0,
            estimate: truth.clone(),
            truth,
        };
        let r = rate_report(&link, 1.0)?;
        worst = worst.max((r.c - r.c_hat).abs()).max((r.c - r.c_opt).abs());
    }
    Ok(CriterionResult::new(
        8,
        "rates with exact correlation",
        worst < 1e-10,
        format!("{links} links, worst |C - C_hat|, |C - C_opt| = {worst:.2e}"),
        start,
        None,
    ))
}

/// Runs `plan` twice with the same seed and thread count and compares the
/// written files byte for byte; a run with another thread count is
/// compared too.
pub fn determinism(plan: &ExperimentPlan, seed: u64, dir: &std::path::Path) -> Result<CriterionResult, HarnessError> {
    let start = Instant::now();
    let mut same = true;
    let mut notes = Vec::new();
    let runs = [("a", Some(2)), ("b", Some(2)), ("c", Some(1))];
    for (name, threads) in runs {
        write_outputs(&run_plan(plan, Some(seed), threads)?, &dir.join(name))?;
    }
    for f in ["trials.csv", "aggregate.csv", "run.json"] {
        let a = std::fs::read(dir.join("a").join(f))?;
        for other in ["b", "c"] {
            if std::fs::read(dir.join(other).join(f))? != a {
                same = false;
                notes.push(format!("{f} differs in run {other}"));
            }
        }
    }
    let detail = if same {
        "trials.csv, aggregate.csv, run.json identical across reruns and thread counts".to_string()
    } else {
        notes.join("; ")
    };
    Ok(CriterionResult::new(9, "determinism", same, detail, start, None))
}
