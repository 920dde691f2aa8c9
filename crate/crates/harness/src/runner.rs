//! Trial execution and the CSV/JSON outputs of a run.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use intcorr::angles::{gec_estimate, music_estimate, sge_estimate};
use intcorr::cov::{self, clip_psd, denoise, ls_estimate, pbce_reconstruct};
use intcorr::gridless::gae_estimate;
use intcorr::link::{draw_user_channel, optimize_delta, rate_report, LinkRealization};
use intcorr::phase::AngleMethod;
use intcorr::scenario::{
    draw_scenario, generate_samples, interference_power, noise_for_rot, true_covariance, Role, Streams,
};
use intcorr::{CovEstimate, Method, PhaseShiftEstimate, RateReport, SampleBatch, ScenarioConfig, SdpSettings};

use crate::calibrate::{calibrate, EtaTable};
use crate::plan::ExperimentPlan;
use crate::stats::{fmt_f, mean_stderr};
use crate::HarnessError;

/// Everything drawn for one `(trial, ROT, T)` cell.
pub struct TrialData {
    pub cfg: ScenarioConfig,
    pub noise_power: f64,
    pub truth: CovEstimate,
    pub batch: SampleBatch,
    pub ls: CovEstimate,
    pub true_phases: Vec<f64>,
}

/// Draws a trial. Geometry and rays come from `ray_trial`, snapshots from
/// `trial`; the noise is set so that the trial hits `rot_db`.
pub fn prepare_trial(
    plan: &ExperimentPlan,
    streams: &Streams,
    trial: u64,
    ray_trial: u64,
    rot_db: f64,
    t: usize,
) -> intcorr::Result<TrialData> {
    let mut cfg = plan.scenario.clone();
    let rays = draw_scenario::<f64>(&cfg, streams, ray_trial)?;
    let ip = interference_power(&rays, &cfg)?;
    // no interference, no ROT to hit: keep the configured noise
    let noise_power = if ip > 0.0 { noise_for_rot(ip, rot_db) } else { cfg.noise_power };
    cfg.noise_power = noise_power;
    let truth = true_covariance(&rays, &cfg)?;
    let batch = generate_samples(&rays, &cfg, t, streams, trial)?;
    let ls = ls_estimate(&batch)?;
    Ok(TrialData {
        true_phases: rays.rx_phases(),
        cfg,
        noise_power,
        truth,
        batch,
        ls,
    })
}

/// Phase shifts from one back-end.
pub fn estimate_phases(
    method: Method,
    data: &TrialData,
    plan: &ExperimentPlan,
    settings: &SdpSettings,
    streams: &Streams,
    trial: u64,
) -> intcorr::Result<PhaseShiftEstimate> {
    let s = data.cfg.n_sources();
    match method {
        Method::PbceGae => gae_estimate(&data.batch.samples, settings, s),
        Method::PbceSge => sge_estimate(&data.ls, data.noise_power, s, settings),
        Method::PbceGec => {
            let seed = streams.seed() ^ Streams::stream_id(trial, Role::Estimator, 0, 0);
            gec_estimate(&data.batch, plan.t0, s, settings, seed)
        }
        Method::PbceMusic => music_estimate(&data.ls, data.noise_power, s, plan.music_grid),
        Method::PbceId => Ok(PhaseShiftEstimate::new(data.true_phases.iter().copied(), AngleMethod::Ideal)),
        Method::Ls | Method::True => Err(intcorr::Error::invalid(format!("{} has no phase shifts", method.as_str()))),
    }
}

/// One row of `trials.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub method: Method,
    pub t: usize,
    pub rot_db: f64,
    pub noise_power: f64,
    pub eta: Option<f64>,
    pub mse: Option<f64>,
    pub gamma_ls: Option<f64>,
    pub gamma_pbce: Option<f64>,
    pub rates: Option<RateReport>,
    /// Filled in once the back-off of the cell is known.
    pub delta: Option<f64>,
    pub rho: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub flags: String,
    pub error: Option<String>,
    /// Wall time in seconds; only written to `timings.csv`.
    pub wall_time: f64,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

fn run_method(
    method: Method,
    data: &TrialData,
    plan: &ExperimentPlan,
    settings: &SdpSettings,
    streams: &Streams,
    trial: u64,
) -> intcorr::Result<(CovEstimate, usize, bool, String)> {
    if method == Method::Ls {
        return Ok((data.ls.clone(), 0, true, String::new()));
    }
    let phases = estimate_phases(method, data, plan, settings, streams, trial)?;
    let est = pbce_reconstruct(&data.ls, &phases, data.noise_power)?;
    let d = &phases.diagnostics;
    let converged = d.solver_converged || d.solver_iterations == 0;
    Ok((est, d.solver_iterations, converged, d.flags.join("|")))
}

/// Estimate used by the receiver: the estimate with its interference part
/// clipped to PSD, plus the noise floor, so that whitening is defined.
fn receiver_estimate(est: &CovEstimate, noise_power: f64) -> intcorr::Result<CovEstimate> {
    let clipped = clip_psd(&denoise(est, noise_power))?;
    Ok(denoise(&clipped, -noise_power))
}

fn run_cell(
    plan: &ExperimentPlan,
    methods: &[Method],
    etas: &EtaTable,
    streams: &Streams,
    trial: u64,
    rot_idx: usize,
    t: usize,
) -> Vec<TrialRecord> {
    let rot_db = plan.rot_db[rot_idx];
    let ray_trial = if plan.fixed_rays { 0 } else { trial };
    let blank = |method: Method| TrialRecord {
        trial,
        method,
        t,
        rot_db,
        noise_power: f64::NAN,
        eta: None,
        mse: None,
        gamma_ls: None,
        gamma_pbce: None,
        rates: None,
        delta: None,
        rho: None,
        iterations: 0,
        converged: false,
        flags: String::new(),
        error: None,
        wall_time: 0.0,
    };
    let data = match prepare_trial(plan, streams, trial, ray_trial, rot_db, t) {
        Ok(d) => d,
        Err(e) => {
            return methods
                .iter()
                .map(|&m| TrialRecord { error: Some(e.to_string()), ..blank(m) })
                .collect()
        }
    };
    let gamma_ls = cov::gamma_ls(&data.truth, t).ok();
    let gamma_pbce = intcorr::cov::estimated_basis(data.cfg.n_bs_antennas, &data.true_phases)
        .and_then(|b| cov::gamma_pbce(&data.truth, &b, data.noise_power, t))
        .ok();
    let h = draw_user_channel::<f64>(&data.cfg, streams, trial);
    methods
        .iter()
        .map(|&method| {
            let eta = etas.get(rot_idx, method);
            let settings = plan.gridless.settings(eta.unwrap_or(0.5));
            let start = Instant::now();
            let outcome = run_method(method, &data, plan, &settings, streams, trial).and_then(|(est, it, conv, flags)| {
                let mse = cov::mse(&est, &data.truth)?;
                let h = h.clone()?;
                let link = LinkRealization {
                    h,
                    symbol_power: plan.user_power,
                    estimate: receiver_estimate(&est, data.noise_power)?,
                    truth: data.truth.clone(),
                };
                let rates = rate_report(&link, 1.0)?;
                Ok((mse, rates, it, conv, flags))
            });
            let wall_time = start.elapsed().as_secs_f64();
            let base = TrialRecord {
                noise_power: data.noise_power,
                eta,
                gamma_ls,
                gamma_pbce,
                wall_time,
                ..blank(method)
            };
            match outcome {
                Ok((mse, rates, iterations, converged, flags)) => TrialRecord {
                    mse: Some(mse),
                    rates: Some(rates),
                    iterations,
                    converged,
                    flags,
                    ..base
                },
                Err(e) => {
                    log::debug!("trial {trial} {} failed: {e}", method.as_str());
                    TrialRecord { error: Some(e.tag().to_string() + ": " + &e.to_string()), ..base }
                }
            }
        })
        .collect()
}

/// Per `(estimator, T, ROT)` summary.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: Method,
    pub t: usize,
    pub rot_db: f64,
    pub trials: usize,
    pub failures: usize,
    pub eta: Option<f64>,
    pub delta: Option<f64>,
    pub mse: (f64, f64),
    pub gamma_ls: f64,
    pub gamma_pbce: f64,
    pub c: (f64, f64),
    pub c_hat: (f64, f64),
    pub c_opt: (f64, f64),
    pub rho: (f64, f64),
    pub iterations: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaChoice {
    pub rot_db: f64,
    pub estimator: String,
    pub eta: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub plan: ExperimentPlan,
    pub seed: u64,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
    pub etas: Vec<EtaChoice>,
}

impl RunOutput {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.failed()).count()
    }

    pub fn aggregate(&self, method: Method, t: usize, rot_db: f64) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|a| a.method == method && a.t == t && a.rot_db == rot_db)
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, HarnessError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        b = b.num_threads(k);
    }
    b.build().map_err(|e| HarnessError::Config(format!("thread pool: {e}")))
}

/// Runs the whole plan. Results do not depend on the worker count: every
/// random draw is keyed by the trial, never by the worker.
pub fn run_plan(plan: &ExperimentPlan, seed: Option<u64>, threads: Option<usize>) -> Result<RunOutput, HarnessError> {
    plan.validate()?;
    let methods = plan.methods()?;
    let seed = seed.unwrap_or(plan.scenario.rng_seed);
    let streams = Streams::new(seed);
    let pool = pool(threads)?;
    pool.install(|| {
        let etas = calibrate(plan, &methods, &streams)?;
        let mut records = Vec::new();
        for &t in &plan.t_values {
            for rot_idx in 0..plan.rot_db.len() {
                let cell: Vec<Vec<TrialRecord>> = (0..plan.trials as u64)
                    .into_par_iter()
                    .map(|trial| run_cell(plan, &methods, &etas, &streams, trial, rot_idx, t))
                    .collect();
                records.extend(cell.into_iter().flatten());
            }
        }
        let aggregates = finish(plan, &methods, &mut records, &etas)?;
        let etas = etas.choices(plan);
        Ok(RunOutput {
            plan: plan.clone(),
            seed,
            records,
            aggregates,
            etas,
        })
    })
}

/// Second pass: picks the back-off per cell over its ensemble, fills in
/// the throughput of each trial and aggregates.
fn finish(
    plan: &ExperimentPlan,
    methods: &[Method],
    records: &mut [TrialRecord],
    etas: &EtaTable,
) -> Result<Vec<AggregateRow>, HarnessError> {
    let mut cells: BTreeMap<(usize, usize, usize), Vec<usize>> = BTreeMap::new();
    let rot_index = |r: f64| plan.rot_db.iter().position(|&x| x == r).unwrap_or(0);
    let t_index = |t: usize| plan.t_values.iter().position(|&x| x == t).unwrap_or(0);
    let m_index = |m: Method| methods.iter().position(|&x| x == m).unwrap_or(0);
    for (i, r) in records.iter().enumerate() {
        cells
            .entry((m_index(r.method), t_index(r.t), rot_index(r.rot_db)))
            .or_default()
            .push(i);
    }
    let mut out = Vec::new();
    for ((mi, ti, ri), idx) in cells {
        let reports: Vec<RateReport> = idx.iter().filter_map(|&i| records[i].rates).collect();
        let delta = if reports.is_empty() {
            None
        } else {
            Some(optimize_delta(&reports, plan.delta_step)?)
        };
        if let Some(d) = delta {
            for &i in &idx {
                if let Some(r) = records[i].rates {
                    records[i].delta = Some(d);
                    records[i].rho = Some(r.throughput_at(d));
                }
            }
        }
        let ok: Vec<&TrialRecord> = idx.iter().map(|&i| &records[i]).filter(|r| !r.failed()).collect();
        let col = |f: &dyn Fn(&TrialRecord) -> Option<f64>| mean_stderr(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
        let all = |f: &dyn Fn(&TrialRecord) -> Option<f64>| {
            mean_stderr(&idx.iter().filter_map(|&i| f(&records[i])).collect::<Vec<_>>()).0
        };
        out.push(AggregateRow {
            method: methods[mi],
            t: plan.t_values[ti],
            rot_db: plan.rot_db[ri],
            trials: idx.len(),
            failures: idx.len() - ok.len(),
            eta: etas.get(ri, methods[mi]),
            delta,
            mse: col(&|r| r.mse),
            gamma_ls: all(&|r| r.gamma_ls),
            gamma_pbce: all(&|r| r.gamma_pbce),
            c: col(&|r| r.rates.map(|x| x.c)),
            c_hat: col(&|r| r.rates.map(|x| x.c_hat)),
            c_opt: col(&|r| r.rates.map(|x| x.c_opt)),
            rho: col(&|r| r.rho),
            iterations: col(&|r| Some(r.iterations as f64)).0,
        });
    }
    Ok(out)
}

pub const TRIALS_HEADER: [&str; 17] = [
    "trial", "estimator", "t", "rot_db", "noise_power", "eta", "mse", "gamma_ls", "gamma_pbce", "c", "c_hat",
    "c_opt", "delta", "rho", "iterations", "converged", "error",
];

pub const AGGREGATE_HEADER: [&str; 21] = [
    "estimator", "t", "rot_db", "trials", "failures", "eta", "delta", "mse_mean", "mse_stderr", "gamma_ls",
    "gamma_pbce", "c_mean", "c_stderr", "c_hat_mean", "c_hat_stderr", "c_opt_mean", "c_opt_stderr", "rho_mean",
    "rho_stderr", "iterations_mean", "flagged",
];

fn f(x: f64) -> String {
    fmt_f(Some(x))
}

/// Writes `trials.csv`, `aggregate.csv`, `timings.csv` and `run.json`.
/// Only `timings.csv` holds wall-clock data.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("trials.csv"))?;
    w.write_record(TRIALS_HEADER)?;
    for r in &out.records {
        let rates = r.rates;
        w.write_record([
            r.trial.to_string(),
            r.method.as_str().to_string(),
            r.t.to_string(),
            f(r.rot_db),
            f(r.noise_power),
            fmt_f(r.eta),
            fmt_f(r.mse),
            fmt_f(r.gamma_ls),
            fmt_f(r.gamma_pbce),
            fmt_f(rates.map(|x| x.c)),
            fmt_f(rates.map(|x| x.c_hat)),
            fmt_f(rates.map(|x| x.c_opt)),
            fmt_f(r.delta),
            fmt_f(r.rho),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("aggregate.csv"))?;
    w.write_record(AGGREGATE_HEADER)?;
    for a in &out.aggregates {
        let flagged = out
            .records
            .iter()
            .any(|r| r.method == a.method && r.t == a.t && r.rot_db == a.rot_db && !r.flags.is_empty());
        w.write_record([
            a.method.as_str().to_string(),
            a.t.to_string(),
            f(a.rot_db),
            a.trials.to_string(),
            a.failures.to_string(),
            fmt_f(a.eta),
            fmt_f(a.delta),
            f(a.mse.0),
            f(a.mse.1),
            f(a.gamma_ls),
            f(a.gamma_pbce),
            f(a.c.0),
            f(a.c.1),
            f(a.c_hat.0),
            f(a.c_hat.1),
            f(a.c_opt.0),
            f(a.c_opt.1),
            f(a.rho.0),
            f(a.rho.1),
            f(a.iterations),
            flagged.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("timings.csv"))?;
    w.write_record(["trial", "estimator", "t", "rot_db", "wall_time_s", "flags"])?;
    for r in &out.records {
        w.write_record([
            r.trial.to_string(),
            r.method.as_str().to_string(),
            r.t.to_string(),
            f(r.rot_db),
            f(r.wall_time),
            r.flags.clone(),
        ])?;
    }
    w.flush()?;

    let meta = serde_json::json!({
        "tool": "intcorr",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": out.seed,
        "plan": out.plan,
        "eta": out.etas,
        "trials_failed": out.failures(),
        "trials_total": out.records.len(),
    });
    std::fs::write(dir.join("run.json"), serde_json::to_string_pretty(&meta).expect("json"))?;
    Ok(())
}
