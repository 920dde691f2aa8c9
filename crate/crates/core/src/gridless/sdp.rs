//! ADMM solver for the atomic-norm denoising SDP
//!
//! ```text
//! min  (1-eta)/T sum_t |N_t - Y_t|^2 + eta/2 (tau + tr Q)
//! s.t. [[Q, Y_t], [Y_t^H, tau]] >= 0   for every t,  Q Hermitian Toeplitz
//! ```
//!
//! Each bordered matrix gets a PSD copy `Z_t` and an (unscaled) multiplier
//! `L_t`. The `(Q, tau, Y)` step is closed form since the three blocks
//! touch disjoint entries of the bordered matrices; the `Z` step is an
//! eigenvalue clip.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, HermitianEigen};
use crate::num::{Complex, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Admm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSettings {
    /// Sparsity weight, strictly inside (0, 1).
    pub eta: f64,
    /// Relative objective change that ends the run.
    pub eps: f64,
    pub max_iter: usize,
    pub solver: SolverKind,
    /// Relative primal/dual residual required on top of `eps`.
    pub feas_tol: f64,
    /// Relative eigenvalue threshold for the numeric rank of `Q`.
    pub rank_tol: f64,
    /// Keep one trace row per iteration.
    pub record_trace: bool,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            eta: 0.5,
            eps: 1e-8,
            max_iter: 50_000,
            solver: SolverKind::Admm,
            feas_tol: 1e-6,
            rank_tol: 1e-6,
            record_trace: false,
        }
    }
}

impl SdpSettings {
    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::invalid(format!("eta = {} must lie in (0, 1)", self.eta)));
        }
        if !(self.eps > 0.0) || !(self.feas_tol > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(Error::invalid(format!("rank_tol = {} must lie in (0, 1)", self.rank_tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be positive"));
        }
        Ok(())
    }
}

/// Hermitian Toeplitz matrix stored by its first column.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzPsd<T: Real> {
    u: CVector<T>,
    /// Set when the smallest eigenvalue was checked to be `>= -1e-8 |Q|`.
    pub certified_psd: bool,
}

impl<T: Real> ToeplitzPsd<T> {
    /// Takes the first column; `u[0]` must be real up to rounding.
    pub fn from_first_column(mut u: CVector<T>) -> Self {
        if !u.is_empty() {
            u[0].im = T::zero();
        }
        Self { u, certified_psd: false }
    }

    /// Projects an arbitrary square matrix onto the Toeplitz subspace and
    /// certifies the result.
    pub fn from_matrix(m: &CMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dims("square matrix", format!("{}x{}", m.nrows(), m.ncols())));
        }
        let mut q = Self::from_first_column(linalg::toeplitz_average(m));
        q.certify()?;
        Ok(q)
    }

    pub fn first_column(&self) -> &CVector<T> {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn matrix(&self) -> CMatrix<T> {
        linalg::toeplitz_hermitian(&self.u)
    }

    /// Checks the PSD tolerance and sets the flag accordingly.
    pub fn certify(&mut self) -> Result<bool> {
        let m = self.matrix();
        let eig = HermitianEigen::new(&m)?;
        let scale = linalg::frobenius(&m);
        self.certified_psd = eig.min() >= -T::lit(1e-8) * scale;
        Ok(self.certified_psd)
    }
}

/// One solver iteration; the objective is that of the normalised problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
}

impl SolverTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective,primal_residual,dual_residual,rho\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.6e},{:.6e},{:.6e}",
                r.iteration, r.objective, r.primal_residual, r.dual_residual, r.rho
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverStats {
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Diagonal shift applied to reach exact feasibility.
    pub repair_shift: f64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution<T: Real> {
    pub q: ToeplitzPsd<T>,
    pub tau: T,
    pub y: Vec<CVector<T>>,
    pub objective: T,
    pub stats: SolverStats,
    pub trace: SolverTrace,
}

impl<T: Real> SdpSolution<T> {
    /// Smallest eigenvalue over all bordered matrices.
    pub fn min_bordered_eigenvalue(&self) -> Result<T> {
        let q = self.q.matrix();
        let mut lo = T::max_value().unwrap_or_else(T::one);
        for y in &self.y {
            let w = bordered(&q, y, self.tau);
            lo = lo.min(HermitianEigen::new(&w)?.min());
        }
        Ok(lo)
    }
}

/// Failure of [`solve_an_sdp`].
#[derive(Debug, Clone)]
pub enum SdpError<T: Real> {
    Invalid(Error),
    /// The iteration cap was hit; `best` is the last (repaired, feasible)
    /// iterate.
    NotConverged(Box<SdpSolution<T>>),
}

impl<T: Real> From<SdpError<T>> for Error {
    fn from(e: SdpError<T>) -> Self {
        match e {
            SdpError::Invalid(e) => e,
            SdpError::NotConverged(best) => Error::NotConverged {
                iterations: best.stats.iterations,
                objective: best.objective.as_f64(),
                primal_residual: best.stats.primal_residual,
                dual_residual: best.stats.dual_residual,
            },
        }
    }
}

impl<T: Real> From<Error> for SdpError<T> {
    fn from(e: Error) -> Self {
        SdpError::Invalid(e)
    }
}

fn bordered<T: Real>(q: &CMatrix<T>, y: &CVector<T>, tau: T) -> CMatrix<T> {
    let n = q.nrows();
    let mut w = CMatrix::zeros(n + 1, n + 1);
    w.view_mut((0, 0), (n, n)).copy_from(q);
    for i in 0..n {
        w[(i, n)] = y[i];
        w[(n, i)] = y[i].conj();
    }
    w[(n, n)] = Complex::new(tau, T::zero());
    w
}

fn sq_norm<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

fn objective<T: Real>(batch: &[CVector<T>], y: &[CVector<T>], q_trace: T, tau: T, eta: T) -> T {
    let c = (T::one() - eta) / T::lit(batch.len() as f64);
    let fit = batch
        .iter()
        .zip(y)
        .fold(T::zero(), |acc, (n, yy)| acc + (n - yy).norm_squared());
    c * fit + eta / T::lit(2.0) * (tau + q_trace)
}

/// Solves the SDP for a batch of snapshots.
///
/// The batch is normalised to unit mean power per entry before solving and
/// the solution scaled back, so `eta` has the same meaning at every signal
/// level. Snapshots that are exactly zero keep `Y_t = 0`, which is optimal
/// for them, and only count in `T`.
pub fn solve_an_sdp<T: Real>(
    batch: &[CVector<T>],
    settings: &SdpSettings,
) -> std::result::Result<SdpSolution<T>, SdpError<T>> {
    settings.validate()?;
    if batch.is_empty() {
        return Err(Error::invalid("empty batch").into());
    }
    let n = batch[0].len();
    if n == 0 {
        return Err(Error::invalid("zero-length snapshots").into());
    }
    if let Some(bad) = batch.iter().find(|v| v.len() != n) {
        return Err(Error::dims(n, bad.len()).into());
    }
    let start = Instant::now();
    let t_all = batch.len();
    let total: T = batch.iter().fold(T::zero(), |acc, v| acc + v.norm_squared());
    let zero_solution = |stats_time| SdpSolution {
        q: ToeplitzPsd {
            u: CVector::zeros(n),
            certified_psd: true,
        },
        tau: T::zero(),
        y: vec![CVector::zeros(n); t_all],
        objective: T::zero(),
        stats: SolverStats {
            iterations: 0,
            converged: true,
            primal_residual: 0.0,
            dual_residual: 0.0,
            repair_shift: 0.0,
            wall_time: stats_time,
        },
        trace: SolverTrace::default(),
    };
    if !(total > T::zero()) {
        return Ok(zero_solution(start.elapsed()));
    }
    let scale = (total / T::lit((t_all * n) as f64)).sqrt();
    let inv = Complex::new(T::one() / scale, T::zero());
    let data: Vec<CVector<T>> = batch.iter().map(|v| v * inv).collect();
    let active: Vec<usize> = (0..t_all).filter(|&t| data[t].norm_squared() > T::zero()).collect();

    let eta = T::lit(settings.eta);
    let eps = T::lit(settings.eps).max(T::lit(10.0) * T::EPS);
    let feas = T::lit(settings.feas_tol).max(T::lit(100.0) * T::EPS);
    let c = (T::one() - eta) / T::lit(t_all as f64);
    let ta = T::lit(active.len() as f64);
    let half_eta = eta / T::lit(2.0);
    let tiny = T::lit(1e-30);

    // Start from Y = N, Q = I, tau = 1 and matching PSD copies.
    let mut y: Vec<CVector<T>> = data.clone();
    let mut q = CMatrix::<T>::identity(n, n);
    let mut tau = T::one();
    let mut z: Vec<CMatrix<T>> = Vec::with_capacity(active.len());
    for &t in &active {
        z.push(linalg::project_psd(&bordered(&q, &y[t], tau))?);
    }
    let mut lam: Vec<CMatrix<T>> = vec![CMatrix::zeros(n + 1, n + 1); active.len()];
    let mut rho = T::one();
    let alpha = T::lit(1.6);

    let mut trace = SolverTrace::default();
    let mut prev_obj: Option<T> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut primal_rel = T::zero();
    let mut dual_rel = T::zero();

    while iterations < settings.max_iter {
        iterations += 1;

        // (Q, tau, Y) step
        let mut m = CMatrix::<T>::zeros(n, n);
        let mut zeta_sum = T::zero();
        let mut mu_sum = T::zero();
        let inv_rho = T::one() / rho;
        for (k, &t) in active.iter().enumerate() {
            let zk = &z[k];
            let lk = &lam[k];
            m += zk.view((0, 0), (n, n)) - lk.view((0, 0), (n, n)) * Complex::new(inv_rho, T::zero());
            zeta_sum += zk[(n, n)].re;
            mu_sum += lk[(n, n)].re;
            let denom = T::one() / (c + rho);
            for i in 0..n {
                y[t][i] = (data[t][i] * c + zk[(i, n)] * rho - lk[(i, n)]) * denom;
            }
        }
        m = m * Complex::new(T::one() / ta, T::zero());
        let shift = half_eta / (ta * rho);
        for i in 0..n {
            m[(i, i)].re -= shift;
        }
        let u = linalg::toeplitz_average(&m);
        q = linalg::toeplitz_hermitian(&u);
        tau = (zeta_sum - (mu_sum + half_eta) * inv_rho) / ta;

        // Z step and multiplier update
        let mut r_sq = T::zero();
        let mut s_sq = T::zero();
        let mut w_sq = T::zero();
        let mut z_sq = T::zero();
        let mut l_sq = T::zero();
        for (k, &t) in active.iter().enumerate() {
            let w = bordered(&q, &y[t], tau);
            // over-relaxed point
            let w_hat = &w * Complex::new(alpha, T::zero()) + &z[k] * Complex::new(T::one() - alpha, T::zero());
            let v = &w_hat + &lam[k] * Complex::new(inv_rho, T::zero());
            let z_new = linalg::project_psd(&v)?;
            s_sq += sq_norm(&(&z_new - &z[k]));
            r_sq += sq_norm(&(&w - &z_new));
            w_sq += sq_norm(&w);
            z_sq += sq_norm(&z_new);
            lam[k] += (w_hat - &z_new) * Complex::new(rho, T::zero());
            l_sq += sq_norm(&lam[k]);
            z[k] = z_new;
        }
        primal_rel = r_sq.sqrt() / w_sq.sqrt().max(z_sq.sqrt()).max(tiny);
        dual_rel = rho * s_sq.sqrt() / l_sq.sqrt().max(tiny);

        let obj = objective(&data, &y, linalg::trace_re(&q), tau, eta);
        if settings.record_trace {
            trace.rows.push(TraceRow {
                iteration: iterations,
                objective: obj.as_f64(),
                primal_residual: primal_rel.as_f64(),
                dual_residual: dual_rel.as_f64(),
                rho: rho.as_f64(),
            });
        }
        if let Some(p) = prev_obj {
            let rel = (obj - p).abs() / obj.abs().max(tiny);
            if rel < eps && primal_rel < feas && dual_rel < feas {
                converged = true;
                break;
            }
        }
        prev_obj = Some(obj);

        // residual balancing; multipliers are unscaled so nothing to rescale
        if iterations % 10 == 0 {
            let mu = T::lit(10.0);
            if primal_rel > mu * dual_rel {
                rho *= T::lit(2.0);
            } else if dual_rel > mu * primal_rel {
                rho /= T::lit(2.0);
            }
        }
    }

    // Repair: a uniform shift of Q and tau makes every bordered matrix PSD.
    let mut worst = T::zero();
    for &t in &active {
        let e = HermitianEigen::new(&bordered(&q, &y[t], tau))?;
        worst = worst.min(e.min());
    }
    let repair = -worst;
    let mut u = linalg::toeplitz_average(&q);
    u[0].re += repair;
    tau += repair;

    let sc = Complex::new(scale, T::zero());
    let mut q_out = ToeplitzPsd::from_first_column(u * sc);
    q_out.certify()?;
    let y_out: Vec<CVector<T>> = y.iter().map(|v| v * sc).collect();
    let tau_out = tau * scale;
    let q_trace = T::lit(n as f64) * q_out.u[0].re;
    let sol = SdpSolution {
        objective: objective(batch, &y_out, q_trace, tau_out, eta),
        q: q_out,
        tau: tau_out,
        y: y_out,
        stats: SolverStats {
            iterations,
            converged,
            primal_residual: primal_rel.as_f64(),
            dual_residual: dual_rel.as_f64(),
            repair_shift: (repair * scale).as_f64(),
            wall_time: start.elapsed(),
        },
        trace,
    };
    if converged {
        Ok(sol)
    } else {
        Err(SdpError::NotConverged(Box::new(sol)))
    }
}
