//! Vandermonde decomposition of a PSD Toeplitz matrix by shift invariance
//! of its signal subspace, with powers from a non-negative least-squares
//! fit.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, HermitianEigen};
use crate::num::{wrap_cycles, Real};
use crate::scenario::channel::steering_unchecked;

use super::sdp::ToeplitzPsd;

/// `Q ~ sum_p powers[p] a(phases[p]) a(phases[p])^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicDecomposition<T: Real> {
    pub phases: Vec<T>,
    pub powers: Vec<T>,
    /// `|Q - sum_p p_p a a^H|_F / |Q|_F`.
    pub relative_residual: T,
}

impl<T: Real> AtomicDecomposition<T> {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn reconstruct(&self, n: usize) -> CMatrix<T> {
        let mut q = CMatrix::zeros(n, n);
        for (&z, &p) in self.phases.iter().zip(&self.powers) {
            let a = steering_unchecked::<T>(n, z);
            q += (&a * a.adjoint()).map(|x| x * p);
        }
        q
    }

    /// Atom indices ordered by decreasing power, ties by phase.
    pub fn by_power(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.powers[b]
                .partial_cmp(&self.powers[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(self.phases[a].partial_cmp(&self.phases[b]).unwrap_or(std::cmp::Ordering::Equal))
        });
        idx
    }
}

/// Numeric rank: eigenvalues at or above `rank_tol * lambda_max`.
pub fn numeric_rank<T: Real>(eig: &HermitianEigen<T>, rank_tol: T) -> usize {
    let top = eig.max();
    if !(top > T::zero()) {
        return 0;
    }
    eig.values.iter().filter(|&&l| l >= rank_tol * top).count()
}

/// Decomposes `Q` using the numeric rank given by `rank_tol`.
pub fn vandermonde_decompose<T: Real>(q: &ToeplitzPsd<T>, rank_tol: T) -> Result<AtomicDecomposition<T>> {
    let m = q.matrix();
    let eig = HermitianEigen::new(&m)?;
    let r = numeric_rank(&eig, rank_tol);
    if r >= q.dim() {
        return Err(Error::NoNoiseSubspace { dim: q.dim() });
    }
    decompose_with_rank(&m, &eig, r)
}

/// Same as [`vandermonde_decompose`] with the signal dimension imposed.
pub fn decompose_with_rank<T: Real>(m: &CMatrix<T>, eig: &HermitianEigen<T>, r: usize) -> Result<AtomicDecomposition<T>> {
    let n = m.nrows();
    if r == 0 {
        return Ok(AtomicDecomposition {
            phases: Vec::new(),
            powers: Vec::new(),
            relative_residual: T::zero(),
        });
    }
    if r >= n {
        return Err(Error::NoNoiseSubspace { dim: n });
    }
    let us = eig.vectors.columns(0, r);
    let u1 = us.rows(0, n - 1).into_owned();
    let u2 = us.rows(1, n - 1).into_owned();
    // a[k+1] = a[k] exp(-2 pi i zeta), so U2 = U1 Phi with eig(Phi) = exp(-2 pi i zeta)
    let phi = linalg::pinv(&u1)? * u2;
    let z = linalg::complex_eigenvalues(&phi)?;
    let phases: Vec<T> = z
        .iter()
        .map(|zk| wrap_cycles(-zk.im.atan2(zk.re) / T::two_pi()))
        .collect();
    let powers = fit_powers(m, &phases)?;
    let out = AtomicDecomposition {
        phases,
        powers,
        relative_residual: T::zero(),
    };
    let resid = linalg::frobenius(&(m - out.reconstruct(n)));
    let scale = linalg::frobenius(m);
    Ok(AtomicDecomposition {
        relative_residual: if scale > T::zero() { resid / scale } else { T::zero() },
        ..out
    })
}

/// Non-negative powers minimising `|Q - sum_k p_k a_k a_k^H|_F`.
pub fn fit_powers<T: Real>(q: &CMatrix<T>, phases: &[T]) -> Result<Vec<T>> {
    let n = q.nrows();
    let k = phases.len();
    let atoms: Vec<_> = phases.iter().map(|&z| steering_unchecked::<T>(n, z)).collect();
    let gram = DMatrix::from_fn(k, k, |i, j| atoms[i].dotc(&atoms[j]).norm_sqr());
    let rhs: Vec<T> = atoms.iter().map(|a| a.dotc(&(q * a)).re).collect();
    nnls(&gram, &rhs)
}

/// Lawson-Hanson active set for `min p^T G p - 2 b^T p, p >= 0` with `G`
/// symmetric positive semidefinite.
pub fn nnls<T: Real>(g: &DMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    let k = b.len();
    if g.nrows() != k || g.ncols() != k {
        return Err(Error::dims(k, format!("{}x{}", g.nrows(), g.ncols())));
    }
    let scale = g.iter().fold(T::zero(), |a, &x| a.max(x.abs())).max(T::EPS);
    let tol = T::lit(10.0 * (k.max(1) as f64)) * T::EPS * scale
        * b.iter().fold(T::one(), |a, &x| a.max(x.abs()));
    let mut p = vec![T::zero(); k];
    let mut passive = vec![false; k];
    let grad = |p: &[T]| -> Vec<T> { (0..k).map(|i| b[i] - (0..k).fold(T::zero(), |a, j| a + g[(i, j)] * p[j])).collect() };
    let mut outer = 0;
    loop {
        outer += 1;
        if outer > 3 * k + 10 {
            break;
        }
        let w = grad(&p);
        let cand = (0..k)
            .filter(|&i| !passive[i])
            .max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap_or(std::cmp::Ordering::Equal));
        let j = match cand {
            Some(j) if w[j] > tol => j,
            _ => break,
        };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..k).filter(|&i| passive[i]).collect();
            let s_p = solve_subsystem(g, b, &idx)?;
            let mut s = vec![T::zero(); k];
            for (&i, &v) in idx.iter().zip(&s_p) {
                s[i] = v;
            }
            if idx.iter().all(|&i| s[i] > T::zero()) {
                p = s;
                break;
            }
            let mut alpha = T::one();
            for &i in &idx {
                if s[i] <= T::zero() {
                    let d = p[i] - s[i];
                    if d > T::zero() {
                        alpha = alpha.min(p[i] / d);
                    }
                }
            }
            for i in 0..k {
                let pi = p[i];
                p[i] = pi + alpha * (s[i] - pi);
            }
            let pmax = p.iter().fold(T::zero(), |a, &x| a.max(x));
            for &i in &idx {
                if p[i] <= T::EPS * pmax {
                    p[i] = T::zero();
                    passive[i] = false;
                }
            }
            if !passive.iter().any(|&x| x) {
                break;
            }
        }
    }
    Ok(p)
}

fn solve_subsystem<T: Real>(g: &DMatrix<T>, b: &[T], idx: &[usize]) -> Result<Vec<T>> {
    let m = idx.len();
    let gp = DMatrix::from_fn(m, m, |i, j| g[(idx[i], idx[j])]);
    let bp = nalgebra::DVector::from_fn(m, |i, _| b[idx[i]]);
    if let Some(ch) = gp.clone().cholesky() {
        return Ok(ch.solve(&bp).iter().copied().collect());
    }
    // nearly dependent atoms: least-squares solution
    let sol = gp
        .svd(true, true)
        .solve(&bp, T::EPS * T::lit(m as f64))
        .map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(sol.iter().copied().collect())
}
