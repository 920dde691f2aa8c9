//! Dense complex linear algebra helpers built on nalgebra.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};
use crate::num::{Complex, Real};

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order and eigenvectors in matching columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn new(m: &CMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dims("square matrix", format!("{}x{}", m.nrows(), m.ncols())));
        }
        let n = m.nrows();
        if n == 0 {
            return Ok(Self {
                values: Vec::new(),
                vectors: CMatrix::zeros(0, 0),
            });
        }
        let eig = SymmetricEigen::try_new(hermitize(m), T::default_epsilon(), 0)
            .ok_or_else(|| Error::Numerical("Hermitian eigendecomposition failed".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = CMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::zero)
    }

    pub fn min(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }

    /// `V diag(f(λ)) V^H`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> CMatrix<T> {
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(f(lam));
        }
        &scaled * self.vectors.adjoint()
    }
}

/// `(M + M^H) / 2`.
pub fn hermitize<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    (m + m.adjoint()).map(|z| z * T::lit(0.5))
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues floored at 0).
pub fn project_psd<T: Real>(m: &CMatrix<T>) -> Result<CMatrix<T>> {
    let eig = HermitianEigen::new(m)?;
    if eig.min() >= T::zero() {
        return Ok(hermitize(m));
    }
    Ok(eig.reconstruct_with(|l| if l > T::zero() { l } else { T::zero() }))
}

/// Moore-Penrose pseudoinverse via thin SVD. Singular values below
/// `max(m, n) * eps * sigma_max` are treated as zero.
pub fn pinv<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(CMatrix::zeros(n, m));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = T::lit(m.max(n) as f64) * T::EPS * smax;
    svd.pseudo_inverse(cutoff)
        .map_err(|e| Error::Numerical(e.to_string()))
}

/// Orthogonal projector `A A^+` onto the column space of `a`, built from
/// the left singular vectors so that it stays a projector when `a` is
/// badly conditioned. Same cutoff as [`pinv`].
pub fn range_projector<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(CMatrix::zeros(m, m));
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD without left vectors".into()))?;
    let smax = svd.singular_values.max();
    let cutoff = T::lit(m.max(n) as f64) * T::EPS * smax;
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > cutoff)
        .collect();
    let ur = CMatrix::from_fn(m, keep.len(), |i, j| u[(i, keep[j])]);
    Ok(hermitize(&(&ur * ur.adjoint())))
}

/// Numerical rank with the same cutoff as [`pinv`].
pub fn rank<T: Real>(a: &CMatrix<T>) -> usize {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return 0;
    }
    let sv = a.clone().singular_values();
    let smax = sv.max();
    let cutoff = T::lit(m.max(n) as f64) * T::EPS * smax;
    sv.iter().filter(|&&s| s > cutoff).count()
}

pub fn frobenius<T: Real>(m: &CMatrix<T>) -> T {
    m.iter()
        .fold(T::zero(), |acc, z| acc + z.norm_sqr())
        .sqrt()
}

pub fn trace_re<T: Real>(m: &CMatrix<T>) -> T {
    (0..m.nrows().min(m.ncols())).fold(T::zero(), |acc, i| acc + m[(i, i)].re)
}

pub fn max_abs_diff<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc.max((*x - *y).norm_sqr().sqrt()))
}

/// Hermitian Toeplitz matrix with first column `u`: `Q[m, n] = u[m - n]`
/// for `m >= n` and `conj(u[n - m])` above the diagonal.
pub fn toeplitz_hermitian<T: Real>(u: &CVector<T>) -> CMatrix<T> {
    let n = u.len();
    CMatrix::from_fn(n, n, |i, j| if i >= j { u[i - j] } else { u[j - i].conj() })
}

/// Orthogonal projection (Frobenius) of a square matrix onto the Hermitian
/// Toeplitz subspace, returned as the first column.
pub fn toeplitz_average<T: Real>(m: &CMatrix<T>) -> CVector<T> {
    let n = m.nrows();
    let mut u = CVector::zeros(n);
    for k in 0..n {
        let mut acc = Complex::new(T::zero(), T::zero());
        for j in 0..(n - k) {
            // lower diagonal k and the conjugate of upper diagonal k
            acc += m[(j + k, j)] + m[(j, j + k)].conj();
        }
        u[k] = acc / T::lit(2.0 * (n - k) as f64);
    }
    u[0].im = T::zero();
    u
}

/// Eigenvalues of a general complex square matrix via complex Schur form.
pub fn complex_eigenvalues<T: Real>(m: &CMatrix<T>) -> Result<Vec<Complex<T>>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let schur = Schur::try_new(m.clone(), T::default_epsilon(), 10_000)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}
