use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::num::{cis, Complex, Real};

/// Phase shift in cycles, `(spacing / wavelength) * sin(angle)`.
pub fn phase_shift_from_angle<T: Real>(angle: T, spacing: T, wavelength: T) -> Result<T> {
    if !(wavelength > T::zero()) {
        return Err(Error::invalid("wavelength must be positive"));
    }
    Ok(spacing / wavelength * angle.sin())
}

/// ULA response `[1, e^{-2 pi i beta}, ..., e^{-2 pi i beta (n-1)}]`.
pub fn steering_vector<T: Real>(n: usize, beta: T) -> Result<CVector<T>> {
    if n == 0 {
        return Err(Error::invalid("steering vector needs at least one antenna"));
    }
    Ok(steering_unchecked(n, beta))
}

pub(crate) fn steering_unchecked<T: Real>(n: usize, beta: T) -> CVector<T> {
    let w = -T::two_pi() * beta;
    CVector::from_fn(n, |k, _| {
        if k == 0 {
            Complex::new(T::one(), T::zero())
        } else {
            cis(w * T::lit(k as f64))
        }
    })
}

/// Matrix of steering vectors, one column per phase shift.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringBasis<T: Real> {
    pub phases: Vec<T>,
    pub matrix: CMatrix<T>,
}

impl<T: Real> SteeringBasis<T> {
    pub fn new(n: usize, phases: &[T]) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("steering basis needs at least one antenna"));
        }
        let mut matrix = CMatrix::zeros(n, phases.len());
        for (s, &b) in phases.iter().enumerate() {
            matrix.set_column(s, &steering_unchecked(n, b));
        }
        Ok(Self {
            phases: phases.to_vec(),
            matrix,
        })
    }

    pub fn n_antennas(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_columns(&self) -> usize {
        self.matrix.ncols()
    }
}
