//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All estimators are written against [`Real`] so the same code runs in
//! `f32` and `f64`. Complex quantities are `Complex<T>` on top of it.

use nalgebra as na;
use num_traits::{FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub use na::Complex;

/// Real floating point scalar (`f32` or `f64`).
pub trait Real:
    na::RealField + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync + 'static
{
    /// Machine epsilon.
    const EPS: Self;

    /// Draws one standard normal variate.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draws one uniform variate in `[0, 1)`.
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn lit(x: f64) -> Self {
        na::convert(x)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_real {
    ($f:ty) => {
        impl Real for $f {
            const EPS: Self = <$f>::EPSILON;

            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$f>()
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Circularly symmetric complex Gaussian with variance `var`.
pub fn complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R, var: T) -> Complex<T> {
    let s = (var / T::lit(2.0)).sqrt();
    Complex::new(T::standard_normal(rng) * s, T::standard_normal(rng) * s)
}

/// `exp(i * phase)`.
pub fn cis<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}

/// Wraps a value in cycles to `[-1/2, 1/2)`.
pub fn wrap_cycles<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    let mut w = x - (x + half).floor();
    // floor rounding can land exactly on +1/2
    if w >= half {
        w -= T::one();
    }
    if w < -half {
        w += T::one();
    }
    w
}

/// Distance between two phase shifts on the unit circle, in cycles.
pub fn cyclic_distance<T: Real>(a: T, b: T) -> T {
    wrap_cycles(a - b).abs()
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
