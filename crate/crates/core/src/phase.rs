use std::fmt;

use crate::num::{wrap_cycles, Real};

/// Back-end that produced a set of receive phase shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AngleMethod {
    Gae,
    Sge,
    Gec,
    Music,
    /// True phase shifts of the scenario.
    Ideal,
}

impl fmt::Display for AngleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AngleMethod::Gae => "GAE",
            AngleMethod::Sge => "SGE",
            AngleMethod::Gec => "GEC",
            AngleMethod::Music => "MUSIC",
            AngleMethod::Ideal => "ID",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub solver_iterations: usize,
    pub solver_converged: bool,
    pub primal_residual: f64,
    pub windows: usize,
    pub failed_windows: usize,
    /// Free-form markers such as `selected-by-power` or `grid-fill`.
    pub flags: Vec<String>,
}

impl Diagnostics {
    pub fn flag(&mut self, f: &str) {
        if !self.flags.iter().any(|x| x == f) {
            self.flags.push(f.to_string());
        }
    }
}

/// Receive phase shifts in cycles, wrapped to `[-1/2, 1/2)` and sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftEstimate<T: Real> {
    values: Vec<T>,
    pub method: AngleMethod,
    pub diagnostics: Diagnostics,
}

impl<T: Real> PhaseShiftEstimate<T> {
    pub fn new(values: impl IntoIterator<Item = T>, method: AngleMethod) -> Self {
        let mut values: Vec<T> = values.into_iter().map(wrap_cycles).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        Self {
            values,
            method,
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn with_diagnostics(mut self, d: Diagnostics) -> Self {
        self.diagnostics = d;
        self
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_are_wrapped_and_sorted() {
        let e = PhaseShiftEstimate::new([0.7f64, 0.1, -0.2, 0.5], AngleMethod::Music);
        let v = e.values();
        assert_eq!(v.len(), 4);
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        assert!(v.iter().all(|&x| (-0.5..0.5).contains(&x)));
        assert_eq!(v[0], -0.5);
    }
}
