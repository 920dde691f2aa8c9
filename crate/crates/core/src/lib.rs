//! Interference correlation estimation for multi-antenna receivers facing
//! few-ray interference channels.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix it to `f64`.

pub mod angles;
pub mod cov;
pub mod error;
pub mod gridless;
pub mod linalg;
pub mod link;
pub mod num;
pub mod phase;
pub mod scenario;

pub use cov::Method;
pub use error::{Error, Result};
pub use gridless::SdpSettings;
pub use link::RateReport;
pub use num::{Complex, Real};
pub use phase::{AngleMethod, Diagnostics};
pub use scenario::{ScenarioConfig, Streams};

pub type C64 = Complex<f64>;
pub type CMat = linalg::CMatrix<f64>;
pub type CVec = linalg::CVector<f64>;
pub type CovEstimate = cov::CovEstimate<f64>;
pub type PhaseShiftEstimate = phase::PhaseShiftEstimate<f64>;
pub type SampleBatch = scenario::SampleBatch<f64>;
pub type RaySet = scenario::RaySet<f64>;
pub type SteeringBasis = scenario::SteeringBasis<f64>;
pub type LinkRealization = link::LinkRealization<f64>;
pub type AtomicDecomposition = gridless::AtomicDecomposition<f64>;
pub type ToeplitzPsd = gridless::ToeplitzPsd<f64>;
pub type ClusterState = angles::ClusterState<f64>;
