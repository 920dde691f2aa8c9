//! Gridless phase-shift estimation: an atomic-norm SDP over snapshots and
//! the Vandermonde decomposition of its Toeplitz solution.

pub mod gae;
pub mod sdp;
pub mod vandermonde;

pub use gae::gae_estimate;
pub use sdp::{solve_an_sdp, SdpError, SdpSettings, SdpSolution, SolverKind, SolverStats, SolverTrace, ToeplitzPsd, TraceRow};
pub use vandermonde::{fit_powers, nnls, vandermonde_decompose, AtomicDecomposition};
