//! Phase-shift estimators other than plain GAE: subspace gridless (SGE),
//! windowed gridless with clustering (GEC) and grid-search MUSIC.

pub mod cluster;
pub mod gec;
pub mod music;
pub mod sge;

pub use cluster::{centroid_to_phase, cluster_phases, cluster_phases_with, ClusterState};
pub use gec::{gec_estimate, GecEstimator};
pub use music::{music_estimate, music_spectrum, noise_subspace};
pub use sge::{sge_estimate, sge_square_root};
