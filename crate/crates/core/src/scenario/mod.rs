//! Interference environment: geometry, rays, channels, snapshots and the
//! ground-truth correlation.

pub mod channel;
pub mod config;
pub mod geometry;
pub mod rays;
pub mod rng;
pub mod samples;

pub use channel::{phase_shift_from_angle, steering_vector, SteeringBasis};
pub use config::{ScenarioConfig, SymbolPower};
pub use geometry::{place_interferers, Placement};
pub use rays::{draw_rayset, inner_covariance, synth_channel, Ray, RaySet};
pub use rng::{Role, StreamRng, Streams};
pub use samples::{
    generate_samples, interference_covariance, interference_power, noise_for_rot, rot_of,
    true_covariance, SampleBatch,
};

use crate::error::Result;
use crate::num::Real;

/// Mean AoA per interferer: taken from the config when given, otherwise
/// from a geometry draw on stream `(trial, Geometry, 0, 0)`.
pub fn resolve_aoa_means(cfg: &ScenarioConfig, streams: &Streams, trial: u64) -> Result<Vec<f64>> {
    if let Some(m) = &cfg.aoa_mean {
        return Ok(m.clone());
    }
    let mut rng = streams.rng(trial, Role::Geometry, 0, 0);
    let placements = place_interferers(cfg.n_interferers, cfg.cell_side, cfg.interferer_fraction, &mut rng)?;
    Ok(placements.iter().map(|p| p.mean_aoa).collect())
}

/// Draws the geometry and the rays of one trial.
pub fn draw_scenario<T: Real>(cfg: &ScenarioConfig, streams: &Streams, trial: u64) -> Result<RaySet<T>> {
    let means = resolve_aoa_means(cfg, streams, trial)?;
    draw_rayset(cfg, &means, streams, trial)
}
