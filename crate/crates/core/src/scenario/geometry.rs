//! Cell layout: the main BS at the origin of a square cell, four neighbor
//! cells to the east, north, west and south, each with its own BS placed
//! uniformly at random inside it. Interferer `l` sits on the segment from
//! the main BS to the BS of neighbor cell `l mod 4`.
//!
//! Angles follow the array convention: 0 rad points east (broadside),
//! pi/2 points north.

use rand::Rng;

use crate::error::{Error, Result};

/// Offsets of the neighbor cell centers, in units of the cell side.
const NEIGHBORS: [[f64; 2]; 4] = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub secondary_bs: [f64; 2],
    pub position: [f64; 2],
    /// Distance from the main BS in meters.
    pub distance: f64,
    /// Mean AoA at the main BS in radians, in `(-pi, pi]`.
    pub mean_aoa: f64,
}

/// Angle of a point seen from the main BS at the origin.
pub fn bearing(point: [f64; 2]) -> f64 {
    point[1].atan2(point[0])
}

pub fn place_interferers<R: Rng + ?Sized>(
    n_interferers: usize,
    cell_side: f64,
    fraction: f64,
    rng: &mut R,
) -> Result<Vec<Placement>> {
    if !(cell_side > 0.0) {
        return Err(Error::invalid("cell_side must be positive"));
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid("fraction must lie in [0, 1]"));
    }
    let mut out = Vec::with_capacity(n_interferers);
    for l in 0..n_interferers {
        let c = NEIGHBORS[l % 4];
        let bs = [
            (c[0] + rng.random::<f64>() - 0.5) * cell_side,
            (c[1] + rng.random::<f64>() - 0.5) * cell_side,
        ];
        let position = [bs[0] * fraction, bs[1] * fraction];
        let distance = position[0].hypot(position[1]);
        out.push(Placement {
            secondary_bs: bs,
            position,
            distance,
            mean_aoa: bearing(bs),
        });
    }
    Ok(out)
}
