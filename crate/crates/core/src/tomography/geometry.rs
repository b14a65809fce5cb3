use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One emitter-detector pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub start: Point,
    pub end: Point,
    /// Index of the projection this beam belongs to (0-based).
    pub projection: usize,
    /// Projection angle in degrees.
    pub angle_deg: f64,
    /// Signed perpendicular distance of the beam from the origin (cm).
    pub offset_cm: f64,
}

impl Beam {
    pub fn length(&self) -> f64 {
        self.start.distance(&self.end)
    }
}

/// Parallel-beam projections at equal angular steps, every beam centred on
/// the origin along its own direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    pub beams: Vec<Beam>,
    pub projection_angles_deg: Vec<f64>,
    pub spacing_cm: f64,
    pub beam_length_cm: f64,
}

impl BeamGeometry {
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn beams_per_projection(&self) -> usize {
        self.beams.len() / self.projection_angles_deg.len().max(1)
    }
}

/// `n_projections` projections at `180°/n_projections` steps, each with
/// `beams_per_projection` parallel beams `spacing_cm` apart and `beam_length_cm` long.
///
/// Projection p runs along `(cos θ_p, sin θ_p)`; beam k sits at offset
/// `(k − (m − 1)/2)·d` along the normal `(−sin θ_p, cos θ_p)`.
pub fn build_geometry(
    n_projections: usize,
    beams_per_projection: usize,
    spacing_cm: f64,
    beam_length_cm: f64,
) -> Result<BeamGeometry> {
    if n_projections == 0 || beams_per_projection == 0 {
        return Err(Error::config("need at least one projection and one beam"));
    }
    if !(spacing_cm > 0.0 && beam_length_cm > 0.0) {
        return Err(Error::config("beam spacing and length must be positive"));
    }
    let angles: Vec<f64> = (0..n_projections)
        .map(|p| p as f64 * 180.0 / n_projections as f64)
        .collect();
    let half = beam_length_cm / 2.0;
    let mut beams = Vec::with_capacity(n_projections * beams_per_projection);
    for (p, &angle) in angles.iter().enumerate() {
        let (s, c) = angle.to_radians().sin_cos();
        for k in 0..beams_per_projection {
            let offset = (k as f64 - (beams_per_projection as f64 - 1.0) / 2.0) * spacing_cm;
            let (mx, my) = (-s * offset, c * offset);
            beams.push(Beam {
                start: Point::new(mx - half * c, my - half * s),
                end: Point::new(mx + half * c, my + half * s),
                projection: p,
                angle_deg: angle,
                offset_cm: offset,
            });
        }
    }
    Ok(BeamGeometry {
        beams,
        projection_angles_deg: angles,
        spacing_cm,
        beam_length_cm,
    })
}
