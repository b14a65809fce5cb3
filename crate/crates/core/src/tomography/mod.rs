//! Line-of-sight tomography: beam array geometry, chord-length system
//! matrix, peak-absorbance extraction from 2f/1f spectra and SART.

mod absorbance;
mod geometry;
mod matrix;
mod phantom;
mod sart;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use absorbance::{
    line_centre_absorbance, line_centre_factor, peak_absorbance, AbsorbanceReference,
};
pub use geometry::{build_geometry, Beam, BeamGeometry, Point};
pub use matrix::{system_matrix, SystemMatrix};
pub use phantom::{project_phantom, GaussianBlob};
pub use sart::{sart_reconstruct, SartOptions, SartReport};

/// Square-celled grid over the region of interest. Pixel `(ix, iy)` spans
/// `[origin.x + ix·w, origin.x + (ix+1)·w) × [origin.y + iy·h, ...)` and has
/// flat index `iy·nx + ix`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PixelGrid {
    pub nx: usize,
    pub ny: usize,
    /// Side length of the square region (cm).
    pub extent_cm: f64,
    /// Lower-left corner (cm).
    pub origin_cm: [f64; 2],
}

impl Default for PixelGrid {
    /// 15×15 over 14.4 cm, centred on the origin.
    fn default() -> Self {
        Self::centered(15, 15, 14.4)
    }
}

impl PixelGrid {
    pub fn centered(nx: usize, ny: usize, extent_cm: f64) -> Self {
        Self {
            nx,
            ny,
            extent_cm,
            origin_cm: [-extent_cm / 2.0, -extent_cm / 2.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::config("pixel grid needs at least one pixel per axis"));
        }
        if !(self.extent_cm > 0.0 && self.extent_cm.is_finite()) {
            return Err(Error::config("pixel grid extent must be positive"));
        }
        if !self.origin_cm.iter().all(|v| v.is_finite()) {
            return Err(Error::config("pixel grid origin must be finite"));
        }
        Ok(())
    }

    pub fn n_pixels(&self) -> usize {
        self.nx * self.ny
    }

    pub fn pixel_width(&self) -> f64 {
        self.extent_cm / self.nx as f64
    }

    pub fn pixel_height(&self) -> f64 {
        self.extent_cm / self.ny as f64
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn center(&self, ix: usize, iy: usize) -> Point {
        Point::new(
            self.origin_cm[0] + (ix as f64 + 0.5) * self.pixel_width(),
            self.origin_cm[1] + (iy as f64 + 0.5) * self.pixel_height(),
        )
    }
}

/// Mole fraction per pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationImage {
    pub grid: PixelGrid,
    pub values: Vec<f64>,
}

impl ConcentrationImage {
    pub fn zeros(grid: PixelGrid) -> Self {
        Self {
            values: vec![0.0; grid.n_pixels()],
            grid,
        }
    }

    pub fn uniform(grid: PixelGrid, value: f64) -> Self {
        Self {
            values: vec![value; grid.n_pixels()],
            grid,
        }
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    /// `(ix, iy)` of the largest pixel; first one on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (j, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = j;
            }
        }
        (best % self.grid.nx, best / self.grid.nx)
    }

    /// Rotated by +90° about the grid centre (square grids only).
    pub fn rotated_90(&self) -> Result<Self> {
        let g = self.grid;
        if g.nx != g.ny {
            return Err(Error::shape("only square grids rotate onto themselves"));
        }
        let n = g.nx;
        let mut out = Self::zeros(g);
        // (x, y) -> (−y, x)
        for iy in 0..n {
            for ix in 0..n {
                out.values[g.index(n - 1 - iy, ix)] = self.at(ix, iy);
            }
        }
        Ok(out)
    }
}
