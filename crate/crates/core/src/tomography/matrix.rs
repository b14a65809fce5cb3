use log::warn;
use serde::{Deserialize, Serialize};

use super::geometry::{Beam, BeamGeometry};
use super::PixelGrid;
use crate::{Error, Result};

/// Sparse beam-by-pixel matrix of chord lengths (cm); row `i` lists
/// `(pixel, w_ij)` in traversal order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemMatrix {
    pub n_pixels: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SystemMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|e| e.1).sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_pixels];
        for row in &self.rows {
            for &(j, w) in row {
                out[j] += w;
            }
        }
        out
    }

    pub fn mul(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_pixels {
            return Err(Error::shape(format!(
                "image has {} pixels, matrix expects {}",
                x.len(),
                self.n_pixels
            )));
        }
        Ok(self.rows.iter().map(|r| r.iter().map(|&(j, w)| w * x[j]).sum()).collect())
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut d = vec![0.0; self.n_pixels];
                for &(j, w) in r {
                    d[j] += w;
                }
                d
            })
            .collect()
    }
}

/// Chord length of every beam through every pixel, by walking the beam's
/// crossings with the grid lines (Siddon's method).
pub fn system_matrix(geom: &BeamGeometry, grid: &PixelGrid) -> Result<SystemMatrix> {
    grid.validate()?;
    let rows: Vec<_> = geom.beams.iter().map(|b| trace(b, grid)).collect();
    let empty = rows.iter().filter(|r| r.is_empty()).count();
    if empty > 0 {
        warn!("{empty} beam(s) miss the region of interest and will not constrain the image");
    }
    Ok(SystemMatrix {
        n_pixels: grid.n_pixels(),
        rows,
    })
}

fn trace(beam: &Beam, grid: &PixelGrid) -> Vec<(usize, f64)> {
    let (x0, y0) = (beam.start.x, beam.start.y);
    let (dx, dy) = (beam.end.x - x0, beam.end.y - y0);
    let length = beam.length();
    let (xmin, ymin) = (grid.origin_cm[0], grid.origin_cm[1]);
    let (xmax, ymax) = (xmin + grid.extent_cm, ymin + grid.extent_cm);

    // clip the parameter range [0, 1] to the box
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for (p0, dp, a, b) in [(x0, dx, xmin, xmax), (y0, dy, ymin, ymax)] {
        if dp == 0.0 {
            if p0 < a || p0 > b {
                return Vec::new();
            }
        } else {
            let (t1, t2) = ((a - p0) / dp, (b - p0) / dp);
            lo = lo.max(t1.min(t2));
            hi = hi.min(t1.max(t2));
        }
    }
    if hi <= lo {
        return Vec::new();
    }

    let mut ts = vec![lo, hi];
    let (sx, sy) = (grid.pixel_width(), grid.pixel_height());
    for (p0, dp, base, step, n) in [(x0, dx, xmin, sx, grid.nx), (y0, dy, ymin, sy, grid.ny)] {
        if dp != 0.0 {
            for k in 1..n {
                let t = (base + k as f64 * step - p0) / dp;
                if t > lo && t < hi {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(|a, b| a.total_cmp(b));

    let mut row: Vec<(usize, f64)> = Vec::new();
    for w in ts.windows(2) {
        let seg = (w[1] - w[0]) * length;
        // coincident x and y crossings (pixel corners) round to slivers
        if seg <= 1e-12 * length {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let ix = (((x0 + tm * dx) - xmin) / sx).floor().clamp(0.0, (grid.nx - 1) as f64) as usize;
        let iy = (((y0 + tm * dy) - ymin) / sy).floor().clamp(0.0, (grid.ny - 1) as f64) as usize;
        let j = grid.index(ix, iy);
        match row.last_mut() {
            Some(last) if last.0 == j => last.1 += seg,
            _ => row.push((j, seg)),
        }
    }
    row
}
