use serde::{Deserialize, Serialize};

use super::{ConcentrationImage, PixelGrid, SystemMatrix};
use crate::{Error, Result};

/// `background + peak·exp(−r²/(2σ²))` in mole fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianBlob {
    pub center_cm: [f64; 2],
    pub sigma_cm: f64,
    pub peak: f64,
    #[serde(default)]
    pub background: f64,
}

impl GaussianBlob {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_cm > 0.0) || !(self.peak >= 0.0) || !(self.background >= 0.0) {
            return Err(Error::config("blob needs sigma > 0 and non-negative levels"));
        }
        Ok(())
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let r2 = (x - self.center_cm[0]).powi(2) + (y - self.center_cm[1]).powi(2);
        self.background + self.peak * (-r2 / (2.0 * self.sigma_cm * self.sigma_cm)).exp()
    }

    /// Pixel averages from `supersample²` midpoint samples per pixel.
    pub fn rasterize(&self, grid: PixelGrid, supersample: usize) -> Result<ConcentrationImage> {
        self.validate()?;
        grid.validate()?;
        let n = supersample.max(1);
        let (w, h) = (grid.pixel_width(), grid.pixel_height());
        let mut img = ConcentrationImage::zeros(grid);
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let x0 = grid.origin_cm[0] + ix as f64 * w;
                let y0 = grid.origin_cm[1] + iy as f64 * h;
                let mut acc = 0.0;
                for sy in 0..n {
                    for sx in 0..n {
                        let x = x0 + (sx as f64 + 0.5) * w / n as f64;
                        let y = y0 + (sy as f64 + 0.5) * h / n as f64;
                        acc += self.value(x, y);
                    }
                }
                img.values[grid.index(ix, iy)] = acc / (n * n) as f64;
            }
        }
        Ok(img)
    }
}

/// `b_i = factor·Σ_j w_ij·x_j`, with `factor` the absorbance per mole-fraction·cm.
pub fn project_phantom(image: &ConcentrationImage, m: &SystemMatrix, factor: f64) -> Result<Vec<f64>> {
    if image.grid.n_pixels() != m.n_pixels {
        return Err(Error::shape(format!(
            "image has {} pixels, matrix has {} columns",
            image.grid.n_pixels(),
            m.n_pixels
        )));
    }
    Ok(m.mul(&image.values)?.into_iter().map(|v| v * factor).collect())
}
