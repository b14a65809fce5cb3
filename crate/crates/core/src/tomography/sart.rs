use log::warn;
use serde::{Deserialize, Serialize};

use super::{ConcentrationImage, PixelGrid, SystemMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SartOptions {
    /// Relaxation λ in (0, 2).
    pub relaxation: f64,
    pub iterations: usize,
    pub nonnegative: bool,
}

impl Default for SartOptions {
    fn default() -> Self {
        Self {
            relaxation: 1.0,
            iterations: 50,
            nonnegative: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SartReport {
    pub image: ConcentrationImage,
    /// ‖M·x − b‖ before the first sweep and after each sweep.
    pub residual_norms: Vec<f64>,
    pub skipped_rows: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// SART from a zero image:
///
/// ```text
/// x_j ← x_j + λ/C_j · Σ_i w_ij (b_i − (M·x)_i)/R_i,   R_i = Σ_j w_ij,  C_j = Σ_i w_ij
/// ```
///
/// followed by clamping at zero when `nonnegative` is set. Rows with no
/// pixels are skipped; pixels no beam crosses stay at zero.
pub fn sart_reconstruct(
    m: &SystemMatrix,
    b: &[f64],
    grid: PixelGrid,
    opts: &SartOptions,
) -> Result<SartReport> {
    if !(opts.relaxation > 0.0 && opts.relaxation < 2.0) {
        return Err(Error::config(format!("relaxation {} outside (0, 2)", opts.relaxation)));
    }
    if opts.iterations == 0 {
        return Err(Error::config("SART needs at least one sweep"));
    }
    if b.len() != m.n_rows() || grid.n_pixels() != m.n_pixels {
        return Err(Error::shape(format!(
            "{} measurements and {} pixels for a {}×{} matrix",
            b.len(),
            grid.n_pixels(),
            m.n_rows(),
            m.n_pixels
        )));
    }
    let row_sums = m.row_sums();
    let col_sums = m.column_sums();
    if row_sums.iter().all(|&r| r == 0.0) {
        return Err(Error::numeric("system matrix has no non-zero entries"));
    }
    let skipped_rows = row_sums.iter().filter(|&&r| r == 0.0).count();
    if skipped_rows > 0 {
        warn!("{skipped_rows} empty row(s) excluded from SART updates");
    }

    let mut x = vec![0.0; m.n_pixels];
    let residual = |x: &[f64]| -> Result<Vec<f64>> {
        Ok(m.mul(x)?.iter().zip(b).map(|(p, bi)| bi - p).collect())
    };
    let mut r = residual(&x)?;
    let mut history = vec![norm(&r)];
    let mut update = vec![0.0; m.n_pixels];
    for _ in 0..opts.iterations {
        update.iter_mut().for_each(|u| *u = 0.0);
        for ((row, ri), rs) in m.rows.iter().zip(&r).zip(&row_sums) {
            if *rs == 0.0 {
                continue;
            }
            let scaled = ri / rs;
            for &(j, w) in row {
                update[j] += w * scaled;
            }
        }
        for ((xj, uj), cj) in x.iter_mut().zip(&update).zip(&col_sums) {
            if *cj > 0.0 {
                *xj += opts.relaxation * uj / cj;
                if opts.nonnegative && *xj < 0.0 {
                    *xj = 0.0;
                }
            }
        }
        r = residual(&x)?;
        history.push(norm(&r));
    }
    Ok(SartReport {
        image: ConcentrationImage { grid, values: x },
        residual_norms: history,
        skipped_rows,
    })
}
