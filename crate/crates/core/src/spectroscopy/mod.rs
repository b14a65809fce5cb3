//! Single-beam optical model: laser drive, Voigt absorption and Beer-Lambert
//! transmission, sampled at the digitiser rate.

mod absorption;
mod laser;
mod line;
pub mod voigt;

pub use absorption::{absorbance, lineshape, synthesize_beam, transmit, LineProfile};
pub use laser::{laser_frequency, laser_intensity, LaserDriveConfig, TwoTone};
pub use line::{read_line_list, write_line_list, AbsorptionLine, BeamGasState};

use serde::{Deserialize, Serialize};

/// Uniformly sampled real signal starting at `t0_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledWaveform {
    pub f_d_hz: f64,
    pub t0_s: f64,
    pub samples: Vec<f64>,
}

impl SampledWaveform {
    pub fn new(f_d_hz: f64, t0_s: f64, samples: Vec<f64>) -> Self {
        Self {
            f_d_hz,
            t0_s,
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of sample `d`.
    #[inline]
    pub fn time(&self, d: usize) -> f64 {
        self.t0_s + d as f64 / self.f_d_hz
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }
}

pub(crate) fn rms(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Returns `Some(k)` when `ratio` is within `1e-9` relative of a positive integer `k`.
pub(crate) fn integer_ratio(num: f64, den: f64) -> Option<usize> {
    if !(num.is_finite() && den.is_finite()) || den <= 0.0 || num <= 0.0 {
        return None;
    }
    let r = num / den;
    let k = r.round();
    if k >= 1.0 && (r - k).abs() <= 1e-9 * k {
        Some(k as usize)
    } else {
        None
    }
}
