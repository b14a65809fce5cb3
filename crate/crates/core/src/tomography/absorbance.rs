use serde::{Deserialize, Serialize};

use crate::dli::HarmonicSpectrum;
use crate::fitting::ModelContext;
use crate::spectroscopy::{absorbance, lineshape, AbsorptionLine, BeamGasState};
use crate::{Error, Result};

/// Line-centre absorbance per unit mole-fraction·cm, `P·S(T)·φ(ν0)`, with
/// the line widths of `gas` (its mole fraction only sets self-broadening).
pub fn line_centre_factor(line: &AbsorptionLine, gas: &BeamGasState) -> f64 {
    gas.pressure_atm * line.strength(gas.temperature_k) * lineshape(line.nu0_cm_inv, line, gas)
}

/// Absorbance of a uniform beam at the line centre.
pub fn line_centre_absorbance(gas: &BeamGasState, line: &AbsorptionLine) -> f64 {
    absorbance(line.nu0_cm_inv, gas, line)
}

/// Calibration pair of a known reference beam: its 2f/1f peak `P_s` and
/// line-centre absorbance `A_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorbanceReference {
    pub peak: f64,
    pub absorbance: f64,
}

impl AbsorbanceReference {
    /// Reference at mole fraction `x_s` from the noise-free model of `ctx`
    /// and the gas state `gas`.
    pub fn from_model(ctx: &ModelContext, line: &AbsorptionLine, gas: &BeamGasState, x_s: f64) -> Result<Self> {
        let peak = ctx
            .model_spectrum(x_s)?
            .peak()
            .ok_or_else(|| Error::shape("reference model spectrum is empty"))?;
        Ok(Self {
            peak,
            absorbance: line_centre_absorbance(&gas.with_mole_fraction(x_s), line),
        })
    }

    pub fn apply(&self, spectrum: &HarmonicSpectrum) -> Result<f64> {
        peak_absorbance(spectrum, self.peak, self.absorbance)
    }
}

/// `A_m = P_m·A_s/P_s` with `P_m` the spectrum's peak.
pub fn peak_absorbance(spectrum: &HarmonicSpectrum, ref_peak: f64, ref_absorbance: f64) -> Result<f64> {
    if !(ref_peak > 0.0 && ref_absorbance > 0.0) {
        return Err(Error::config("reference peak and absorbance must be positive"));
    }
    let p = spectrum
        .peak()
        .ok_or_else(|| Error::shape(format!("beam {} has an empty spectrum", spectrum.beam)))?;
    Ok(p * ref_absorbance / ref_peak)
}
