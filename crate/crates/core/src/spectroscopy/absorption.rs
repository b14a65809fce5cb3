use log::warn;

use super::voigt::voigt;
use super::{integer_ratio, AbsorptionLine, BeamGasState, LaserDriveConfig, SampledWaveform};
use crate::{Error, Result};

/// Voigt line evaluated for one gas state; widths and strength are fixed at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineProfile {
    pub nu0: f64,
    pub doppler_hwhm: f64,
    pub lorentz_hwhm: f64,
    /// `L·P·S(T)·X`, the factor multiplying φ(ν) in the absorbance.
    pub absorbance_scale: f64,
}

impl LineProfile {
    pub fn new(line: &AbsorptionLine, gas: &BeamGasState) -> Self {
        let t = gas.temperature_k;
        Self {
            nu0: line.nu0_cm_inv,
            doppler_hwhm: line.doppler_hwhm(t),
            lorentz_hwhm: line.collisional_hwhm(gas),
            absorbance_scale: gas.path_length_cm
                * gas.pressure_atm
                * line.strength(t)
                * gas.mole_fraction,
        }
    }

    /// Line-shape function φ(ν) in cm.
    #[inline]
    pub fn shape(&self, nu: f64) -> f64 {
        voigt(nu - self.nu0, self.doppler_hwhm, self.lorentz_hwhm)
    }

    #[inline]
    pub fn absorbance(&self, nu: f64) -> f64 {
        if self.absorbance_scale == 0.0 {
            return 0.0;
        }
        self.absorbance_scale * self.shape(nu)
    }
}

/// Area-normalised Voigt line shape φ(ν) (cm) for `line` in `gas`.
pub fn lineshape(nu: f64, line: &AbsorptionLine, gas: &BeamGasState) -> f64 {
    LineProfile::new(line, gas).shape(nu)
}

/// Absorbance `α(ν) = L·φ(ν)·P·S(T)·X`.
pub fn absorbance(nu: f64, gas: &BeamGasState, line: &AbsorptionLine) -> f64 {
    let phi = lineshape(nu, line, gas);
    gas.path_length_cm * phi * gas.pressure_atm * line.strength(gas.temperature_k) * gas.mole_fraction
}

/// Beer-Lambert transmission.
#[inline]
pub fn transmit(i0: f64, alpha: f64) -> f64 {
    i0 * (-alpha).exp()
}

/// Transmitted intensity of one beam, sampled at `f_d_hz` for `n_scans` whole scans
/// starting at the scan trigger (t = 0).
pub fn synthesize_beam(
    drive: &LaserDriveConfig,
    gas: &BeamGasState,
    line: &AbsorptionLine,
    f_d_hz: f64,
    n_scans: usize,
) -> Result<SampledWaveform> {
    drive.validate()?;
    gas.validate()?;
    line.validate()?;
    check_sample_rate(drive, f_d_hz)?;
    if n_scans == 0 {
        return Err(Error::config("need at least one scan"));
    }
    let per_scan = integer_ratio(f_d_hz, drive.f_s_hz).ok_or_else(|| {
        Error::config(format!(
            "f_d / f_s = {} is not an integer number of samples per scan",
            f_d_hz / drive.f_s_hz
        ))
    })?;
    let profile = LineProfile::new(line, gas);
    let samples = (0..per_scan * n_scans)
        .map(|d| {
            let t = d as f64 / f_d_hz;
            transmit(drive.intensity(t), profile.absorbance(drive.wavenumber(t)))
        })
        .collect();
    Ok(SampledWaveform::new(f_d_hz, 0.0, samples))
}

/// Hard limit at twice the 2f frequency; warns below a 100x margin.
pub(crate) fn check_sample_rate(drive: &LaserDriveConfig, f_d_hz: f64) -> Result<()> {
    let second_harmonic = 2.0 * drive.f_m_hz;
    if !(f_d_hz >= 2.0 * second_harmonic) {
        return Err(Error::config(format!(
            "f_d = {f_d_hz} Hz is below the Nyquist rate {} Hz of the 2f component",
            2.0 * second_harmonic
        )));
    }
    if f_d_hz < 100.0 * second_harmonic {
        warn!(
            "f_d = {f_d_hz} Hz is less than 100x the 2f frequency; lock-in accuracy will degrade"
        );
    }
    Ok(())
}
