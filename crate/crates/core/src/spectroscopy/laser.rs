use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::integer_ratio;
use crate::{Error, Result};

/// First- and second-harmonic cosine pair `a1·cos(2πft + φ1) + a2·cos(4πft + φ2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoTone {
    pub first: f64,
    #[serde(default)]
    pub second: f64,
    #[serde(default)]
    pub first_phase_rad: f64,
    #[serde(default)]
    pub second_phase_rad: f64,
}

impl TwoTone {
    pub const fn first_order(amplitude: f64) -> Self {
        Self {
            first: amplitude,
            second: 0.0,
            first_phase_rad: 0.0,
            second_phase_rad: 0.0,
        }
    }

    #[inline]
    pub fn eval(&self, freq_hz: f64, t: f64) -> f64 {
        let w = 2.0 * PI * freq_hz * t;
        self.first * (w + self.first_phase_rad).cos()
            + self.second * (2.0 * w + self.second_phase_rad).cos()
    }

    fn amplitude_sum(&self) -> f64 {
        self.first.abs() + self.second.abs()
    }
}

/// Injection-current drive of the diode laser: a slow sinusoidal scan at
/// `f_s_hz` plus a fast modulation at `f_m_hz`, acting on both the emitted
/// intensity and the emitted wavenumber.
///
/// Intensity amplitudes are relative to `mean_intensity`; tuning amplitudes
/// are in cm⁻¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserDriveConfig {
    pub f_s_hz: f64,
    pub f_m_hz: f64,
    pub mean_intensity: f64,
    pub intensity_scan: TwoTone,
    pub intensity_modulation: TwoTone,
    pub center_wavenumber_cm_inv: f64,
    pub tuning_scan_cm_inv: TwoTone,
    pub tuning_modulation_cm_inv: TwoTone,
}

impl LaserDriveConfig {
    /// Drive used for the four-beam simulation: 31.25 Hz scan, 62.5 kHz
    /// modulation, Ī₀ = 0.5, i₁ₛ = 0.2, i₁ₘ = 0.1, a₁ₛ = 0.25 cm⁻¹, a₁ₘ = 0.006 cm⁻¹.
    pub fn reference(center_wavenumber_cm_inv: f64) -> Self {
        Self {
            f_s_hz: 31.25,
            f_m_hz: 62_500.0,
            mean_intensity: 0.5,
            intensity_scan: TwoTone::first_order(0.2),
            intensity_modulation: TwoTone::first_order(0.1),
            center_wavenumber_cm_inv,
            tuning_scan_cm_inv: TwoTone::first_order(0.25),
            tuning_modulation_cm_inv: TwoTone::first_order(0.006),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_s_hz > 0.0 && self.f_m_hz > self.f_s_hz) {
            return Err(Error::config(format!(
                "require f_m > f_s > 0, got f_s = {} Hz, f_m = {} Hz",
                self.f_s_hz, self.f_m_hz
            )));
        }
        if integer_ratio(self.f_m_hz, self.f_s_hz).is_none() {
            return Err(Error::config(format!(
                "f_m / f_s = {} is not a positive integer",
                self.f_m_hz / self.f_s_hz
            )));
        }
        if !(self.mean_intensity > 0.0) {
            return Err(Error::config("mean intensity must be positive"));
        }
        if !(self.center_wavenumber_cm_inv > 0.0) {
            return Err(Error::config("centre wavenumber must be positive"));
        }
        let amps = [
            self.intensity_scan,
            self.intensity_modulation,
            self.tuning_scan_cm_inv,
            self.tuning_modulation_cm_inv,
        ];
        if amps.iter().any(|a| !(a.first >= 0.0 && a.second >= 0.0)) {
            return Err(Error::config("modulation amplitudes must be non-negative"));
        }
        // I0 >= Ī0·(1 - Σ|i|), so Σ|i| < 1 keeps the intensity positive everywhere.
        let depth = self.intensity_scan.amplitude_sum() + self.intensity_modulation.amplitude_sum();
        if depth >= 1.0 {
            return Err(Error::config(format!(
                "intensity modulation depth {depth} lets I0(t) reach zero"
            )));
        }
        Ok(())
    }

    /// Scan period in seconds.
    pub fn scan_period_s(&self) -> f64 {
        1.0 / self.f_s_hz
    }

    /// Scan component of the emitted intensity.
    #[inline]
    pub fn intensity_scan_part(&self, t: f64) -> f64 {
        self.mean_intensity * (0.5 + self.intensity_scan.eval(self.f_s_hz, t))
    }

    /// Modulation component of the emitted intensity.
    #[inline]
    pub fn intensity_modulation_part(&self, t: f64) -> f64 {
        self.mean_intensity * (0.5 + self.intensity_modulation.eval(self.f_m_hz, t))
    }

    /// Emitted intensity `I0(t)`.
    #[inline]
    pub fn intensity(&self, t: f64) -> f64 {
        self.intensity_scan_part(t) + self.intensity_modulation_part(t)
    }

    /// Emitted wavenumber `ν(t)` in cm⁻¹.
    #[inline]
    pub fn wavenumber(&self, t: f64) -> f64 {
        self.center_wavenumber_cm_inv
            + self.tuning_scan_cm_inv.eval(self.f_s_hz, t)
            + self.tuning_modulation_cm_inv.eval(self.f_m_hz, t)
    }

    /// Largest excursion of `ν(t)` from the centre wavenumber.
    pub fn tuning_excursion(&self) -> f64 {
        self.tuning_scan_cm_inv.amplitude_sum() + self.tuning_modulation_cm_inv.amplitude_sum()
    }
}

/// Free-function form of [`LaserDriveConfig::intensity`].
pub fn laser_intensity(t: f64, drive: &LaserDriveConfig) -> f64 {
    drive.intensity(t)
}

/// Free-function form of [`LaserDriveConfig::wavenumber`].
pub fn laser_frequency(t: f64, drive: &LaserDriveConfig) -> f64 {
    drive.wavenumber(t)
}
