use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Second radiation constant hc/k (cm·K).
const C2: f64 = 1.438_776_877;
const GAS_CONSTANT: f64 = 8.314_462_618;
const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Spectroscopic parameters of one absorption transition.
///
/// Column names double as the line-list CSV header; units are in the names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorptionLine {
    /// Line-centre wavenumber (cm⁻¹).
    pub nu0_cm_inv: f64,
    /// Line strength at `t_ref_k` (cm⁻²·atm⁻¹).
    pub s_ref_cm2_atm_inv: f64,
    /// Air-broadened HWHM at reference conditions (cm⁻¹·atm⁻¹).
    pub gamma_air_cm_inv_atm_inv: f64,
    /// Self-broadened HWHM at reference conditions (cm⁻¹·atm⁻¹).
    pub gamma_self_cm_inv_atm_inv: f64,
    /// Temperature exponent of the broadening coefficients.
    pub n_t: f64,
    /// Lower-state energy (cm⁻¹).
    pub e_low_cm_inv: f64,
    pub molar_mass_g_mol: f64,
    pub t_ref_k: f64,
}

/// Thermodynamic state along one beam, uniform over its length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamGasState {
    pub path_length_cm: f64,
    pub pressure_atm: f64,
    pub temperature_k: f64,
    pub mole_fraction: f64,
}

impl BeamGasState {
    pub fn validate(&self) -> Result<()> {
        if !(self.path_length_cm > 0.0 && self.pressure_atm > 0.0 && self.temperature_k > 0.0) {
            return Err(Error::config(format!(
                "path length, pressure and temperature must be positive: {self:?}"
            )));
        }
        if !(0.0..=1.0).contains(&self.mole_fraction) {
            return Err(Error::config(format!(
                "mole fraction {} outside [0, 1]",
                self.mole_fraction
            )));
        }
        Ok(())
    }

    pub fn with_mole_fraction(mut self, x: f64) -> Self {
        self.mole_fraction = x;
        self
    }
}

impl AbsorptionLine {
    /// H₂O transition near 7185.6 cm⁻¹ as shipped in `data/h2o_7185.csv`.
    pub fn h2o_7185() -> Self {
        Self {
            nu0_cm_inv: 7185.597_31,
            s_ref_cm2_atm_inv: 0.0195,
            gamma_air_cm_inv_atm_inv: 0.0209,
            gamma_self_cm_inv_atm_inv: 0.0976,
            n_t: 0.64,
            e_low_cm_inv: 1045.058,
            molar_mass_g_mol: 18.0106,
            t_ref_k: 296.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.nu0_cm_inv > 0.0
            && self.s_ref_cm2_atm_inv > 0.0
            && self.gamma_air_cm_inv_atm_inv >= 0.0
            && self.gamma_self_cm_inv_atm_inv >= 0.0
            && self.t_ref_k > 0.0
            && self.molar_mass_g_mol > 0.0
            && self.n_t.is_finite()
            && self.e_low_cm_inv.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid absorption line {self:?}")))
        }
    }

    /// Line strength at temperature `t` (cm⁻²·atm⁻¹).
    ///
    /// Partition sum scales as T^1.5; the extra T_ref/T converts the
    /// per-molecule strength to per-atmosphere at fixed pressure.
    pub fn strength(&self, t: f64) -> f64 {
        let tr = self.t_ref_k;
        let partition = (tr / t).powf(1.5);
        let boltzmann = (-C2 * self.e_low_cm_inv * (1.0 / t - 1.0 / tr)).exp();
        let stimulated =
            (1.0 - (-C2 * self.nu0_cm_inv / t).exp()) / (1.0 - (-C2 * self.nu0_cm_inv / tr).exp());
        self.s_ref_cm2_atm_inv * partition * (tr / t) * boltzmann * stimulated
    }

    /// Doppler HWHM (cm⁻¹).
    pub fn doppler_hwhm(&self, t: f64) -> f64 {
        let m_kg = self.molar_mass_g_mol * 1e-3;
        self.nu0_cm_inv / SPEED_OF_LIGHT * (2.0 * std::f64::consts::LN_2 * GAS_CONSTANT * t / m_kg).sqrt()
    }

    /// Collisional HWHM (cm⁻¹): `P·[X·γ_self + (1−X)·γ_air]·(T_ref/T)^n`.
    pub fn collisional_hwhm(&self, gas: &BeamGasState) -> f64 {
        let x = gas.mole_fraction;
        gas.pressure_atm
            * (x * self.gamma_self_cm_inv_atm_inv + (1.0 - x) * self.gamma_air_cm_inv_atm_inv)
            * (self.t_ref_k / gas.temperature_k).powf(self.n_t)
    }
}

/// Reads a line list: CSV with an [`AbsorptionLine`] header row; `#` starts a comment line.
pub fn read_line_list(path: impl AsRef<Path>) -> Result<Vec<AbsorptionLine>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let mut lines = Vec::new();
    for rec in rdr.deserialize() {
        let line: AbsorptionLine = rec?;
        line.validate()?;
        lines.push(line);
    }
    if lines.is_empty() {
        return Err(Error::config(format!(
            "line list {} has no records",
            path.as_ref().display()
        )));
    }
    Ok(lines)
}

pub fn write_line_list(path: impl AsRef<Path>, lines: &[AbsorptionLine]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for l in lines {
        w.serialize(l)?;
    }
    w.flush()?;
    Ok(())
}
