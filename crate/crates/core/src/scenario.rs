//! Physical setup shared by the simulation, fitting and comparison stages:
//! one laser drive split over N beams, each with its own gas state, sampled
//! through one multiplexed digitiser.

use serde::{Deserialize, Serialize};

use crate::dli::{LockInSettings, ScanPortion};
use crate::mux::MuxSchedule;
use crate::noise::{apply_noise_chain, NoiseSpec};
use crate::seed::derive_seed;
use crate::spectroscopy::{synthesize_beam, AbsorptionLine, BeamGasState, LaserDriveConfig, SampledWaveform};
use crate::{Error, Result};

/// Per-stage SNRs of the noise chain, each against the clean RMS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseChain {
    pub environmental_snr_db: f64,
    pub environmental_cutoff_hz: f64,
    pub pink_snr_db: f64,
    pub pink_low_hz: f64,
    pub white_snr_db: f64,
}

impl NoiseChain {
    /// Splits one combined pink+white SNR into two stages, `pink_power_fraction`
    /// of the combined noise power going to pink.
    pub fn from_combined(
        environmental_snr_db: f64,
        environmental_cutoff_hz: f64,
        combined_snr_db: f64,
        pink_power_fraction: f64,
        pink_low_hz: f64,
    ) -> Result<Self> {
        if !(pink_power_fraction > 0.0 && pink_power_fraction < 1.0) {
            return Err(Error::config("pink power fraction must lie strictly between 0 and 1"));
        }
        let split = |fraction: f64| combined_snr_db - 10.0 * fraction.log10();
        Ok(Self {
            environmental_snr_db,
            environmental_cutoff_hz,
            pink_snr_db: split(pink_power_fraction),
            pink_low_hz,
            white_snr_db: split(1.0 - pink_power_fraction),
        })
    }

    /// 15 dB environmental noise below 1 kHz, then 56 dB of pink+white split
    /// evenly in power, pink starting at the scan frequency.
    pub fn reference(f_s_hz: f64) -> Self {
        Self::from_combined(15.0, 1_000.0, 56.0, 0.5, f_s_hz).expect("valid split")
    }

    /// Combined SNR of the pink and white stages.
    pub fn pink_white_snr_db(&self) -> f64 {
        let p = 10f64.powf(-self.pink_snr_db / 10.0) + 10f64.powf(-self.white_snr_db / 10.0);
        -10.0 * p.log10()
    }

    /// The three stage specs seeded from `seed`.
    pub fn specs(&self, seed: u64) -> [NoiseSpec; 3] {
        [
            NoiseSpec::environmental(self.environmental_snr_db, self.environmental_cutoff_hz, seed),
            NoiseSpec::pink(self.pink_snr_db, self.pink_low_hz, seed),
            NoiseSpec::white(self.white_snr_db, seed),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        self.specs(0).iter().try_for_each(NoiseSpec::validate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub drive: LaserDriveConfig,
    pub line: AbsorptionLine,
    pub sched: MuxSchedule,
    #[serde(default)]
    pub portion: ScanPortion,
    #[serde(default)]
    pub reference_phase_rad: f64,
    pub n_scans: usize,
    /// One gas state per multiplexed beam.
    pub beams: Vec<BeamGasState>,
    /// `None` disables noise entirely.
    pub noise: Option<NoiseChain>,
}

impl Scenario {
    /// Four 36 cm beams at 293 K and 1 atm holding 0.8, 0.7, 0.6 and 0.5 %
    /// water, one scan, falling half, with the reference noise chain.
    pub fn reference() -> Self {
        let line = AbsorptionLine::h2o_7185();
        let sched = MuxSchedule::reference();
        let beams = [0.008, 0.007, 0.006, 0.005]
            .iter()
            .map(|&x| BeamGasState {
                path_length_cm: 36.0,
                pressure_atm: 1.0,
                temperature_k: 293.0,
                mole_fraction: x,
            })
            .collect();
        Self {
            drive: LaserDriveConfig::reference(line.nu0_cm_inv),
            line,
            sched,
            portion: ScanPortion::Falling,
            reference_phase_rad: 0.0,
            n_scans: 1,
            beams,
            noise: Some(NoiseChain::reference(sched.f_s_hz)),
        }
    }

    pub fn lock_in(&self) -> LockInSettings {
        LockInSettings {
            sched: self.sched,
            portion: self.portion,
            phase_rad: self.reference_phase_rad,
        }
    }

    /// Cross-field checks: schedule invariants (including switch timing),
    /// drive/schedule agreement, one gas state per beam.
    pub fn validate(&self) -> Result<()> {
        self.drive.validate()?;
        self.line.validate()?;
        self.sched.validate()?;
        if self.drive.f_s_hz != self.sched.f_s_hz || self.drive.f_m_hz != self.sched.f_m_hz {
            return Err(Error::config(
                "drive and schedule disagree on the scan or modulation frequency",
            ));
        }
        if self.beams.len() != self.sched.n_beams {
            return Err(Error::config(format!(
                "{} gas states given for {} multiplexed beams",
                self.beams.len(),
                self.sched.n_beams
            )));
        }
        self.beams.iter().try_for_each(BeamGasState::validate)?;
        if self.n_scans == 0 {
            return Err(Error::config("need at least one scan"));
        }
        if !self.reference_phase_rad.is_finite() {
            return Err(Error::config("reference phase must be finite"));
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        Ok(())
    }

    /// Noise-free transmission of every beam.
    pub fn clean_beams(&self) -> Result<Vec<SampledWaveform>> {
        self.beams
            .iter()
            .map(|gas| synthesize_beam(&self.drive, gas, &self.line, self.sched.f_d_hz, self.n_scans))
            .collect()
    }

    /// Laser intensity without absorber, one per beam.
    pub fn backgrounds(&self) -> Result<Vec<SampledWaveform>> {
        self.beams
            .iter()
            .map(|gas| {
                synthesize_beam(
                    &self.drive,
                    &gas.with_mole_fraction(0.0),
                    &self.line,
                    self.sched.f_d_hz,
                    self.n_scans,
                )
            })
            .collect()
    }

    /// Noisy copies of `clean` for ensemble member `run`. Beam `i` (1-based)
    /// draws from `derive_seed(master_seed, [run, i])`.
    pub fn noisy_beams(&self, clean: &[SampledWaveform], master_seed: u64, run: u64) -> Result<Vec<SampledWaveform>> {
        let Some(chain) = &self.noise else {
            return Ok(clean.to_vec());
        };
        clean
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let [env, pink, white] = chain.specs(derive_seed(master_seed, &[run, i as u64 + 1]));
                apply_noise_chain(w, &env, &pink, &white)
            })
            .collect()
    }
}
