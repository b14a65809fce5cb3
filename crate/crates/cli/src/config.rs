//! Scenario files (TOML). Units are part of every numeric field name and
//! unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qpwms::dli::ScanPortion;
use qpwms::mux::MuxSchedule;
use qpwms::scenario::{NoiseChain, Scenario};
use qpwms::spectroscopy::{AbsorptionLine, BeamGasState, LaserDriveConfig};
use qpwms::tomography::{GaussianBlob, PixelGrid, SartOptions};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SchemeChoice {
    #[default]
    Qp,
    Fp,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub scheme: SchemeChoice,
    #[serde(default)]
    pub portion: ScanPortion,
    #[serde(default = "one")]
    pub runs: usize,
    #[serde(default)]
    pub master_seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            scheme: SchemeChoice::default(),
            portion: ScanPortion::default(),
            runs: 1,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    /// Also write a JSON summary next to the CSVs.
    #[serde(default = "yes")]
    pub summary_json: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_out(),
            summary_json: true,
        }
    }
}

/// Noise chain, either stage by stage (`pink_snr_db` + `white_snr_db`) or as
/// one combined pink+white SNR split by power (`pink_white_snr_db` +
/// `pink_power_fraction`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub environmental_snr_db: f64,
    pub environmental_cutoff_hz: f64,
    pub pink_low_hz: f64,
    pub pink_snr_db: Option<f64>,
    pub white_snr_db: Option<f64>,
    pub pink_white_snr_db: Option<f64>,
    pub pink_power_fraction: Option<f64>,
}

impl NoiseSection {
    pub fn chain(&self) -> Result<NoiseChain, String> {
        match (self.pink_snr_db, self.white_snr_db, self.pink_white_snr_db, self.pink_power_fraction) {
            (Some(pink), Some(white), None, None) => Ok(NoiseChain {
                environmental_snr_db: self.environmental_snr_db,
                environmental_cutoff_hz: self.environmental_cutoff_hz,
                pink_snr_db: pink,
                pink_low_hz: self.pink_low_hz,
                white_snr_db: white,
            }),
            (None, None, Some(combined), fraction) => NoiseChain::from_combined(
                self.environmental_snr_db,
                self.environmental_cutoff_hz,
                combined,
                fraction.unwrap_or(0.5),
                self.pink_low_hz,
            )
            .map_err(|e| e.to_string()),
            _ => Err("give either pink_snr_db and white_snr_db, or pink_white_snr_db (with optional pink_power_fraction)".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub n_projections: usize,
    pub beams_per_projection: usize,
    pub spacing_cm: f64,
    pub beam_length_cm: f64,
}

/// Pressure and temperature shared by every tomography beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasSection {
    pub pressure_atm: f64,
    pub temperature_k: f64,
}

/// Known uniform beam used to turn 2f/1f peaks into absorbances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub mole_fraction: f64,
    pub path_length_cm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographySection {
    pub geometry: GeometrySection,
    #[serde(default)]
    pub grid: PixelGrid,
    pub phantom: GaussianBlob,
    #[serde(default = "default_supersample")]
    pub phantom_supersample: usize,
    pub gas: GasSection,
    pub calibration: CalibrationSection,
    #[serde(default)]
    pub sart: SartOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub outputs: OutputSection,
    pub drive: LaserDriveConfig,
    pub line: AbsorptionLine,
    pub sched: MuxSchedule,
    #[serde(default = "one")]
    pub n_scans: usize,
    #[serde(default)]
    pub reference_phase_rad: f64,
    /// One gas state per multiplexed beam; leave empty for tomography runs.
    #[serde(default)]
    pub beams: Vec<BeamGasState>,
    /// Absent means noise-free.
    pub noise: Option<NoiseSection>,
    pub tomography: Option<TomographySection>,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_supersample() -> usize {
    8
}

impl ScenarioFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| line_column(text, s.start))
                .unwrap_or((0, 0));
            CliError::Parse {
                path: origin.to_path_buf(),
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    /// Physics scenario for a set of multiplexed beams. Noise and portion
    /// come from the file.
    pub fn scenario_with(&self, beams: Vec<BeamGasState>) -> Result<Scenario, String> {
        Ok(Scenario {
            drive: self.drive.clone(),
            line: self.line.clone(),
            sched: self.sched,
            portion: self.run.portion,
            reference_phase_rad: self.reference_phase_rad,
            n_scans: self.n_scans,
            beams,
            noise: self.noise.as_ref().map(NoiseSection::chain).transpose()?,
        })
    }

    /// Scenario of the directly listed beams.
    pub fn scenario(&self) -> Result<Scenario, String> {
        self.scenario_with(self.beams.clone())
    }
}

/// 1-based line and column of byte offset `pos`.
fn line_column(text: &str, pos: usize) -> (usize, usize) {
    let before = &text[..pos.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
