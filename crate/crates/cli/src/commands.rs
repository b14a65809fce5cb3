//! Subcommand bodies. Each takes a scenario that already passed validation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use qpwms::dli::{run_fp_pipeline, run_qp_pipeline, HarmonicSpectrum};
use qpwms::fitting::{compare_fp_qp, ComparisonStats, ModelContext, Scheme};
use qpwms::io::{load_spectrum, save_image, save_spectrum, sinogram_rows, write_sinogram};
use qpwms::scenario::Scenario;
use qpwms::seed::derive_seed;
use qpwms::spectroscopy::BeamGasState;
use qpwms::tomography::{
    build_geometry, line_centre_factor, sart_reconstruct, system_matrix, AbsorbanceReference, BeamGeometry,
    ConcentrationImage, SystemMatrix,
};

use crate::config::{SchemeChoice, ScenarioFile, TomographySection};
use crate::{validate_scenario, CliError};

type CliResult<T> = std::result::Result<T, CliError>;

pub fn ensure_valid(file: &ScenarioFile) -> CliResult<()> {
    let v = validate_scenario(file);
    if v.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invalid(v))
    }
}

fn schemes(choice: SchemeChoice) -> Vec<Scheme> {
    match choice {
        SchemeChoice::Qp => vec![Scheme::Qp],
        SchemeChoice::Fp => vec![Scheme::Fp],
        SchemeChoice::Both => vec![Scheme::Fp, Scheme::Qp],
    }
}

fn scenario_of(file: &ScenarioFile, beams: Vec<BeamGasState>) -> CliResult<Scenario> {
    file.scenario_with(beams).map_err(|m| CliError::invalid("noise", m))
}

/// Directory holding the spectra of one scheme and run.
pub fn spectra_dir(out: &Path, scheme: Scheme, run: usize) -> PathBuf {
    out.join(scheme.name()).join(format!("run_{run:04}"))
}

pub fn spectrum_file(dir: &Path, beam: usize) -> PathBuf {
    dir.join(format!("beam_{beam:02}.csv"))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Multiplexer hubs and their gas states: the listed beams form one hub; a
/// tomography scenario splits its beam array into consecutive hubs of N.
struct Hubs {
    scenarios: Vec<Scenario>,
    /// Seed fed to `Scenario::noisy_beams` for each hub.
    seeds: Vec<u64>,
}

impl Hubs {
    fn new(file: &ScenarioFile, master_seed: u64) -> CliResult<Self> {
        match &file.tomography {
            None => Ok(Self {
                scenarios: vec![scenario_of(file, file.beams.clone())?],
                seeds: vec![master_seed],
            }),
            Some(t) => {
                let (_, _, gases) = tomography_beams(t)?;
                let scenarios = gases
                    .chunks(file.sched.n_beams)
                    .map(|c| scenario_of(file, c.to_vec()))
                    .collect::<CliResult<Vec<_>>>()?;
                let seeds = (0..scenarios.len() as u64)
                    .map(|h| derive_seed(master_seed, &[h + 1]))
                    .collect();
                Ok(Self { scenarios, seeds })
            }
        }
    }

    /// Spectra of run `run` for each scheme, every beam numbered across hubs.
    fn spectra(&self, run: u64, schemes: &[Scheme]) -> CliResult<Vec<Vec<HarmonicSpectrum>>> {
        let per_hub = self
            .scenarios
            .par_iter()
            .zip(&self.seeds)
            .map(|(scn, &seed)| -> qpwms::Result<Vec<Vec<HarmonicSpectrum>>> {
                let clean = scn.clean_beams()?;
                let bg = scn.backgrounds()?;
                let noisy = scn.noisy_beams(&clean, seed, run)?;
                let settings = scn.lock_in();
                schemes
                    .iter()
                    .map(|s| match s {
                        Scheme::Fp => run_fp_pipeline(&noisy, &bg, &settings),
                        Scheme::Qp => run_qp_pipeline(&noisy, &bg, &settings),
                    })
                    .collect()
            })
            .collect::<qpwms::Result<Vec<_>>>()?;
        let mut out = vec![Vec::new(); schemes.len()];
        for (h, hub) in per_hub.into_iter().enumerate() {
            let offset = h * self.scenarios[0].sched.n_beams;
            for (k, spectra) in hub.into_iter().enumerate() {
                out[k].extend(spectra.into_iter().map(|mut sp| {
                    sp.beam += offset;
                    sp
                }));
            }
        }
        Ok(out)
    }
}

/// Geometry, system matrix and uniform-equivalent gas state of every beam:
/// the beam's chord through the grid with the phantom's mean mole fraction
/// along it. Beams that miss the grid carry no absorber.
fn tomography_beams(t: &TomographySection) -> CliResult<(BeamGeometry, SystemMatrix, Vec<BeamGasState>)> {
    let g = &t.geometry;
    let geom = build_geometry(g.n_projections, g.beams_per_projection, g.spacing_cm, g.beam_length_cm)?;
    let m = system_matrix(&geom, &t.grid)?;
    let phantom = t.phantom.rasterize(t.grid, t.phantom_supersample)?;
    let integrals = m.mul(&phantom.values)?;
    let gases = m
        .row_sums()
        .iter()
        .zip(&integrals)
        .map(|(&len, &int)| {
            let (path, x) = if len > 0.0 { (len, int / len) } else { (g.beam_length_cm, 0.0) };
            BeamGasState {
                path_length_cm: path,
                pressure_atm: t.gas.pressure_atm,
                temperature_k: t.gas.temperature_k,
                mole_fraction: x,
            }
        })
        .collect();
    Ok((geom, m, gases))
}

#[derive(Debug, Serialize)]
pub struct SimulateSummary {
    pub schemes: Vec<Scheme>,
    pub runs: usize,
    pub master_seed: u64,
    pub beams: usize,
    pub samples_per_beam: Vec<usize>,
    pub files: Vec<PathBuf>,
}

/// Per-beam 2f/1f spectra for every run and scheme. With both schemes the
/// FP and QP files of a run come from the same noisy waveforms.
pub fn simulate(file: &ScenarioFile, out: &Path) -> CliResult<SimulateSummary> {
    ensure_valid(file)?;
    let schemes = schemes(file.run.scheme);
    let hubs = Hubs::new(file, file.run.master_seed)?;
    let mut files = Vec::new();
    let mut samples = vec![0; schemes.len()];
    let mut beams = 0;
    for run in 0..file.run.runs {
        let spectra = hubs.spectra(run as u64, &schemes)?;
        for (k, (scheme, set)) in schemes.iter().zip(&spectra).enumerate() {
            let dir = spectra_dir(out, *scheme, run);
            fs::create_dir_all(&dir)?;
            for sp in set {
                let path = spectrum_file(&dir, sp.beam);
                save_spectrum(&path, sp)?;
                files.push(path);
            }
            samples[k] = set.first().map_or(0, |s| s.len());
            beams = set.len();
        }
        info!("run {run}: wrote {} spectra", schemes.len() * beams);
    }
    let summary = SimulateSummary {
        schemes,
        runs: file.run.runs,
        master_seed: file.run.master_seed,
        beams,
        samples_per_beam: samples,
        files,
    };
    if file.outputs.summary_json {
        write_json(&out.join("simulate.json"), &summary)?;
    }
    Ok(summary)
}

/// Fitting-residual comparison of FP and QP, one CSV row per beam plus a
/// row of maxima.
pub fn compare(file: &ScenarioFile, out: &Path) -> CliResult<ComparisonStats> {
    ensure_valid(file)?;
    if file.run.scheme != SchemeChoice::Both {
        return Err(CliError::invalid("run.scheme", "compare needs scheme = \"both\""));
    }
    if file.run.runs < 2 {
        return Err(CliError::invalid("run.runs", "compare needs at least two runs"));
    }
    if file.tomography.is_some() {
        return Err(CliError::invalid("tomography", "compare works on listed beams only"));
    }
    let scn = scenario_of(file, file.beams.clone())?;
    let stats = compare_fp_qp(file.run.runs, &scn, file.run.master_seed)?;
    fs::create_dir_all(out)?;
    stats.save_csv(out.join("compare.csv"))?;
    if file.outputs.summary_json {
        write_json(&out.join("compare.json"), &stats)?;
    }
    Ok(stats)
}

#[derive(Debug, Serialize)]
pub struct ReconstructSummary {
    pub scheme: Scheme,
    pub beams: usize,
    /// Absorbance of each beam from its spectrum peak.
    pub absorbance: Vec<f64>,
    /// ‖M·x − b‖/‖b‖ after the last sweep; 0 for all-zero data.
    pub relative_residual: f64,
    pub residual_norms: Vec<f64>,
    pub skipped_rows: usize,
    pub peak_pixel: (usize, usize),
    pub phantom_peak_pixel: (usize, usize),
    #[serde(skip)]
    pub image: ConcentrationImage,
}

/// Phantom → per-beam spectra → peak absorbances → SART image. With
/// `spectra` set, the beam spectra are read from `beam_NN.csv` files in
/// that directory instead of being simulated.
pub fn reconstruct(file: &ScenarioFile, spectra: Option<&Path>, out: &Path) -> CliResult<ReconstructSummary> {
    ensure_valid(file)?;
    let t = file
        .tomography
        .as_ref()
        .ok_or_else(|| CliError::invalid("tomography", "reconstruct needs a tomography section"))?;
    let scheme = match file.run.scheme {
        SchemeChoice::Fp => Scheme::Fp,
        _ => Scheme::Qp,
    };
    let (geom, m, _) = tomography_beams(t)?;
    fs::create_dir_all(out)?;

    let measured: Vec<HarmonicSpectrum> = match spectra {
        Some(dir) => (1..=geom.len())
            .map(|b| {
                let sp = load_spectrum(spectrum_file(dir, b))?;
                if sp.beam != b {
                    return Err(CliError::Numeric(format!("file for beam {b} holds beam {}", sp.beam)));
                }
                Ok(sp)
            })
            .collect::<CliResult<_>>()?,
        None => {
            let hubs = Hubs::new(file, file.run.master_seed)?;
            let set = hubs.spectra(0, &[scheme])?.remove(0);
            let dir = out.join("spectra");
            fs::create_dir_all(&dir)?;
            for sp in &set {
                save_spectrum(spectrum_file(&dir, sp.beam), sp)?;
            }
            set
        }
    };

    // one calibration per hub position, since QP grids differ between positions
    let n = file.sched.n_beams;
    let cal_gas = BeamGasState {
        path_length_cm: t.calibration.path_length_cm,
        pressure_atm: t.gas.pressure_atm,
        temperature_k: t.gas.temperature_k,
        mole_fraction: t.calibration.mole_fraction,
    };
    let settings = scenario_of(file, vec![cal_gas; n])?.lock_in();
    let cals = (1..=n)
        .map(|local| {
            let ctx = ModelContext::new(&file.drive, &file.line, &cal_gas, &settings, file.n_scans, local, scheme)?;
            Ok((ctx.slots().to_vec(), AbsorbanceReference::from_model(&ctx, &file.line, &cal_gas, cal_gas.mole_fraction)?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let factor = line_centre_factor(&file.line, &cal_gas);

    let absorbance = measured
        .iter()
        .enumerate()
        .map(|(i, sp)| {
            let (slots, cal) = &cals[i % n];
            if &sp.slots != slots {
                return Err(CliError::Numeric(format!(
                    "beam {} spectrum is not on the {} grid of hub position {}",
                    sp.beam,
                    scheme.name(),
                    i % n + 1
                )));
            }
            Ok(cal.apply(sp)?)
        })
        .collect::<CliResult<Vec<f64>>>()?;
    // absorbance → mole-fraction·cm
    let b: Vec<f64> = absorbance.iter().map(|a| a / factor).collect();
    let rep = sart_reconstruct(&m, &b, t.grid, &t.sart)?;

    save_image(out, "image", &rep.image)?;
    let phantom = t.phantom.rasterize(t.grid, t.phantom_supersample)?;
    save_image(out, "phantom", &phantom)?;
    let mut f = std::io::BufWriter::new(fs::File::create(out.join("sinogram.csv"))?);
    write_sinogram(&mut f, &sinogram_rows(&geom, &absorbance)?)?;
    f.flush()?;

    let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let last = *rep.residual_norms.last().unwrap_or(&0.0);
    let summary = ReconstructSummary {
        scheme,
        beams: geom.len(),
        absorbance,
        relative_residual: if bn > 0.0 { last / bn } else { 0.0 },
        residual_norms: rep.residual_norms,
        skipped_rows: rep.skipped_rows,
        peak_pixel: rep.image.argmax(),
        phantom_peak_pixel: phantom.argmax(),
        image: rep.image,
    };
    if file.outputs.summary_json {
        write_json(&out.join("reconstruct.json"), &summary)?;
    }
    Ok(summary)
}
