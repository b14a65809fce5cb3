//! Single-parameter spectral fitting: recovers the mole fraction of one beam
//! by least squares against the noise-free pipeline, and aggregates FP/QP
//! residual statistics over noisy ensembles.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dli::{
    normalize_2f1f, run_fp_pipeline, run_qp_pipeline, HarmonicSpectrum, LockInSettings, QuadratureFrame,
    References,
};
use crate::mux::beam_index;
use crate::scenario::Scenario;
use crate::spectroscopy::{transmit, AbsorptionLine, BeamGasState, LaserDriveConfig, LineProfile};
use crate::{Error, Result};

/// Which acquisition grid a spectrum lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Every used slot of the beam's own digitiser.
    Fp,
    /// Only the used slots the multiplexer assigns to the beam.
    Qp,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Fp => "fp",
            Scheme::Qp => "qp",
        }
    }
}

/// Forward model of one beam on a fixed slot grid. Laser intensity,
/// wavenumber and background frames are computed once; each evaluation
/// only redoes absorption and demodulation.
#[derive(Debug, Clone)]
pub struct ModelContext {
    line: AbsorptionLine,
    gas: BeamGasState,
    beam: usize,
    slots: Vec<usize>,
    refs: References,
    intensity: Vec<f64>,
    wavenumber: Vec<f64>,
    background: Vec<QuadratureFrame>,
}

impl ModelContext {
    /// Grid of `beam` (1-based) under `scheme`, for `n_scans` scans.
    /// `gas.mole_fraction` is ignored; every other field is held fixed.
    pub fn new(
        drive: &LaserDriveConfig,
        line: &AbsorptionLine,
        gas: &BeamGasState,
        settings: &LockInSettings,
        n_scans: usize,
        beam: usize,
        scheme: Scheme,
    ) -> Result<Self> {
        drive.validate()?;
        line.validate()?;
        gas.validate()?;
        let sched = &settings.sched;
        let refs = settings.references()?;
        let d = refs.len();
        let total = sched.slots_per_scan()? * n_scans * d;
        let used = settings.used_slots(total)?;
        let slots: Vec<usize> = match scheme {
            Scheme::Fp => used,
            Scheme::Qp => {
                if beam == 0 || beam > sched.n_beams {
                    return Err(Error::config(format!(
                        "beam {beam} is not one of the {} multiplexed beams",
                        sched.n_beams
                    )));
                }
                let mut own = Vec::with_capacity(used.len() / sched.n_beams);
                for j in used {
                    if beam_index(j, sched.n_beams)? == beam {
                        own.push(j);
                    }
                }
                own
            }
        };
        let f_d = sched.f_d_hz;
        let mut intensity = Vec::with_capacity(slots.len() * d);
        let mut wavenumber = Vec::with_capacity(slots.len() * d);
        for &j in &slots {
            for k in (j - 1) * d..j * d {
                let t = k as f64 / f_d;
                intensity.push(drive.intensity(t));
                wavenumber.push(drive.wavenumber(t));
            }
        }
        let background = slots
            .iter()
            .zip(intensity.chunks_exact(d))
            .map(|(&j, i0)| refs.demodulate(j, i0))
            .collect();
        Ok(Self {
            line: line.clone(),
            gas: *gas,
            beam,
            slots,
            refs,
            intensity,
            wavenumber,
            background,
        })
    }

    /// Model of `beam` in `scn`.
    pub fn for_scenario(scn: &Scenario, beam: usize, scheme: Scheme) -> Result<Self> {
        let gas = scn.beams.get(beam.wrapping_sub(1)).ok_or_else(|| {
            Error::config(format!("scenario has no beam {beam}"))
        })?;
        Self::new(&scn.drive, &scn.line, gas, &scn.lock_in(), scn.n_scans, beam, scheme)
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn beam(&self) -> usize {
        self.beam
    }

    /// Noise-free 2f/1f spectrum at mole fraction `x`; the same arithmetic
    /// as synthesising the beam and running it through either pipeline.
    pub fn model_spectrum(&self, x: f64) -> Result<HarmonicSpectrum> {
        if !(x >= 0.0 && x <= 1.0) {
            return Err(Error::config(format!("mole fraction {x} outside [0, 1]")));
        }
        let profile = LineProfile::new(&self.line, &self.gas.with_mole_fraction(x));
        let d = self.refs.len();
        let mut buf = vec![0.0; d];
        let mut values = Vec::with_capacity(self.slots.len());
        for (k, &j) in self.slots.iter().enumerate() {
            let range = k * d..(k + 1) * d;
            for ((b, &i0), &nu) in buf
                .iter_mut()
                .zip(&self.intensity[range.clone()])
                .zip(&self.wavenumber[range])
            {
                *b = transmit(i0, profile.absorbance(nu));
            }
            let frame = self.refs.demodulate(j, &buf);
            values.push(normalize_2f1f(&frame, &self.background[k])?);
        }
        Ok(HarmonicSpectrum {
            beam: self.beam,
            slots: self.slots.clone(),
            values,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub lower: f64,
    pub upper: f64,
    /// Absolute tolerance on X.
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            lower: 0.0,
            upper: 0.05,
            x_tol: 1e-6,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub x_hat: f64,
    /// measured − fitted, per grid point.
    pub residuals: Vec<f64>,
    /// Mean of |residual|.
    pub residual_mean: f64,
    /// Population standard deviation of the signed residuals.
    pub residual_std: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective after the initial guess and after each iteration.
    pub objective_history: Vec<f64>,
}

fn sum_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Least-squares fit of `measured` over X with the default options.
pub fn fit_concentration(measured: &HarmonicSpectrum, ctx: &ModelContext, x0: f64) -> Result<FitResult> {
    fit_concentration_with(measured, ctx, x0, &FitOptions::default())
}

/// Bounded Brent minimisation (golden section with parabolic steps) of
/// `Σ(measured − model(X))²`, started from `x0`.
pub fn fit_concentration_with(
    measured: &HarmonicSpectrum,
    ctx: &ModelContext,
    x0: f64,
    opts: &FitOptions,
) -> Result<FitResult> {
    if measured.is_empty() {
        return Err(Error::shape("nothing to fit: empty spectrum"));
    }
    if measured.slots != ctx.slots {
        return Err(Error::shape(format!(
            "measured spectrum ({} points) is not on the model grid ({} points)",
            measured.len(),
            ctx.slots.len()
        )));
    }
    if !(x0 > 0.0) || !(opts.lower < opts.upper) || opts.lower < 0.0 {
        return Err(Error::config(format!(
            "need x0 > 0 and 0 <= lower < upper (x0 = {x0}, bounds [{}, {}])",
            opts.lower, opts.upper
        )));
    }
    if measured.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("measured spectrum contains non-finite values"));
    }
    let mut evaluations = 0;
    let mut objective = |x: f64| -> Result<f64> {
        evaluations += 1;
        Ok(sum_sq_diff(&measured.values, &ctx.model_spectrum(x)?.values))
    };

    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let sqrt_eps = f64::EPSILON.sqrt();
    let (mut a, mut b) = (opts.lower, opts.upper);
    let mut xf = x0.clamp(a, b);
    let mut fx = objective(xf)?;
    let (mut nfc, mut fnfc) = (xf, fx);
    let (mut fulc, mut ffulc) = (xf, fx);
    let (mut rat, mut e): (f64, f64) = (0.0, 0.0);
    let mut history = vec![fx];
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let xm = 0.5 * (a + b);
        let tol1 = sqrt_eps * xf.abs() + opts.x_tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (xf - xm).abs() <= tol2 - 0.5 * (b - a) {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let mut golden = true;
        if e.abs() > tol1 {
            let r = (xf - nfc) * (fx - ffulc);
            let mut q = (xf - fulc) * (fx - fnfc);
            let mut p = (xf - fulc) * q - (xf - nfc) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            e = rat;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - xf) && p < q * (b - xf) {
                golden = false;
                rat = p / q;
                let x = xf + rat;
                if x - a < tol2 || b - x < tol2 {
                    rat = if xm >= xf { tol1 } else { -tol1 };
                }
            }
        }
        if golden {
            e = if xf >= xm { a - xf } else { b - xf };
            rat = GOLDEN * e;
        }
        let step = if rat >= 0.0 { 1.0 } else { -1.0 } * rat.abs().max(tol1);
        let x = xf + step;
        let fu = objective(x)?;
        if fu <= fx {
            if x >= xf {
                a = xf;
            } else {
                b = xf;
            }
            (fulc, ffulc) = (nfc, fnfc);
            (nfc, fnfc) = (xf, fx);
            (xf, fx) = (x, fu);
        } else {
            if x < xf {
                a = x;
            } else {
                b = x;
            }
            if fu <= fnfc || nfc == xf {
                (fulc, ffulc) = (nfc, fnfc);
                (nfc, fnfc) = (x, fu);
            } else if fu <= ffulc || fulc == xf || fulc == nfc {
                (fulc, ffulc) = (x, fu);
            }
        }
        history.push(fx);
    }

    let fitted = ctx.model_spectrum(xf)?;
    let residuals: Vec<f64> = measured.values.iter().zip(&fitted.values).map(|(m, f)| m - f).collect();
    let n = residuals.len() as f64;
    let residual_mean = residuals.iter().map(|r| r.abs()).sum::<f64>() / n;
    let signed_mean = residuals.iter().sum::<f64>() / n;
    let residual_std = (residuals.iter().map(|r| (r - signed_mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(FitResult {
        x_hat: xf,
        residuals,
        residual_mean,
        residual_std,
        iterations,
        evaluations,
        converged,
        objective_history: history,
    })
}

/// Ensemble statistics of one beam under one scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeStats {
    /// Mean over runs of the per-run mean |residual|.
    pub mean: f64,
    /// Sample standard deviation over runs of the per-run mean |residual|.
    pub std: f64,
    /// Mean over runs of the within-run residual standard deviation.
    pub within_run_std: f64,
    pub mean_x_hat: f64,
    pub unconverged: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamComparison {
    pub beam: usize,
    pub true_x: f64,
    pub fp: SchemeStats,
    pub qp: SchemeStats,
    /// |FP − QP|/FP·100 for the means.
    pub mean_diff_pct: f64,
    /// |FP − QP|/FP·100 for the standard deviations.
    pub std_diff_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonStats {
    pub runs: usize,
    pub master_seed: u64,
    pub beams: Vec<BeamComparison>,
}

pub fn percent_difference(fp: f64, qp: f64) -> f64 {
    if fp == qp {
        0.0
    } else {
        (fp - qp).abs() / fp.abs() * 100.0
    }
}

impl ComparisonStats {
    pub fn max_mean_diff_pct(&self) -> f64 {
        self.beams.iter().map(|b| b.mean_diff_pct).fold(0.0, f64::max)
    }

    pub fn max_std_diff_pct(&self) -> f64 {
        self.beams.iter().map(|b| b.std_diff_pct).fold(0.0, f64::max)
    }

    /// One row per beam and scheme-pair plus a final `max` row.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(
            w,
            "beam,fp_mean,qp_mean,mean_diff_pct,fp_std,qp_std,std_diff_pct,fp_mean_x_hat,qp_mean_x_hat"
        )?;
        for b in &self.beams {
            writeln!(
                w,
                "{},{:e},{:e},{},{:e},{:e},{},{},{}",
                b.beam,
                b.fp.mean,
                b.qp.mean,
                b.mean_diff_pct,
                b.fp.std,
                b.qp.std,
                b.std_diff_pct,
                b.fp.mean_x_hat,
                b.qp.mean_x_hat
            )?;
        }
        writeln!(w, "max,,,{},,,{},,", self.max_mean_diff_pct(), self.max_std_diff_pct())?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

/// Per-run residual summaries, indexed `[beam][scheme]` with FP first.
type RunSummary = Vec<[(f64, f64, f64, bool); 2]>;

/// FP-vs-QP residual comparison over `n_runs` noisy realisations.
///
/// Each run synthesises noise once per beam and feeds the same noisy
/// waveforms to both pipelines. Runs may execute in parallel; results are
/// reduced in run order, so the output depends only on the inputs.
pub fn compare_fp_qp(n_runs: usize, scn: &Scenario, master_seed: u64) -> Result<ComparisonStats> {
    if n_runs < 2 {
        return Err(Error::config("a comparison needs at least two runs"));
    }
    scn.validate()?;
    let clean = scn.clean_beams()?;
    let backgrounds = scn.backgrounds()?;
    let settings = scn.lock_in();
    let n = scn.beams.len();
    let contexts = (1..=n)
        .map(|beam| {
            Ok([
                ModelContext::for_scenario(scn, beam, Scheme::Fp)?,
                ModelContext::for_scenario(scn, beam, Scheme::Qp)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;

    let runs: Vec<RunSummary> = (0..n_runs as u64)
        .into_par_iter()
        .map(|run| {
            let noisy = scn.noisy_beams(&clean, master_seed, run)?;
            let fp = run_fp_pipeline(&noisy, &backgrounds, &settings)?;
            let qp = run_qp_pipeline(&noisy, &backgrounds, &settings)?;
            (0..n)
                .map(|i| {
                    let x0 = scn.beams[i].mole_fraction;
                    let f = fit_concentration(&fp[i], &contexts[i][0], x0)?;
                    let q = fit_concentration(&qp[i], &contexts[i][1], x0)?;
                    Ok([
                        (f.residual_mean, f.residual_std, f.x_hat, f.converged),
                        (q.residual_mean, q.residual_std, q.x_hat, q.converged),
                    ])
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let stats = |beam: usize, scheme: usize| -> SchemeStats {
        let rows: Vec<_> = runs.iter().map(|r| r[beam][scheme]).collect();
        let k = rows.len() as f64;
        let mean = rows.iter().map(|r| r.0).sum::<f64>() / k;
        let var = rows.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (k - 1.0);
        SchemeStats {
            mean,
            std: var.sqrt(),
            within_run_std: rows.iter().map(|r| r.1).sum::<f64>() / k,
            mean_x_hat: rows.iter().map(|r| r.2).sum::<f64>() / k,
            unconverged: rows.iter().filter(|r| !r.3).count(),
        }
    };
    let beams = (0..n)
        .map(|i| {
            let fp = stats(i, 0);
            let qp = stats(i, 1);
            BeamComparison {
                beam: i + 1,
                true_x: scn.beams[i].mole_fraction,
                fp,
                qp,
                mean_diff_pct: percent_difference(fp.mean, qp.mean),
                std_diff_pct: percent_difference(fp.std, qp.std),
            }
        })
        .collect();
    Ok(ComparisonStats {
        runs: n_runs,
        master_seed,
        beams,
    })
}
