//! Additive Gaussian noise chain applied to clean transmission waveforms:
//! low-frequency environmental noise during propagation, then pink (1/f)
//! and white noise at detection.
//!
//! Every stage is scaled against the RMS of the *clean* waveform, so its
//! signal-to-noise ratio does not depend on where it sits in the chain.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::seed::{derive_seed, Stage};
use crate::spectroscopy::{rms, SampledWaveform};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    /// Flat spectrum below `cutoff_hz`, nothing above.
    Environmental { cutoff_hz: f64 },
    /// 1/f power spectral density from `low_hz` up to Nyquist.
    Pink { low_hz: f64 },
    White,
}

impl NoiseKind {
    fn stage(&self) -> Stage {
        match self {
            NoiseKind::Environmental { .. } => Stage::Environmental,
            NoiseKind::Pink { .. } => Stage::Pink,
            NoiseKind::White => Stage::White,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            NoiseKind::Environmental { .. } => "environmental",
            NoiseKind::Pink { .. } => "pink",
            NoiseKind::White => "white",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// 20·log10(RMS(clean)/RMS(noise)).
    pub snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn environmental(snr_db: f64, cutoff_hz: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Environmental { cutoff_hz },
            snr_db,
            seed,
        }
    }

    pub fn pink(snr_db: f64, low_hz: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Pink { low_hz },
            snr_db,
            seed,
        }
    }

    pub fn white(snr_db: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::White,
            snr_db,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.snr_db.is_finite() {
            return Err(Error::config(format!("{} noise: SNR must be finite", self.kind.name())));
        }
        match self.kind {
            NoiseKind::Environmental { cutoff_hz } if !(cutoff_hz > 0.0) => Err(Error::config(
                "environmental noise: cutoff must be positive",
            )),
            NoiseKind::Pink { low_hz } if !(low_hz > 0.0) => {
                Err(Error::config("pink noise: lower band edge must be positive"))
            }
            _ => Ok(()),
        }
    }

    fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Adds one noise stage to `clean`.
pub fn inject_noise(clean: &SampledWaveform, spec: &NoiseSpec) -> Result<SampledWaveform> {
    check_input(clean)?;
    let noise = noise_realization(clean.len(), clean.f_d_hz, spec, clean.rms())?;
    let samples = clean.samples.iter().zip(&noise).map(|(c, n)| c + n).collect();
    Ok(SampledWaveform::new(clean.f_d_hz, clean.t0_s, samples))
}

/// Environmental, then pink, then white noise. Each stage draws from a
/// sub-seed derived from its own spec's seed.
pub fn apply_noise_chain(
    clean: &SampledWaveform,
    env: &NoiseSpec,
    pink: &NoiseSpec,
    white: &NoiseSpec,
) -> Result<SampledWaveform> {
    check_kind(env, "environmental")?;
    check_kind(pink, "pink")?;
    check_kind(white, "white")?;
    apply_stages(clean, &[*env, *pink, *white])
}

/// Applies stages in the given order, each scaled against the clean RMS.
pub fn apply_stages(clean: &SampledWaveform, stages: &[NoiseSpec]) -> Result<SampledWaveform> {
    check_input(clean)?;
    let reference = clean.rms();
    let mut samples = clean.samples.clone();
    for spec in stages {
        let sub = spec.with_seed(derive_seed(spec.seed, &[spec.kind.stage() as u64]));
        let noise = noise_realization(clean.len(), clean.f_d_hz, &sub, reference)?;
        for (s, n) in samples.iter_mut().zip(&noise) {
            *s += n;
        }
    }
    Ok(SampledWaveform::new(clean.f_d_hz, clean.t0_s, samples))
}

/// Zero-mean Gaussian noise shaped per `spec.kind`, with RMS exactly
/// `reference_rms·10^(−snr/20)`.
pub fn noise_realization(
    len: usize,
    f_d_hz: f64,
    spec: &NoiseSpec,
    reference_rms: f64,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if len == 0 {
        return Err(Error::shape("cannot generate noise for an empty waveform"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut noise = match spec.kind {
        NoiseKind::White => (0..len).map(|_| StandardNormal.sample(&mut rng)).collect(),
        NoiseKind::Pink { low_hz } => {
            shaped(len, f_d_hz, &mut rng, |f| (f >= low_hz).then(|| f.sqrt().recip()))?
        }
        NoiseKind::Environmental { cutoff_hz } => {
            shaped(len, f_d_hz, &mut rng, |f| (f <= cutoff_hz).then_some(1.0))?
        }
    };
    let level = rms(&noise);
    if !(level > 0.0) {
        return Err(Error::numeric(format!(
            "{} noise realisation is identically zero",
            spec.kind.name()
        )));
    }
    let gain = reference_rms * 10f64.powf(-spec.snr_db / 20.0) / level;
    noise.iter_mut().for_each(|n| *n *= gain);
    Ok(noise)
}

/// Gaussian spectrum with magnitude `shape(f)` on the positive bins it
/// returns `Some` for, Hermitian-completed and inverse transformed.
fn shaped(
    len: usize,
    f_d_hz: f64,
    rng: &mut ChaCha8Rng,
    shape: impl Fn(f64) -> Option<f64>,
) -> Result<Vec<f64>> {
    let df = f_d_hz / len as f64;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); len];
    let half = len / 2;
    let mut any = false;
    for k in 1..=half {
        let Some(mag) = shape(k as f64 * df) else {
            continue;
        };
        any = true;
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        if 2 * k == len {
            spectrum[k] = Complex64::new(mag * re, 0.0);
        } else {
            spectrum[k] = Complex64::new(mag * re, mag * im);
            spectrum[len - k] = spectrum[k].conj();
        }
    }
    if !any {
        return Err(Error::config(format!(
            "noise band contains no frequency bins at resolution {df} Hz"
        )));
    }
    FftPlanner::new().plan_fft_inverse(len).process(&mut spectrum);
    Ok(spectrum.into_iter().map(|c| c.re).collect())
}

fn check_input(clean: &SampledWaveform) -> Result<()> {
    if clean.is_empty() {
        return Err(Error::shape("cannot add noise to an empty waveform"));
    }
    if clean.samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::numeric("clean waveform contains non-finite samples"));
    }
    Ok(())
}

fn check_kind(spec: &NoiseSpec, expected: &str) -> Result<()> {
    if spec.kind.name() == expected {
        Ok(())
    } else {
        Err(Error::config(format!(
            "{expected} slot holds a {} noise spec",
            spec.kind.name()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const FD: f64 = 15.625e6;

    fn clean(len: usize) -> SampledWaveform {
        let samples = (0..len)
            .map(|d| 0.5 + 0.05 * (2.0 * PI * 62_500.0 * d as f64 / FD).cos())
            .collect();
        SampledWaveform::new(FD, 0.0, samples)
    }

    fn snr_db(clean: &SampledWaveform, noisy: &SampledWaveform) -> f64 {
        let diff: Vec<f64> = noisy.samples.iter().zip(&clean.samples).map(|(a, b)| a - b).collect();
        20.0 * (clean.rms() / rms(&diff)).log10()
    }

    /// Periodogram bin powers, by direct FFT.
    fn periodogram(x: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(x.len()).process(&mut buf);
        buf[..x.len() / 2].iter().map(|c| c.norm_sqr()).collect()
    }

    #[test]
    fn seeded_noise_is_deterministic() {
        let c = clean(4096);
        for spec in [
            NoiseSpec::white(40.0, 3),
            NoiseSpec::pink(40.0, 31.25, 3),
            NoiseSpec::environmental(15.0, 1e5, 3),
        ] {
            assert_eq!(inject_noise(&c, &spec).unwrap(), inject_noise(&c, &spec).unwrap());
        }
    }

    #[test]
    fn huge_snr_leaves_signal_untouched() {
        let c = clean(4096);
        let out = inject_noise(&c, &NoiseSpec::white(300.0, 1)).unwrap();
        for (a, b) in out.samples.iter().zip(&c.samples) {
            assert!((a - b).abs() <= 1e-10 * b.abs());
        }
        let spec = |k| NoiseSpec { kind: k, snr_db: 300.0, seed: 9 };
        let chain = apply_noise_chain(
            &c,
            &spec(NoiseKind::Environmental { cutoff_hz: 1e5 }),
            &spec(NoiseKind::Pink { low_hz: 3e3 }),
            &spec(NoiseKind::White),
        )
        .unwrap();
        for (a, b) in chain.samples.iter().zip(&c.samples) {
            assert!((a - b).abs() <= 1e-9 * b.abs());
        }
    }

    #[test]
    fn white_noise_hits_target_snr() {
        let c = clean(50_000);
        let out = inject_noise(&c, &NoiseSpec::white(56.0, 11)).unwrap();
        assert!((snr_db(&c, &out) - 56.0).abs() < 0.1);
    }

    #[test]
    fn chain_levels_combine_in_power() {
        let c = clean(500_000);
        let env = NoiseSpec::environmental(15.0, 1e3, 1);
        let pink = NoiseSpec::pink(59.0, 31.25, 2);
        let white = NoiseSpec::white(59.0, 3);
        let out = apply_noise_chain(&c, &env, &pink, &white).unwrap();
        let expected = -10.0 * (10f64.powf(-1.5) + 2.0 * 10f64.powf(-5.9)).log10();
        assert!((snr_db(&c, &out) - expected).abs() < 0.5);
    }

    #[test]
    fn chain_order_does_not_change_stage_levels() {
        let c = clean(100_000);
        let env = NoiseSpec::environmental(15.0, 1e4, 1);
        let pink = NoiseSpec::pink(30.0, 200.0, 2);
        let white = NoiseSpec::white(40.0, 3);
        let a = apply_stages(&c, &[env, pink, white]).unwrap();
        let b = apply_stages(&c, &[white, env, pink]).unwrap();
        // same per-stage realisations, so sums agree to rounding
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x - y).abs() < 1e-12);
        }
        for spec in [env, pink, white] {
            let only = apply_stages(&c, &[spec]).unwrap();
            assert!((snr_db(&c, &only) - spec.snr_db).abs() < 1e-9);
        }
        assert!(apply_noise_chain(&c, &pink, &env, &white).is_err());
    }

    #[test]
    fn noise_is_zero_mean() {
        let n = 200_000;
        for spec in [NoiseSpec::white(0.0, 5), NoiseSpec::pink(0.0, 31.25, 5)] {
            let x = noise_realization(n, FD, &spec, 1.0).unwrap();
            let mean = x.iter().sum::<f64>() / n as f64;
            let sigma = rms(&x);
            assert!(mean.abs() < 5.0 * sigma / (n as f64).sqrt(), "{mean}");
        }
    }

    #[test]
    fn pink_spectrum_falls_as_one_over_f() {
        let n = 500_000;
        let fs = 31.25;
        let x = noise_realization(n, FD, &NoiseSpec::pink(0.0, fs, 17), 1.0).unwrap();
        let p = periodogram(&x);
        let df = FD / n as f64;
        // log-log least squares over [10 f_s, f_d/20], averaged in log-spaced bands
        let (lo, hi) = ((10.0 * fs / df) as usize, (FD / 20.0 / df) as usize);
        let edges: Vec<usize> = (0..=40)
            .map(|i| (lo as f64 * (hi as f64 / lo as f64).powf(i as f64 / 40.0)) as usize)
            .collect();
        let pts: Vec<(f64, f64)> = edges
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let mean = p[w[0]..w[1]].iter().sum::<f64>() / (w[1] - w[0]) as f64;
                let fc = 0.5 * (w[0] + w[1]) as f64 * df;
                (fc.ln(), mean.ln())
            })
            .collect();
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (mx, my) = (sx / m, sy / m);
        let slope = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / pts.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>();
        assert!((slope + 1.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn environmental_noise_is_band_limited() {
        let n = 500_000;
        let cutoff = 1e3;
        let x = noise_realization(n, FD, &NoiseSpec::environmental(0.0, cutoff, 4), 1.0).unwrap();
        let p = periodogram(&x);
        let df = FD / n as f64;
        let total: f64 = p.iter().sum();
        let above: f64 = p[(2.0 * cutoff / df) as usize..].iter().sum();
        assert!(above < 0.01 * total);
    }

    #[test]
    fn rejects_bad_inputs() {
        let empty = SampledWaveform::new(FD, 0.0, vec![]);
        assert!(inject_noise(&empty, &NoiseSpec::white(10.0, 0)).is_err());
        let nan = SampledWaveform::new(FD, 0.0, vec![1.0, f64::NAN]);
        assert!(inject_noise(&nan, &NoiseSpec::white(10.0, 0)).is_err());
        let c = clean(64);
        assert!(inject_noise(&c, &NoiseSpec::white(f64::INFINITY, 0)).is_err());
        assert!(inject_noise(&c, &NoiseSpec::environmental(10.0, 0.0, 0)).is_err());
    }
}
