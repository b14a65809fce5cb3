use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::mux::MuxSchedule;
use crate::spectroscopy::{integer_ratio, SampledWaveform};
use crate::{Error, Result};

/// In-phase/quadrature accumulations at 1f and 2f for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureFrame {
    /// 1-based slot index j.
    pub slot: usize,
    pub x1f: f64,
    pub y1f: f64,
    pub x2f: f64,
    pub y2f: f64,
}

impl QuadratureFrame {
    /// 1f magnitude `R1f = sqrt(X1f² + Y1f²)`.
    pub fn r1f(&self) -> f64 {
        self.x1f.hypot(self.y1f)
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            slot: self.slot,
            x1f: self.x1f * gain,
            y1f: self.y1f * gain,
            x2f: self.x2f * gain,
            y2f: self.y2f * gain,
        }
    }

    /// `(X2f/R1f, Y2f/R1f)`, failing on a vanishing 1f magnitude.
    pub fn normalized_2f(&self) -> Result<(f64, f64)> {
        let r = self.r1f();
        if !(r.is_finite() && r >= f64::MIN_POSITIVE) {
            return Err(Error::numeric(format!(
                "slot {} has no usable 1f signal (R1f = {r:e})",
                self.slot
            )));
        }
        Ok((self.x2f / r, self.y2f / r))
    }
}

/// Unit-amplitude reference sinusoids for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct References {
    pub i1f: Vec<f64>,
    pub q1f: Vec<f64>,
    pub i2f: Vec<f64>,
    pub q2f: Vec<f64>,
}

impl References {
    pub fn len(&self) -> usize {
        self.i1f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i1f.is_empty()
    }

    /// Dot products of `slot` with the four references.
    #[inline]
    pub fn demodulate(&self, slot_index: usize, samples: &[f64]) -> QuadratureFrame {
        debug_assert_eq!(samples.len(), self.len());
        let (mut x1, mut y1, mut x2, mut y2) = (0.0, 0.0, 0.0, 0.0);
        for (d, &s) in samples.iter().enumerate() {
            x1 += s * self.i1f[d];
            y1 += s * self.q1f[d];
            x2 += s * self.i2f[d];
            y2 += s * self.q2f[d];
        }
        QuadratureFrame {
            slot: slot_index,
            x1f: x1,
            y1f: y1,
            x2f: x2,
            y2f: y2,
        }
    }
}

/// Quadrature references at f_m and 2f_m over `d_len` samples:
/// `R_I[d] = cos(2πk f_m d/f_d + phase)`, `R_Q[d] = cos(2πk f_m d/f_d + phase + π/2)`.
pub fn make_references(f_m_hz: f64, f_d_hz: f64, d_len: usize, phase_rad: f64) -> Result<References> {
    let per_period = integer_ratio(f_d_hz, f_m_hz).ok_or_else(|| {
        Error::config(format!(
            "non-integer samples per modulation period: f_d/f_m = {}",
            f_d_hz / f_m_hz
        ))
    })?;
    if d_len == 0 || d_len % per_period != 0 {
        return Err(Error::config(format!(
            "reference length {d_len} is not a whole number of {per_period}-sample periods"
        )));
    }
    let w = 2.0 * PI / per_period as f64;
    let wave = |harmonic: f64, offset: f64| -> Vec<f64> {
        (0..d_len)
            .map(|d| (harmonic * w * d as f64 + phase_rad + offset).cos())
            .collect()
    };
    Ok(References {
        i1f: wave(1.0, 0.0),
        q1f: wave(1.0, FRAC_PI_2),
        i2f: wave(2.0, 0.0),
        q2f: wave(2.0, FRAC_PI_2),
    })
}

/// One frame per slot of `stream`, numbered from `first_slot`.
pub fn demodulate_slots(
    stream: &[f64],
    refs: &References,
    first_slot: usize,
) -> Result<Vec<QuadratureFrame>> {
    let d = refs.len();
    if d == 0 || stream.len() % d != 0 {
        return Err(Error::shape(format!(
            "stream of {} samples is not a whole number of {d}-sample slots",
            stream.len()
        )));
    }
    Ok(stream
        .chunks_exact(d)
        .enumerate()
        .map(|(k, chunk)| refs.demodulate(first_slot + k, chunk))
        .collect())
}

/// Plain accumulation over every slot of the stream (no extra filtering).
pub fn demodulate_stream(
    stream: &SampledWaveform,
    sched: &MuxSchedule,
    phase_rad: f64,
) -> Result<Vec<QuadratureFrame>> {
    let d = sched.slot_len()?;
    let refs = make_references(sched.f_m_hz, sched.f_d_hz, d, phase_rad)?;
    demodulate_slots(&stream.samples, &refs, 1)
}

/// Background-corrected, 1f-normalised 2f magnitude.
pub fn normalize_2f1f(sig: &QuadratureFrame, bg: &QuadratureFrame) -> Result<f64> {
    let (sx, sy) = sig.normalized_2f()?;
    let (bx, by) = bg.normalized_2f()?;
    Ok((sx - bx).hypot(sy - by))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FM: f64 = 62_500.0;
    const FD: f64 = 15.625e6;
    const D: usize = 500;

    fn refs(phase: f64) -> References {
        make_references(FM, FD, D, phase).unwrap()
    }

    fn tone(amp: f64, harmonic: f64, theta: f64) -> Vec<f64> {
        (0..D)
            .map(|d| amp * (2.0 * PI * harmonic * FM * d as f64 / FD + theta).cos())
            .collect()
    }

    fn frame(x1f: f64, y1f: f64, x2f: f64, y2f: f64) -> QuadratureFrame {
        QuadratureFrame { slot: 1, x1f, y1f, x2f, y2f }
    }

    #[test]
    fn references_at_origin_and_orthogonality() {
        let r = refs(0.3);
        assert_eq!(r.i1f[0], 0.3f64.cos());
        assert_eq!(r.q1f[0], (0.3 + FRAC_PI_2).cos());
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert!(dot(&r.i1f, &r.q1f).abs() < 1e-9);
        assert!(dot(&r.i1f, &r.i2f).abs() < 1e-9);
        assert!(dot(&r.q1f, &r.q2f).abs() < 1e-9);
    }

    #[test]
    fn references_need_whole_periods() {
        assert!(make_references(FM, FD, 499, 0.0).is_err());
        assert!(make_references(FM, 15.6e6 + 1.0, 500, 0.0).is_err());
    }

    #[test]
    fn single_tone_closed_form() {
        let a = 0.37;
        let f = refs(0.0).demodulate(1, &tone(a, 1.0, 0.0));
        let expected = a * D as f64 / 2.0;
        assert!((f.x1f - expected).abs() <= 1e-9 * expected);
        for v in [f.y1f, f.x2f, f.y2f] {
            assert!(v.abs() < 1e-9 * D as f64);
        }
    }

    #[test]
    fn dc_rejected() {
        let f = refs(0.0).demodulate(1, &vec![0.8; D]);
        for v in [f.x1f, f.y1f, f.x2f, f.y2f] {
            assert!(v.abs() < 1e-9 * D as f64);
        }
    }

    #[test]
    fn slow_tone_leakage_scales_with_frequency() {
        // A tone at k·f_s drifts by ~2πk f_s D/f_d over a slot; the boxcar
        // passes 2|Q|/D ≤ k·2f_s/f_m of its amplitude.
        let fs = 31.25;
        let r = refs(0.0);
        for k in 1..=5 {
            let mut worst: f64 = 0.0;
            for slot in (0..1000).step_by(7) {
                for p in 0..16 {
                    let theta = p as f64 * PI / 8.0;
                    let x: Vec<f64> = (0..D)
                        .map(|d| {
                            let t = (slot * D + d) as f64 / FD;
                            (2.0 * PI * k as f64 * fs * t + theta).cos()
                        })
                        .collect();
                    let f = r.demodulate(1, &x);
                    for v in [f.x1f, f.y1f, f.x2f, f.y2f] {
                        worst = worst.max(2.0 * v.abs() / D as f64);
                    }
                }
            }
            let bound = k as f64 * 2.0 * fs / FM;
            assert!(worst < bound, "k={k}: {worst}");
            if k == 1 {
                assert!(worst < 1e-3);
            }
        }
    }

    #[test]
    fn normalisation_examples() {
        let bg = frame(1.0, 0.0, 0.0, 0.0);
        assert_eq!(normalize_2f1f(&bg, &bg).unwrap(), 0.0);
        let sig = frame(1.0, 0.0, 0.3, 0.4);
        assert!((normalize_2f1f(&sig, &bg).unwrap() - 0.5).abs() < 1e-15);
        let dead = frame(0.0, 0.0, 0.3, 0.4);
        assert!(normalize_2f1f(&dead, &bg).is_err());
        assert!(normalize_2f1f(&sig, &dead).is_err());
    }

    #[test]
    fn demodulate_stream_frame_count() {
        let s = MuxSchedule::reference();
        let w = SampledWaveform::new(FD, 0.0, vec![0.5; 500_000]);
        let frames = demodulate_stream(&w, &s, 0.0).unwrap();
        assert_eq!(frames.len(), 1000);
        assert_eq!(frames[999].slot, 1000);
        let short = SampledWaveform::new(FD, 0.0, vec![0.5; 750]);
        assert!(demodulate_stream(&short, &s, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn gain_does_not_change_ratio(g in 1e-3f64..1e3, x2 in -1.0f64..1.0, y2 in -1.0f64..1.0) {
            let sig = frame(0.8, -0.3, x2, y2);
            let bg = frame(1.1, 0.2, 0.01, -0.02);
            let a = normalize_2f1f(&sig, &bg).unwrap();
            let b = normalize_2f1f(&sig.scaled(g), &bg).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        }

        #[test]
        fn one_f_energy_is_phase_independent(theta in 0.0f64..(2.0 * PI), amp in 0.01f64..2.0) {
            let f = refs(0.0).demodulate(1, &tone(amp, 1.0, theta));
            let e = f.x1f.powi(2) + f.y1f.powi(2);
            let expected = (amp * D as f64 / 2.0).powi(2);
            prop_assert!((e - expected).abs() <= 1e-9 * expected);
        }

        #[test]
        fn ratio_is_reference_phase_independent(phase in 0.0f64..(2.0 * PI)) {
            let sig: Vec<f64> = tone(0.05, 1.0, 0.2).iter().zip(tone(0.004, 2.0, 1.1))
                .map(|(a, b)| 0.5 + a + b).collect();
            let bg: Vec<f64> = tone(0.05, 1.0, 0.2).iter().zip(tone(0.0005, 2.0, -0.4))
                .map(|(a, b)| 0.5 + a + b).collect();
            let r0 = refs(0.0);
            let rp = refs(phase);
            let s0 = normalize_2f1f(&r0.demodulate(1, &sig), &r0.demodulate(1, &bg)).unwrap();
            let sp = normalize_2f1f(&rp.demodulate(1, &sig), &rp.demodulate(1, &bg)).unwrap();
            prop_assert!((s0 - sp).abs() < 1e-9 * s0);
        }
    }
}
