//! Slot multiplexer: N beams share one digitiser, switching every `c`
//! modulation periods, so one slot holds `D = c·f_d/f_m` samples.
//!
//! Slots are numbered from `j = 1` at the scan trigger and the beam in slot
//! `j` is `i = j − ⌊(j − 1)/N⌋·N`. Switching is ideal once the switch
//! response time is shorter than one sample period.

use serde::{Deserialize, Serialize};

use crate::spectroscopy::{integer_ratio, SampledWaveform};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuxSchedule {
    /// Beams sharing one digitiser (N).
    pub n_beams: usize,
    /// Modulation periods per slot (c).
    pub periods_per_slot: usize,
    pub f_s_hz: f64,
    pub f_m_hz: f64,
    pub f_d_hz: f64,
    /// Worst-case multiplexer response time.
    pub t_mux_s: f64,
}

/// Outcome of the switch-settling check `t_mux < 1/f_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingReport {
    pub valid: bool,
    pub sample_period_s: f64,
    /// `1/t_mux`; infinite for an ideal switch.
    pub max_f_d_hz: f64,
}

impl TimingReport {
    pub fn into_result(self, t_mux_s: f64) -> Result<()> {
        if self.valid {
            Ok(())
        } else {
            Err(Error::Timing {
                t_mux_s,
                sample_period_s: self.sample_period_s,
                max_f_d_hz: self.max_f_d_hz,
            })
        }
    }
}

impl MuxSchedule {
    /// Four-beam schedule of the reference simulation.
    pub fn reference() -> Self {
        Self {
            n_beams: 4,
            periods_per_slot: 2,
            f_s_hz: 31.25,
            f_m_hz: 62_500.0,
            f_d_hz: 15.625e6,
            t_mux_s: 33e-9,
        }
    }

    pub fn samples_per_period(&self) -> Result<usize> {
        integer_ratio(self.f_d_hz, self.f_m_hz).ok_or_else(|| {
            Error::config(format!(
                "non-integer samples per modulation period: f_d/f_m = {}",
                self.f_d_hz / self.f_m_hz
            ))
        })
    }

    /// Samples per slot, D.
    pub fn slot_len(&self) -> Result<usize> {
        Ok(self.periods_per_slot * self.samples_per_period()?)
    }

    /// Slots in one scan period.
    pub fn slots_per_scan(&self) -> Result<usize> {
        let d = self.slot_len()?;
        let per_scan = integer_ratio(self.f_d_hz, self.f_s_hz).ok_or_else(|| {
            Error::config(format!(
                "non-integer samples per scan: f_d/f_s = {}",
                self.f_d_hz / self.f_s_hz
            ))
        })?;
        if per_scan % d != 0 {
            return Err(Error::config(format!(
                "a scan of {per_scan} samples does not hold a whole number of {d}-sample slots"
            )));
        }
        Ok(per_scan / d)
    }

    pub fn timing(&self) -> TimingReport {
        validate_timing(self)
    }

    /// Checks every schedule invariant, including switch settling.
    pub fn validate(&self) -> Result<()> {
        if self.n_beams == 0 || self.periods_per_slot == 0 {
            return Err(Error::config("beam count and periods per slot must be at least 1"));
        }
        if !(self.f_s_hz > 0.0 && self.f_m_hz > self.f_s_hz && self.f_d_hz > 0.0) {
            return Err(Error::config("require f_d > 0 and f_m > f_s > 0"));
        }
        if !(self.t_mux_s >= 0.0) {
            return Err(Error::config("t_mux must be non-negative"));
        }
        let slots = self.slots_per_scan()?;
        if slots % (2 * self.n_beams) != 0 {
            return Err(Error::config(format!(
                "{slots} slots per scan do not give every one of {} beams the same number of slots in each scan half",
                self.n_beams
            )));
        }
        self.timing().into_result(self.t_mux_s)
    }
}

/// Beam sampled in slot `j` (both 1-based).
pub fn beam_index(j: usize, n_beams: usize) -> Result<usize> {
    if j < 1 || n_beams < 1 {
        return Err(Error::config(format!(
            "slot index ({j}) and beam count ({n_beams}) must be at least 1"
        )));
    }
    Ok(j - (j - 1) / n_beams * n_beams)
}

pub fn validate_timing(sched: &MuxSchedule) -> TimingReport {
    let sample_period_s = 1.0 / sched.f_d_hz;
    TimingReport {
        valid: sched.t_mux_s < sample_period_s,
        sample_period_s,
        max_f_d_hz: 1.0 / sched.t_mux_s,
    }
}

/// Interleaves `beams` slot by slot into one stream of the same length.
pub fn multiplex(beams: &[SampledWaveform], sched: &MuxSchedule) -> Result<SampledWaveform> {
    sched.timing().into_result(sched.t_mux_s)?;
    let d = sched.slot_len()?;
    let len = check_aligned(beams, sched, d)?;
    let mut out = Vec::with_capacity(len);
    for (slot, start) in (0..len).step_by(d).enumerate() {
        let beam = beam_index(slot + 1, sched.n_beams)? - 1;
        out.extend_from_slice(&beams[beam].samples[start..start + d]);
    }
    Ok(SampledWaveform::new(sched.f_d_hz, beams[0].t0_s, out))
}

/// Splits a multiplexed stream back into per-beam slot sequences:
/// element `i` holds beam `i + 1`'s slots in time order, concatenated.
pub fn split_slots(stream: &SampledWaveform, sched: &MuxSchedule) -> Result<Vec<Vec<f64>>> {
    let d = sched.slot_len()?;
    if stream.len() % d != 0 {
        return Err(Error::shape(format!(
            "stream of {} samples is not a whole number of {d}-sample slots",
            stream.len()
        )));
    }
    let mut beams = vec![Vec::with_capacity(stream.len() / sched.n_beams); sched.n_beams];
    for (slot, chunk) in stream.samples.chunks_exact(d).enumerate() {
        beams[beam_index(slot + 1, sched.n_beams)? - 1].extend_from_slice(chunk);
    }
    Ok(beams)
}

pub(crate) fn check_aligned(beams: &[SampledWaveform], sched: &MuxSchedule, d: usize) -> Result<usize> {
    if beams.len() != sched.n_beams {
        return Err(Error::shape(format!(
            "schedule multiplexes {} beams, got {}",
            sched.n_beams,
            beams.len()
        )));
    }
    let first = &beams[0];
    let len = first.len();
    if len == 0 || len % d != 0 {
        return Err(Error::shape(format!(
            "waveform length {len} is not a positive multiple of the slot length {d}"
        )));
    }
    for (i, b) in beams.iter().enumerate() {
        if b.len() != len {
            return Err(Error::shape(format!("beam {} has {} samples, expected {len}", i + 1, b.len())));
        }
        if b.f_d_hz != sched.f_d_hz {
            return Err(Error::shape(format!(
                "beam {} sampled at {} Hz, schedule expects {} Hz",
                i + 1,
                b.f_d_hz,
                sched.f_d_hz
            )));
        }
        if b.t0_s != first.t0_s {
            return Err(Error::shape(format!("beam {} is not time-aligned", i + 1)));
        }
    }
    Ok(len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(offset: f64, len: usize, f_d: f64) -> SampledWaveform {
        SampledWaveform::new(f_d, 0.0, (0..len).map(|d| offset + d as f64).collect())
    }

    #[test]
    fn beam_index_values() {
        assert_eq!(beam_index(1, 4).unwrap(), 1);
        assert_eq!(beam_index(4, 4).unwrap(), 4);
        assert_eq!(beam_index(5, 4).unwrap(), 1);
        assert_eq!(beam_index(2001, 4).unwrap(), 1);
        assert!(beam_index(0, 4).is_err());
        assert!(beam_index(3, 0).is_err());
    }

    #[test]
    fn beam_index_matches_modular_form_exhaustively() {
        for n in 1..=64 {
            for j in 1..=10_000 {
                assert_eq!(beam_index(j, n).unwrap(), (j - 1) % n + 1);
            }
        }
    }

    #[test]
    fn reference_schedule_arithmetic() {
        let s = MuxSchedule::reference();
        assert_eq!(s.slot_len().unwrap(), 500);
        assert_eq!(s.slots_per_scan().unwrap(), 1000);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn timing_gate() {
        let s = MuxSchedule::reference();
        let r = validate_timing(&s);
        assert!(r.valid);
        assert!((r.sample_period_s - 64e-9).abs() < 1e-18);

        let fast = MuxSchedule { f_d_hz: 31e6, ..s };
        let r = validate_timing(&fast);
        assert!(!r.valid);
        assert!((r.max_f_d_hz / 1e6 - 30.3).abs() < 0.05);

        let ideal = MuxSchedule { t_mux_s: 0.0, f_d_hz: 1e15, ..s };
        assert!(validate_timing(&ideal).valid);
    }

    #[test]
    fn single_beam_is_identity() {
        let s = MuxSchedule { n_beams: 1, ..MuxSchedule::reference() };
        let w = ramp(0.0, 5000, s.f_d_hz);
        assert_eq!(multiplex(std::slice::from_ref(&w), &s).unwrap(), w);
    }

    #[test]
    fn reference_scan_slot_accounting() {
        let s = MuxSchedule::reference();
        let beams: Vec<_> = (0..4).map(|i| ramp(1e6 * i as f64, 500_000, s.f_d_hz)).collect();
        let mux = multiplex(&beams, &s).unwrap();
        assert_eq!(mux.len(), 500_000);
        let per_beam = split_slots(&mux, &s).unwrap();
        for b in &per_beam {
            assert_eq!(b.len() / s.slot_len().unwrap(), 250);
        }
    }

    #[test]
    fn multiplex_rejects_mismatched_inputs() {
        let s = MuxSchedule { n_beams: 2, ..MuxSchedule::reference() };
        let a = ramp(0.0, 1000, s.f_d_hz);
        assert!(multiplex(&[a.clone(), ramp(0.0, 1500, s.f_d_hz)], &s).is_err());
        assert!(multiplex(&[a.clone(), ramp(0.0, 1000, 1e6)], &s).is_err());
        assert!(multiplex(&[a.clone()], &s).is_err());
        assert!(multiplex(&[ramp(0.0, 750, s.f_d_hz), ramp(0.0, 750, s.f_d_hz)], &s).is_err());
        let slow_switch = MuxSchedule { t_mux_s: 1e-6, ..s };
        assert!(multiplex(&[a.clone(), a], &slow_switch).is_err());
    }

    proptest! {
        #[test]
        fn mux_then_split_is_lossless(n in 1usize..6, slots_per_beam in 1usize..5, seed in 0u64..1000) {
            let s = MuxSchedule {
                n_beams: n,
                periods_per_slot: 1,
                f_s_hz: 1.0,
                f_m_hz: 10.0,
                f_d_hz: 40.0,
                t_mux_s: 0.0,
            };
            let d = s.slot_len().unwrap();
            let len = d * n * slots_per_beam;
            let beams: Vec<_> = (0..n)
                .map(|i| {
                    let samples = (0..len)
                        .map(|k| ((seed as usize * 31 + i * 7919 + k * 104_729) % 1000) as f64 / 7.0)
                        .collect();
                    SampledWaveform::new(40.0, 0.0, samples)
                })
                .collect();
            let mux = multiplex(&beams, &s).unwrap();
            let split = split_slots(&mux, &s).unwrap();
            for (i, own) in split.iter().enumerate() {
                prop_assert_eq!(own.len(), len / n);
                // beam i's own samples at its own slots
                let expected: Vec<f64> = beams[i]
                    .samples
                    .chunks_exact(d)
                    .enumerate()
                    .filter(|(slot, _)| slot % n == i)
                    .flat_map(|(_, c)| c.iter().copied())
                    .collect();
                prop_assert_eq!(own, &expected);
            }
        }
    }
}
