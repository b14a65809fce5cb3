use serde::{Deserialize, Serialize};

use super::lockin::{make_references, normalize_2f1f, References};
use crate::mux::{beam_index, check_aligned, multiplex, MuxSchedule};
use crate::spectroscopy::SampledWaveform;
use crate::{Error, Result};

/// Half of the sinusoidal scan used for spectra. With the trigger at the
/// scan maximum, the wavenumber falls over the first half of each scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanPortion {
    #[default]
    Falling,
    Rising,
    Full,
}

impl ScanPortion {
    /// Whether 1-based slot `j` is used, given `slots_per_scan`.
    pub fn contains(&self, j: usize, slots_per_scan: usize) -> bool {
        let within = (j - 1) % slots_per_scan;
        match self {
            ScanPortion::Falling => within < slots_per_scan / 2,
            ScanPortion::Rising => within >= slots_per_scan / 2,
            ScanPortion::Full => true,
        }
    }

    /// Used slot indices among the first `total_slots`.
    pub fn slots(&self, total_slots: usize, slots_per_scan: usize) -> Vec<usize> {
        (1..=total_slots)
            .filter(|&j| self.contains(j, slots_per_scan))
            .collect()
    }
}

impl std::str::FromStr for ScanPortion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "falling" => Ok(ScanPortion::Falling),
            "rising" => Ok(ScanPortion::Rising),
            "full" => Ok(ScanPortion::Full),
            other => Err(Error::config(format!("unknown scan portion '{other}'"))),
        }
    }
}

/// 2f/1f spectrum of one beam; `slots[k]` is the slot index that produced `values[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSpectrum {
    /// 1-based beam index.
    pub beam: usize,
    pub slots: Vec<usize>,
    pub values: Vec<f64>,
}

impl HarmonicSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn peak(&self) -> Option<f64> {
        self.values.iter().copied().fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }

    /// Values at the given slots, in the order given.
    pub fn restrict_to(&self, slots: &[usize]) -> Option<HarmonicSpectrum> {
        let values = slots
            .iter()
            .map(|j| self.slots.iter().position(|s| s == j).map(|k| self.values[k]))
            .collect::<Option<Vec<_>>>()?;
        Some(HarmonicSpectrum {
            beam: self.beam,
            slots: slots.to_vec(),
            values,
        })
    }
}

/// A multiplexed 2f/1f sample tagged with its slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotValue {
    pub slot: usize,
    pub value: f64,
}

/// Routes each slot's value to beam `beam_index(slot, N)`, keeping order.
pub fn demultiplex(mux_spectrum: &[SlotValue], n_beams: usize) -> Result<Vec<HarmonicSpectrum>> {
    if n_beams == 0 || mux_spectrum.len() % n_beams != 0 {
        return Err(Error::shape(format!(
            "{} slots cannot be shared equally by {n_beams} beams",
            mux_spectrum.len()
        )));
    }
    let per_beam = mux_spectrum.len() / n_beams;
    let mut out: Vec<HarmonicSpectrum> = (1..=n_beams)
        .map(|beam| HarmonicSpectrum {
            beam,
            slots: Vec::with_capacity(per_beam),
            values: Vec::with_capacity(per_beam),
        })
        .collect();
    for sv in mux_spectrum {
        let spec = &mut out[beam_index(sv.slot, n_beams)? - 1];
        spec.slots.push(sv.slot);
        spec.values.push(sv.value);
    }
    if out.iter().any(|s| s.len() != per_beam) {
        return Err(Error::shape("slot sequence does not cycle evenly through the beams"));
    }
    Ok(out)
}

/// Lock-in and portion settings shared by both pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockInSettings {
    pub sched: MuxSchedule,
    pub portion: ScanPortion,
    pub phase_rad: f64,
}

impl LockInSettings {
    pub fn new(sched: MuxSchedule, portion: ScanPortion) -> Self {
        Self {
            sched,
            portion,
            phase_rad: 0.0,
        }
    }

    pub fn references(&self) -> Result<References> {
        make_references(
            self.sched.f_m_hz,
            self.sched.f_d_hz,
            self.sched.slot_len()?,
            self.phase_rad,
        )
    }

    /// Used slots for a stream of `len` samples.
    pub fn used_slots(&self, len: usize) -> Result<Vec<usize>> {
        let d = self.sched.slot_len()?;
        let per_scan = self.sched.slots_per_scan()?;
        if len % (d * per_scan) != 0 {
            return Err(Error::shape(format!(
                "{len} samples is not a whole number of scans ({} samples each)",
                d * per_scan
            )));
        }
        Ok(self.portion.slots(len / d, per_scan))
    }
}

/// 2f/1f value of every used slot. Only used slots are demodulated, which is
/// the same arithmetic as demodulating everything and selecting afterwards.
fn normalized_sequence(
    samples: &[f64],
    background: &[f64],
    refs: &References,
    used: &[usize],
) -> Result<Vec<SlotValue>> {
    let d = refs.len();
    used.iter()
        .map(|&j| {
            let range = (j - 1) * d..j * d;
            let sig = refs.demodulate(j, &samples[range.clone()]);
            let bg = refs.demodulate(j, &background[range]);
            Ok(SlotValue {
                slot: j,
                value: normalize_2f1f(&sig, &bg)?,
            })
        })
        .collect()
}

/// Quasi-parallel chain: multiplex, demodulate, normalise against the
/// identically processed background, keep the scan portion, demultiplex.
pub fn run_qp_pipeline(
    beams: &[SampledWaveform],
    backgrounds: &[SampledWaveform],
    settings: &LockInSettings,
) -> Result<Vec<HarmonicSpectrum>> {
    let sched = &settings.sched;
    let refs = settings.references()?;
    let len = check_aligned(beams, sched, refs.len())?;
    check_aligned(backgrounds, sched, refs.len())?;
    if backgrounds[0].len() != len {
        return Err(Error::shape("background and transmission lengths differ"));
    }
    let used = settings.used_slots(len)?;
    let stream = multiplex(beams, sched)?;
    let bg_stream = multiplex(backgrounds, sched)?;
    let mux_spectrum = normalized_sequence(&stream.samples, &bg_stream.samples, &refs, &used)?;
    demultiplex(&mux_spectrum, sched.n_beams)
}

/// Fully parallel reference: every beam demodulated over every used slot.
pub fn run_fp_pipeline(
    beams: &[SampledWaveform],
    backgrounds: &[SampledWaveform],
    settings: &LockInSettings,
) -> Result<Vec<HarmonicSpectrum>> {
    let refs = settings.references()?;
    if beams.len() != backgrounds.len() || beams.is_empty() {
        return Err(Error::shape("need one background per beam"));
    }
    beams
        .iter()
        .zip(backgrounds)
        .enumerate()
        .map(|(i, (beam, bg))| {
            if beam.len() != bg.len() || beam.f_d_hz != settings.sched.f_d_hz {
                return Err(Error::shape(format!("beam {} does not match its background", i + 1)));
            }
            let used = settings.used_slots(beam.len())?;
            let seq = normalized_sequence(&beam.samples, &bg.samples, &refs, &used)?;
            Ok(HarmonicSpectrum {
                beam: i + 1,
                slots: seq.iter().map(|s| s.slot).collect(),
                values: seq.iter().map(|s| s.value).collect(),
            })
        })
        .collect()
}
