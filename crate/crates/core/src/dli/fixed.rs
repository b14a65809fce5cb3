//! Bit-accurate model of the integer lock-in datapath: signed ADC codes times
//! quantised references, accumulated over one slot, then right-shifted into
//! the export word.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::mux::MuxSchedule;
use crate::{Error, Result};

/// Bit widths of the datapath, all two's complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointSpec {
    pub adc_bits: u32,
    pub ref_bits: u32,
    pub acc_bits: u32,
    pub shift: u32,
    pub out_bits: u32,
}

impl FixedPointSpec {
    /// 14-bit ADC and references, 37-bit accumulator for 500-sample slots,
    /// 5-bit shift into a 32-bit export word.
    pub const REFERENCE: Self = Self {
        adc_bits: 14,
        ref_bits: 14,
        acc_bits: 37,
        shift: 5,
        out_bits: 32,
    };

    pub fn product_bits(&self) -> u32 {
        self.adc_bits + self.ref_bits
    }

    /// Reference full scale, `2^(ref_bits−1) − 1`.
    pub fn ref_scale(&self) -> i64 {
        (1i64 << (self.ref_bits - 1)) - 1
    }

    pub fn validate(&self, slot_len: usize) -> Result<()> {
        if self.adc_bits < 2 || self.ref_bits < 2 || self.acc_bits > 64 || self.out_bits > 64 {
            return Err(Error::config(format!("unsupported widths {self:?}")));
        }
        let need = self.product_bits() + growth_bits(slot_len);
        if self.acc_bits < need {
            return Err(Error::config(format!(
                "{}-bit accumulator cannot hold {slot_len} products of {} bits (needs {need})",
                self.acc_bits,
                self.product_bits()
            )));
        }
        if self.shift >= self.acc_bits || self.out_bits > self.acc_bits - self.shift {
            return Err(Error::config(format!(
                "export of {} bits after a {}-bit shift exceeds the {}-bit accumulator",
                self.out_bits, self.shift, self.acc_bits
            )));
        }
        Ok(())
    }
}

/// `ceil(log2(n))`: extra accumulator bits for summing `n` products.
pub fn growth_bits(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// Integer quadrature frame as exported (after the shift).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedQuadrature {
    pub slot: usize,
    pub x1f: i64,
    pub y1f: i64,
    pub x2f: i64,
    pub y2f: i64,
}

impl FixedQuadrature {
    /// Rescales to the units of the float demodulator with unit references:
    /// `value·2^shift / ref_scale`.
    pub fn to_float(&self, fmt: &FixedPointSpec) -> [f64; 4] {
        let k = (1u64 << fmt.shift) as f64 / fmt.ref_scale() as f64;
        [self.x1f, self.y1f, self.x2f, self.y2f].map(|v| v as f64 * k)
    }
}

fn fits(v: i128, bits: u32) -> bool {
    let lim = 1i128 << (bits - 1);
    (-lim..lim).contains(&v)
}

/// Quantised references: `round(cos(·)·ref_scale)`.
pub fn quantized_references(fmt: &FixedPointSpec, per_period: usize, slot_len: usize, phase_rad: f64) -> [Vec<i64>; 4] {
    let scale = fmt.ref_scale() as f64;
    let w = 2.0 * PI / per_period as f64;
    let wave = |h: f64, off: f64| -> Vec<i64> {
        (0..slot_len)
            .map(|d| ((h * w * d as f64 + phase_rad + off).cos() * scale).round() as i64)
            .collect()
    };
    [wave(1.0, 0.0), wave(1.0, FRAC_PI_2), wave(2.0, 0.0), wave(2.0, FRAC_PI_2)]
}

/// Integer lock-in over every slot of `stream` (ADC codes).
///
/// Fails on any code outside `adc_bits`, any partial sum outside `acc_bits`
/// or any shifted result outside `out_bits`. The shift truncates toward −∞.
pub fn fixed_point_demodulate(
    stream: &[i32],
    sched: &MuxSchedule,
    fmt: &FixedPointSpec,
    phase_rad: f64,
) -> Result<Vec<FixedQuadrature>> {
    let per_period = sched.samples_per_period()?;
    let d = sched.slot_len()?;
    fmt.validate(d)?;
    if stream.is_empty() || stream.len() % d != 0 {
        return Err(Error::shape(format!(
            "stream of {} codes is not a whole number of {d}-sample slots",
            stream.len()
        )));
    }
    let refs = quantized_references(fmt, per_period, d, phase_rad);
    stream
        .chunks_exact(d)
        .enumerate()
        .map(|(k, slot)| {
            let mut acc = [0i128; 4];
            for (n, &code) in slot.iter().enumerate() {
                if !fits(code as i128, fmt.adc_bits) {
                    return Err(Error::Overflow {
                        stage: "adc input",
                        value: code as i128,
                        bits: fmt.adc_bits,
                    });
                }
                for (a, r) in acc.iter_mut().zip(&refs) {
                    let p = code as i128 * r[n] as i128;
                    debug_assert!(fits(p, fmt.product_bits()));
                    *a += p;
                    if !fits(*a, fmt.acc_bits) {
                        return Err(Error::Overflow {
                            stage: "accumulator",
                            value: *a,
                            bits: fmt.acc_bits,
                        });
                    }
                }
            }
            let mut out = [0i64; 4];
            for (o, a) in out.iter_mut().zip(acc) {
                let shifted = a >> fmt.shift;
                if !fits(shifted, fmt.out_bits) {
                    return Err(Error::Overflow {
                        stage: "export",
                        value: shifted,
                        bits: fmt.out_bits,
                    });
                }
                *o = shifted as i64;
            }
            Ok(FixedQuadrature {
                slot: k + 1,
                x1f: out[0],
                y1f: out[1],
                x2f: out[2],
                y2f: out[3],
            })
        })
        .collect()
}

/// Rounds a real signal to signed ADC codes, `full_scale` mapping to the largest code.
pub fn quantize_adc(samples: &[f64], full_scale: f64, adc_bits: u32) -> Vec<i32> {
    let max = ((1i64 << (adc_bits - 1)) - 1) as f64;
    let min = -(1i64 << (adc_bits - 1)) as f64;
    samples
        .iter()
        .map(|s| (s / full_scale * max).round().clamp(min, max) as i32)
        .collect()
}

/// Error bound between the rescaled fixed-point result and the float
/// demodulator: `D·(2^(1−ref_bits)·max|code| + 0.5·2^shift)`.
pub fn quantization_bound(fmt: &FixedPointSpec, slot_len: usize, max_abs_code: f64) -> f64 {
    slot_len as f64
        * (2f64.powi(1 - fmt.ref_bits as i32) * max_abs_code + 0.5 * 2f64.powi(fmt.shift as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dli::lockin::demodulate_slots;
    use crate::dli::make_references;

    fn sched() -> MuxSchedule {
        MuxSchedule::reference()
    }

    #[test]
    fn reference_widths() {
        let f = FixedPointSpec::REFERENCE;
        assert_eq!(f.product_bits(), 28);
        assert_eq!(growth_bits(500), 9);
        assert_eq!(growth_bits(512), 9);
        assert_eq!(growth_bits(513), 10);
        assert_eq!(growth_bits(1), 0);
        assert!(f.validate(500).is_ok());
        assert!(f.validate(1000).is_err());
        assert!(FixedPointSpec { shift: 6, ..f }.validate(500).is_err());
    }

    #[test]
    fn zero_input_zero_output() {
        let q = fixed_point_demodulate(&vec![0; 1000], &sched(), &FixedPointSpec::REFERENCE, 0.0).unwrap();
        assert_eq!(q.len(), 2);
        assert!(q.iter().all(|f| [f.x1f, f.y1f, f.x2f, f.y2f] == [0; 4]));
    }

    #[test]
    fn full_scale_tone_within_bound() {
        let s = sched();
        let fmt = FixedPointSpec::REFERENCE;
        let d = s.slot_len().unwrap();
        let codes: Vec<i32> = (0..d)
            .map(|n| (8191.0 * (2.0 * PI * n as f64 / 250.0 + 0.3).cos()).round() as i32)
            .collect();
        let fixed = fixed_point_demodulate(&codes, &s, &fmt, 0.0).unwrap();
        let float_in: Vec<f64> = codes.iter().map(|&c| c as f64).collect();
        let refs = make_references(s.f_m_hz, s.f_d_hz, d, 0.0).unwrap();
        let fl = demodulate_slots(&float_in, &refs, 1).unwrap();
        let got = fixed[0].to_float(&fmt);
        let want = [fl[0].x1f, fl[0].y1f, fl[0].x2f, fl[0].y2f];
        let bound = quantization_bound(&fmt, d, 8191.0);
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= bound, "{g} vs {w} (bound {bound})");
        }
    }

    #[test]
    fn shift_truncates_toward_negative_infinity() {
        // constant −1 against the in-phase reference gives a small negative sum
        let s = sched();
        let fmt = FixedPointSpec { shift: 20, out_bits: 17, ..FixedPointSpec::REFERENCE };
        let codes = vec![-1; 500];
        let q = fixed_point_demodulate(&codes, &s, &fmt, 0.0).unwrap();
        let refs = quantized_references(&fmt, 250, 500, 0.0);
        let raw: i64 = refs[0].iter().map(|r| -r).sum();
        assert_eq!(q[0].x1f, raw.div_euclid(1 << 20));
    }

    #[test]
    fn overflow_is_an_error() {
        let s = sched();
        let narrow = FixedPointSpec { acc_bits: 37, ..FixedPointSpec::REFERENCE };
        assert!(matches!(
            fixed_point_demodulate(&vec![9000; 500], &s, &narrow, 0.0),
            Err(Error::Overflow { stage: "adc input", .. })
        ));
        // export narrower than the shifted accumulator
        let tight = FixedPointSpec { out_bits: 8, ..FixedPointSpec::REFERENCE };
        let tone: Vec<i32> = (0..500)
            .map(|n| (8000.0 * (2.0 * PI * n as f64 / 250.0).cos()) as i32)
            .collect();
        assert!(matches!(
            fixed_point_demodulate(&tone, &s, &tight, 0.0),
            Err(Error::Overflow { stage: "export", .. })
        ));
    }

    proptest::proptest! {
        #[test]
        fn random_slots_within_bound(seed in 0u64..u64::MAX) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s = sched();
            let fmt = FixedPointSpec::REFERENCE;
            let codes: Vec<i32> = (0..500).map(|_| rng.gen_range(-8192..=8191)).collect();
            let max = codes.iter().map(|c| (*c as f64).abs()).fold(0.0, f64::max);
            let q = fixed_point_demodulate(&codes, &s, &fmt, 0.0).unwrap();
            let refs = make_references(s.f_m_hz, s.f_d_hz, 500, 0.0).unwrap();
            let input: Vec<f64> = codes.iter().map(|&c| c as f64).collect();
            let fl = refs.demodulate(1, &input);
            let bound = quantization_bound(&fmt, 500, max);
            for (g, w) in q[0].to_float(&fmt).iter().zip([fl.x1f, fl.y1f, fl.x2f, fl.y2f]) {
                proptest::prop_assert!((g - w).abs() <= bound);
            }
        }
    }

    #[test]
    fn adc_quantisation_clamps() {
        let q = quantize_adc(&[0.0, 1.0, -1.0, 2.0, -2.0, 0.5], 1.0, 14);
        assert_eq!(q, vec![0, 8191, -8191, 8191, -8192, 4096]);
    }
}
