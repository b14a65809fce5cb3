//! Voigt profile through the Faddeeva function `w(z) = exp(-z²)·erfc(-iz)`.
//!
//! `w` is evaluated in the closed upper half plane with Weideman's rational
//! expansion in `Z = (L + iz)/(L - iz)`:
//!
//! ```text
//! w(z) ≈ 2·p(Z)/(L - iz)² + 1/(√π·(L - iz)),   p(Z) = Σ_{n=1..N} a_n Z^(n-1)
//! ```
//!
//! The coefficients come from a 4N-point DFT of `exp(-t²)(L² + t²)` sampled
//! at `t = L·tan(θ/2)`. With N = 32 the real part is accurate to ~1e-14 of
//! the peak over the widths used here.

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use num_complex::Complex64;

const TERMS: usize = 32;

struct Expansion {
    l: f64,
    coeffs: [f64; TERMS],
}

fn expansion() -> &'static Expansion {
    static CELL: OnceLock<Expansion> = OnceLock::new();
    CELL.get_or_init(|| {
        let m = 2 * TERMS;
        let m2 = 2 * m;
        let l = (TERMS as f64 / 2f64.sqrt()).sqrt();
        // f[0] = 0, f[i] sampled at k = i - m for i in 1..m2
        let mut f = vec![0.0; m2];
        for (i, fi) in f.iter_mut().enumerate().skip(1) {
            let k = i as f64 - m as f64;
            let theta = k * PI / m as f64;
            let t = l * (theta / 2.0).tan();
            *fi = (-t * t).exp() * (l * l + t * t);
        }
        // fftshift for an even-length sequence swaps the two halves.
        let shifted: Vec<f64> = (0..m2).map(|i| f[(i + m) % m2]).collect();
        let mut coeffs = [0.0; TERMS];
        for (n, c) in coeffs.iter_mut().enumerate() {
            let k = n + 1;
            let re: f64 = shifted
                .iter()
                .enumerate()
                .map(|(j, v)| v * (2.0 * PI * (k * j) as f64 / m2 as f64).cos())
                .sum();
            *c = re / m2 as f64;
        }
        Expansion { l, coeffs }
    })
}

/// Faddeeva function for `Im z >= 0`.
pub fn faddeeva(z: Complex64) -> Complex64 {
    debug_assert!(z.im >= 0.0, "faddeeva expansion valid for Im z >= 0");
    let e = expansion();
    let i = Complex64::i();
    let lz = e.l - i * z;
    let big_z = (e.l + i * z) / lz;
    let mut p = Complex64::new(e.coeffs[TERMS - 1], 0.0);
    for &a in e.coeffs[..TERMS - 1].iter().rev() {
        p = p * big_z + a;
    }
    2.0 * p / (lz * lz) + 1.0 / (PI.sqrt() * lz)
}

/// Area-normalised Voigt profile (cm) at detuning `dnu` (cm⁻¹) from line centre.
///
/// Widths are half widths at half maximum. A zero width collapses the profile
/// to the pure Gaussian or pure Lorentzian.
pub fn voigt(dnu: f64, doppler_hwhm: f64, lorentz_hwhm: f64) -> f64 {
    debug_assert!(doppler_hwhm >= 0.0 && lorentz_hwhm >= 0.0);
    if doppler_hwhm == 0.0 {
        return lorentzian(dnu, lorentz_hwhm);
    }
    if lorentz_hwhm == 0.0 {
        return gaussian(dnu, doppler_hwhm);
    }
    let s = LN_2.sqrt() / doppler_hwhm;
    let z = Complex64::new(dnu * s, lorentz_hwhm * s);
    faddeeva(z).re * s / PI.sqrt()
}

pub fn gaussian(dnu: f64, hwhm: f64) -> f64 {
    (LN_2 / PI).sqrt() / hwhm * (-LN_2 * (dnu / hwhm).powi(2)).exp()
}

pub fn lorentzian(dnu: f64, hwhm: f64) -> f64 {
    hwhm / (PI * (dnu * dnu + hwhm * hwhm))
}

/// Olivero–Longbothum estimate of the Voigt half width.
pub fn voigt_hwhm(doppler_hwhm: f64, lorentz_hwhm: f64) -> f64 {
    0.5346 * lorentz_hwhm
        + (0.2166 * lorentz_hwhm * lorentz_hwhm + doppler_hwhm * doppler_hwhm).sqrt()
}
