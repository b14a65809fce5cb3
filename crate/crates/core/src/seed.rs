//! Splittable seed derivation.
//!
//! A master seed is expanded into independent sub-seeds by folding a path of
//! integers (run, beam, stage, ...) through the SplitMix64 finaliser:
//!
//! ```text
//! h0 = mix(master)
//! h_{k+1} = mix(h_k ^ mix(path[k] + (k + 1)·0x9E3779B97F4A7C15))
//! ```
//!
//! The same path always yields the same seed, and any prefix change
//! decorrelates everything below it.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().enumerate().fold(mix(master), |h, (k, &p)| {
        mix(h ^ mix(p.wrapping_add((k as u64 + 1).wrapping_mul(GOLDEN))))
    })
}

/// Noise stages of the acquisition chain, used as the last path element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Environmental = 1,
    Pink = 2,
    White = 3,
}
