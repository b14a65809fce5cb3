//! Quasi-parallel wavelength modulation spectroscopy (QP-WMS) for chemical
//! species tomography, simulated end to end.
//!
//! The crate covers the whole measurement chain:
//!
//! ```text
//! laser drive -> absorption (Voigt) -> noise chain -> slot multiplexer
//!     -> digital lock-in (1f/2f) -> 2f/1f normalisation -> demultiplexer
//!     -> concentration fit | peak absorbance -> SART image
//! ```
//!
//! Every stage is a pure function of its inputs and configuration, so the
//! same scenario and seed always reproduce the same numbers.

pub mod dli;
pub mod error;
pub mod fitting;
pub mod io;
pub mod mux;
pub mod noise;
pub mod scenario;
pub mod seed;
pub mod spectroscopy;
pub mod tomography;

pub use error::{Error, Result};
