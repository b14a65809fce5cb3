//! Digital lock-in: per-slot quadrature demodulation at 1f and 2f, 2f/1f
//! normalisation against a background, and the QP/FP spectrum pipelines.

pub mod fixed;
mod lockin;
mod pipeline;

pub use fixed::{fixed_point_demodulate, FixedPointSpec, FixedQuadrature};
pub use lockin::{
    demodulate_slots, demodulate_stream, make_references, normalize_2f1f, QuadratureFrame, References,
};
pub use pipeline::{
    demultiplex, run_fp_pipeline, run_qp_pipeline, HarmonicSpectrum, LockInSettings, ScanPortion, SlotValue,
};
