//! Benchmark-only crate; see `benches/core_ops.rs`.
//!
//! The interesting scaling questions are all about the symmetric-basis
//! representation: evolution and spectra are polynomial in `N`, induced
//! unitaries carry a combinatorial prefactor, and dense verification is
//! exponential and only feasible for small systems.

pub use boat_core;
