//! Convex regression with spectrahedral functions.
//!
//! A spectrahedral function is the largest eigenvalue of an affine pencil
//! `x ↦ Σᵢ xᵢ Aᵢ + B` whose coefficients are symmetric and block-diagonal
//! with `k × k` blocks. With `k = 1` the pencil is diagonal and the function
//! is an ordinary max of affine pieces; with `k = m` it covers every
//! function representable by an `m × m` linear matrix inequality.
//!
//! The crate is `no_std` (it needs `alloc`). Everything that touches the
//! filesystem, threads or clocks lives in the `specreg` companion crate.

#![no_std]
#![deny(missing_docs)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod altmin;
pub mod data;
mod error;
pub mod eval;
pub mod linalg;
mod math;
pub mod pencil;

pub use altmin::{
    assign_certificates, fit, fit_restart, fit_with_init, lls_update, param_distance_mod_similarity,
    FitConfig, FitReport, RestartReport, StopReason,
};
pub use data::{generate, normalize_directions, split, Dataset, DatasetMeta, GenSpec, Model, Transform};
pub use error::{Error, Result};
pub use eval::{holdout_select, rmse, BenchmarkResult, BenchmarkRow, Estimator, HoldoutSelection};
pub use pencil::{ActiveCertificate, BlockSimilarity, BlockSymMatrix, Pencil};
