//! Numerical laboratory for twisted J-functionals on flat complex tori.
//!
//! The crate evaluates the energy functionals on the space of Kähler
//! potentials of `C^n / (Z + iZ)^n` (`n = 1, 2`), runs their negative
//! gradient flow, computes Mabuchi geodesic segments by path-energy
//! minimization, and checks the identities and inequalities that tie these
//! objects together.

// Negated comparisons are the NaN-rejecting guards throughout the crate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod error;
pub mod field;
pub mod flow;
pub mod functionals;
pub mod geodesic;
pub mod geometry;
pub mod herm;
mod lbfgs;
pub mod random;
pub mod snapshot;
mod spectral;

pub use check::CheckResult;
pub use error::{LabError, Result};
pub use field::{GridSpec, HermitianField, ScalarField};
pub use geometry::{KahlerState, TwistData};
pub use herm::Herm;

#[cfg(test)]
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;
