//! Set-based passive and active fault diagnosis for discrete LTI systems with
//! multiplicative actuator faults.
//!
//! The crate is organised bottom-up:
//!
//! - [`setops`]: zonotopes and interval matrices
//! - [`plant`]: the ground-truth multi-mode plant
//! - [`observer`]: the bank of set-valued observers, residuals and diagnosis
//! - [`qfp`]: quadratic fractional programs (Dinkelbach)
//! - [`pfd`]: per-observer gain design
//! - [`afd`]: joint gain and input design
//! - [`iqp`]: the constrained indefinite QP solver
//! - [`harness`]: scenarios, simulation campaigns and result files

pub mod afd;
pub mod error;
pub mod harness;
pub mod iqp;
pub mod linalg;
pub mod observer;
pub mod pfd;
pub mod plant;
pub mod qfp;
pub mod setops;

pub use error::{Error, Result};
