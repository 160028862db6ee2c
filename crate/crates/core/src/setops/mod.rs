//! Zonotope and interval-matrix arithmetic.
//!
//! Every set in the crate (state estimates, output sets, residuals,
//! disturbance and noise bounds, exclusion sets) is a [`Zonotope`]. Fault
//! bounds are diagonal [`IntervalMatrix`] values and enter the set recursions
//! through [`interval_product_enclosure`].

mod interval;
mod membership;
mod polygon;
mod zonotope;

pub use interval::{diag_interval_product, interval_product_enclosure, IntervalMatrix};
pub use zonotope::{Zonotope, DEFAULT_REDUCTION_ORDER};

/// Default closure margin for half-open fault intervals `[lo, 1)`.
pub const DEFAULT_EPS1: f64 = 0.01;

/// Tolerance on the equality residual of the point-membership program.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
