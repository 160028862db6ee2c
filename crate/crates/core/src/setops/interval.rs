use nalgebra::{DMatrix, DVector};

use super::Zonotope;
use crate::error::{Error, Result};
use crate::linalg::{all_finite, hcat};

/// Elementwise bounds `[lower, upper]` on a matrix.
///
/// A diagonal entry with `lower < upper == 1` stands for the half-open fault
/// interval `[lower, 1)`; [`IntervalMatrix::closed`] turns it into the closed
/// interval `[lower, 1 - eps1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMatrix {
    lower: DMatrix<f64>,
    upper: DMatrix<f64>,
}

impl IntervalMatrix {
    pub fn new(lower: DMatrix<f64>, upper: DMatrix<f64>) -> Result<Self> {
        if lower.shape() != upper.shape() {
            return Err(Error::dim("interval bounds differ in shape"));
        }
        if !all_finite(&lower) || !all_finite(&upper) {
            return Err(Error::InvalidParameter("interval bounds must be finite".into()));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::InvalidParameter(
                "interval lower bound exceeds upper bound".into(),
            ));
        }
        Ok(IntervalMatrix { lower, upper })
    }

    /// Degenerate interval around a point matrix.
    pub fn point(m: DMatrix<f64>) -> Self {
        IntervalMatrix {
            lower: m.clone(),
            upper: m,
        }
    }

    pub fn identity(n: usize) -> Self {
        IntervalMatrix::point(DMatrix::identity(n, n))
    }

    /// Single-actuator fault bound: identity except the diagonal entry
    /// `actuator` (0-based), which ranges over `[lo, hi]` (`[lo, 1)` if `hi == 1`).
    pub fn single_fault(n: usize, actuator: usize, lo: f64, hi: f64) -> Result<Self> {
        if actuator >= n {
            return Err(Error::dim(format!(
                "actuator index {actuator} out of range for {n} inputs"
            )));
        }
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "fault interval [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1"
            )));
        }
        let mut lower = DMatrix::identity(n, n);
        let mut upper = DMatrix::identity(n, n);
        lower[(actuator, actuator)] = lo;
        upper[(actuator, actuator)] = hi;
        IntervalMatrix::new(lower, upper)
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DMatrix<f64> {
        &self.upper
    }

    pub fn shape(&self) -> (usize, usize) {
        self.lower.shape()
    }

    pub fn mid(&self) -> DMatrix<f64> {
        (&self.lower + &self.upper) * 0.5
    }

    pub fn rad(&self) -> DMatrix<f64> {
        (&self.upper - &self.lower) * 0.5
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }

    pub fn contains(&self, m: &DMatrix<f64>) -> bool {
        m.shape() == self.shape()
            && m.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(x, (l, u))| l <= x && x <= u)
    }

    /// Closes half-open diagonal entries `[lo, 1)` to `[lo, 1 - eps1]`.
    pub fn closed(&self, eps1: f64) -> Result<IntervalMatrix> {
        check_eps1(eps1)?;
        let mut upper = self.upper.clone();
        let n = self.lower.nrows().min(self.lower.ncols());
        for i in 0..n {
            if self.upper[(i, i)] == 1.0 && self.lower[(i, i)] < 1.0 {
                upper[(i, i)] = (1.0 - eps1).max(self.lower[(i, i)]);
            }
        }
        IntervalMatrix::new(self.lower.clone(), upper)
    }

    /// Scales every entry interval by `s >= 0`.
    pub fn scaled(&self, s: f64) -> Result<IntervalMatrix> {
        if s < 0.0 {
            return Err(Error::InvalidParameter("interval scale must be nonnegative".into()));
        }
        IntervalMatrix::new(&self.lower * s, &self.upper * s)
    }

    /// Returns `Some(None)` for the identity, `Some(Some((j, lo, hi)))` for a
    /// single-fault bound on actuator `j`, and `None` otherwise.
    pub fn single_fault_entry(&self) -> Option<Option<(usize, f64, f64)>> {
        let (r, c) = self.shape();
        if r != c {
            return None;
        }
        let mut fault = None;
        for i in 0..r {
            for j in 0..c {
                let (l, u) = (self.lower[(i, j)], self.upper[(i, j)]);
                if i != j {
                    if l != 0.0 || u != 0.0 {
                        return None;
                    }
                } else if l == 1.0 && u == 1.0 {
                    continue;
                } else {
                    if fault.is_some() || l < 0.0 || u > 1.0 || l >= u {
                        return None;
                    }
                    fault = Some((i, l, u));
                }
            }
        }
        Some(fault)
    }

    fn is_diagonal(&self) -> bool {
        let (r, c) = self.shape();
        (0..r).all(|i| {
            (0..c).all(|j| i == j || (self.lower[(i, j)] == 0.0 && self.upper[(i, j)] == 0.0))
        })
    }
}

fn check_eps1(eps1: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps1) {
        return Err(Error::InvalidParameter(format!(
            "eps1 = {eps1} must lie in [0, 1)"
        )));
    }
    Ok(())
}

/// Encloses `{ B G u : G in g }` for a diagonal interval matrix `g`.
///
/// The center is `B mid(g) u`; every nondegenerate diagonal entry `j`
/// contributes the box generator block `rad_j diag(B e_j) u_j`.
pub fn diag_interval_product(
    b: &DMatrix<f64>,
    g: &IntervalMatrix,
    u: &DVector<f64>,
) -> Result<Zonotope> {
    let (r, c) = g.shape();
    if r != c || b.ncols() != r || u.len() != r {
        return Err(Error::dim(format!(
            "interval product: B is {}x{}, G is {r}x{c}, u has length {}",
            b.nrows(),
            b.ncols(),
            u.len()
        )));
    }
    if !g.is_diagonal() {
        return Err(Error::InvalidParameter(
            "interval product enclosure expects a diagonal interval matrix".into(),
        ));
    }
    let nx = b.nrows();
    let center = b * g.mid() * u;
    let rad = g.rad();
    let blocks: Vec<DMatrix<f64>> = (0..r)
        .filter(|&j| rad[(j, j)] > 0.0)
        .map(|j| DMatrix::from_diagonal(&b.column(j).into_owned()) * (rad[(j, j)] * u[j]))
        .collect();
    let refs: Vec<&DMatrix<f64>> = blocks.iter().collect();
    Zonotope::new(center, hcat(nx, &refs)?)
}

/// Encloses `B G u` over a single-fault (or identity) bound `gi`, closing a
/// half-open `[lo, 1)` entry at `1 - eps1`.
pub fn interval_product_enclosure(
    b: &DMatrix<f64>,
    gi: &IntervalMatrix,
    u: &DVector<f64>,
    eps1: f64,
) -> Result<Zonotope> {
    check_eps1(eps1)?;
    if gi.single_fault_entry().is_none() {
        return Err(Error::InvalidParameter(
            "mode bound is not in single-fault diagonal form".into(),
        ));
    }
    diag_interval_product(b, &gi.closed(eps1)?, u)
}
