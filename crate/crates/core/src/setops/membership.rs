//! Point membership by a phase-1 linear program over the generator
//! coefficients.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DVector;

use super::{Zonotope, MEMBERSHIP_TOL};
use crate::error::{Error, Result};

impl Zonotope {
    /// Decides `p in <g, H>`, i.e. whether `H xi = p - g` has a solution with
    /// `|xi|_inf <= 1`.
    ///
    /// The equality residual is absorbed by nonnegative slacks whose sum is
    /// minimized; the point is accepted when that sum is within
    /// [`MEMBERSHIP_TOL`] (scaled by the magnitude of `p - g`).
    pub fn contains_point(&self, p: &DVector<f64>) -> Result<bool> {
        if p.len() != self.dim() {
            return Err(Error::dim(format!(
                "point of length {} tested against {}-D zonotope",
                p.len(),
                self.dim()
            )));
        }
        let d = p - self.center();
        let tol = MEMBERSHIP_TOL * (1.0 + d.amax());
        if self.order() == 0 {
            return Ok(d.amax() <= tol);
        }
        Ok(phase_one_residual(self, &d)? <= tol)
    }
}

fn phase_one_residual(z: &Zonotope, d: &DVector<f64>) -> Result<f64> {
    let h = z.generators();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let xi: Vec<_> = (0..h.ncols()).map(|_| lp.add_var(0.0, (-1.0, 1.0))).collect();
    for row in 0..h.nrows() {
        let up = lp.add_var(1.0, (0.0, f64::INFINITY));
        let down = lp.add_var(1.0, (0.0, f64::INFINITY));
        let mut terms: Vec<_> = xi
            .iter()
            .enumerate()
            .map(|(j, &v)| (v, h[(row, j)]))
            .filter(|(_, c)| *c != 0.0)
            .collect();
        terms.push((up, 1.0));
        terms.push((down, -1.0));
        lp.add_constraint(&terms[..], ComparisonOp::Eq, d[row]);
    }
    let solution = lp
        .solve()
        .map_err(|e| Error::NoConvergence(format!("membership program: {e}")))?;
    Ok(solution.objective())
}
