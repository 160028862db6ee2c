//! Convex node problems: a separable quadratic in `v` over the product of
//! balls (in `mu = D v`) and a box on selected coordinates, solved with
//! Clarabel.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::{DMatrix, DVector};

use super::constraints::ConstraintSet;
use crate::error::{Error, Result};

/// Constraint rows in `v`, shared by every node of one tree.
pub(crate) struct NodeQp {
    n: usize,
    soc_rows: Vec<Vec<f64>>,
    soc_rhs: Vec<f64>,
    soc_sizes: Vec<usize>,
    settings: DefaultSettings<f64>,
}

pub(crate) enum QpOutcome {
    Solved(DVector<f64>),
    Infeasible,
}

impl NodeQp {
    pub(crate) fn new(set: &ConstraintSet, d: &DMatrix<f64>) -> Result<Self> {
        let n = d.nrows();
        let mut soc_rows = Vec::new();
        let mut soc_rhs = Vec::new();
        let mut soc_sizes = Vec::new();
        for b in set.balls() {
            let block = b.block();
            let rows = b.map() * d.rows(block.start, block.len());
            soc_rows.push(vec![0.0; n]);
            soc_rhs.push(b.radius());
            for r in 0..rows.nrows() {
                soc_rows.push(rows.row(r).iter().copied().collect());
                soc_rhs.push(b.center()[r]);
            }
            soc_sizes.push(rows.nrows() + 1);
        }
        let mut settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .build()
            .map_err(|e| Error::NoConvergence(format!("QP settings: {e:?}")))?;
        settings.tol_gap_abs = 1e-11;
        settings.tol_gap_rel = 1e-11;
        settings.tol_feas = 1e-11;
        settings.tol_ktratio = 1e-9;
        settings.max_iter = 300;
        Ok(NodeQp {
            n,
            soc_rows,
            soc_rhs,
            soc_sizes,
            settings,
        })
    }

    /// Minimizes `sum_l quad_l v_l^2 + lin' v` subject to the balls and
    /// `lo_l <= v_l <= hi_l` for each `(l, lo, hi)` in `boxes`.
    pub(crate) fn solve(&self, quad: &[f64], lin: &DVector<f64>, boxes: &[(usize, f64, f64)]) -> Result<QpOutcome> {
        let n = self.n;
        let mut pd = vec![vec![0.0; n]; n];
        for (l, &q) in quad.iter().enumerate() {
            pd[l][l] = 2.0 * q.max(0.0);
        }
        let p = CscMatrix::from(&pd);
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(2 * boxes.len() + self.soc_rows.len());
        let mut rhs = Vec::with_capacity(rows.capacity());
        for &(l, lo, hi) in boxes {
            let mut up = vec![0.0; n];
            up[l] = 1.0;
            rows.push(up);
            rhs.push(hi);
            let mut dn = vec![0.0; n];
            dn[l] = -1.0;
            rows.push(dn);
            rhs.push(-lo);
        }
        rows.extend(self.soc_rows.iter().cloned());
        rhs.extend(self.soc_rhs.iter().copied());
        let mut cones = Vec::with_capacity(1 + self.soc_sizes.len());
        if !boxes.is_empty() {
            cones.push(SupportedConeT::NonnegativeConeT(2 * boxes.len()));
        }
        cones.extend(self.soc_sizes.iter().map(|&k| SupportedConeT::SecondOrderConeT(k)));
        let a = CscMatrix::from(&rows);
        let mut solver = DefaultSolver::new(&p, lin.as_slice(), &a, &rhs, &cones, self.settings.clone())
            .map_err(|e| Error::NoConvergence(format!("QP setup: {e:?}")))?;
        solver.solve();
        match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {
                Ok(QpOutcome::Solved(DVector::from_column_slice(&solver.solution.x)))
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => Ok(QpOutcome::Infeasible),
            s => Err(Error::NoConvergence(format!("node QP ended with status {s:?}"))),
        }
    }
}
