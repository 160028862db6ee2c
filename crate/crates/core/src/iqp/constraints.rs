use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::vec_of;

/// `{ mu : |M mu[block] - c|_2 <= r }`.
///
/// `M` is square after construction (tall maps are reduced by a thin QR
/// factorization), so the set is an ellipsoid when `M` is invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct BallConstraint {
    block: Range<usize>,
    map: DMatrix<f64>,
    center: DVector<f64>,
    radius: f64,
}

impl BallConstraint {
    pub fn new(block: Range<usize>, map: DMatrix<f64>, center: DVector<f64>, radius: f64) -> Result<Self> {
        let k = block.len();
        if map.ncols() != k || map.nrows() != center.len() {
            return Err(Error::dim(format!(
                "ball map is {}x{} for a block of {k} and a center of length {}",
                map.nrows(),
                map.ncols(),
                center.len()
            )));
        }
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball radius {radius} must be finite and >= 0")));
        }
        if map.nrows() <= k {
            return Ok(BallConstraint { block, map, center, radius });
        }
        // |M x - c|^2 = |R x - Q'c|^2 + |(I - QQ')c|^2
        let qr = map.qr();
        let (q, r) = (qr.q(), qr.r());
        let proj = q.transpose() * &center;
        let outside = (&center - &q * &proj).norm_squared();
        let r2 = radius * radius - outside;
        if r2 < 0.0 {
            return Err(Error::Infeasible("ball constraint has no feasible point".into()));
        }
        Ok(BallConstraint {
            block,
            map: r,
            center: proj,
            radius: r2.sqrt(),
        })
    }

    /// Euclidean ball `|mu[block] - center| <= radius`.
    pub fn ball(block: Range<usize>, center: DVector<f64>, radius: f64) -> Result<Self> {
        let k = block.len();
        BallConstraint::new(block, DMatrix::identity(k, k), center, radius)
    }

    pub fn block(&self) -> Range<usize> {
        self.block.clone()
    }
    pub fn map(&self) -> &DMatrix<f64> {
        &self.map
    }
    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `|M mu[block] - c|`.
    pub fn distance(&self, mu: &DVector<f64>) -> f64 {
        let x = mu.rows(self.block.start, self.block.len());
        (&self.map * x - &self.center).norm()
    }

    pub fn contains(&self, mu: &DVector<f64>, tol: f64) -> bool {
        self.distance(mu) <= self.radius + tol
    }

    /// The point of the block mapped onto `c`, when `M` is invertible.
    fn block_center(&self) -> Option<DVector<f64>> {
        self.map.clone().lu().solve(&self.center)
    }

    /// Pulls the block radially toward the ball center until it is inside,
    /// leaving feasible points unchanged.
    pub(crate) fn pull_inside(&self, mu: &mut DVector<f64>) {
        let d = self.distance(mu);
        if d <= self.radius {
            return;
        }
        if let Some(c0) = self.block_center() {
            let s = self.radius / d * (1.0 - 1e-13);
            let mut x = mu.rows_mut(self.block.start, self.block.len());
            let shifted = &c0 + (x.clone_owned() - &c0) * s;
            x.copy_from(&shifted);
        }
    }
}

/// The stability set `{ vec(L) : |vec(A) - (C' ⊗ I) vec(L)|^2 <= 1 - eps3 }`
/// placed at `offset` in the decision vector.
///
/// Every `L` in it satisfies `|A - L C|_2 <= |A - L C|_F < 1`.
pub fn stability_ball(a: &DMatrix<f64>, c: &DMatrix<f64>, eps3: f64, offset: usize) -> Result<BallConstraint> {
    if !(eps3 > 0.0 && eps3 < 1.0) {
        return Err(Error::InvalidParameter(format!("eps3 = {eps3} must lie in (0, 1)")));
    }
    let nx = a.nrows();
    if a.ncols() != nx || c.ncols() != nx {
        return Err(Error::dim("stability ball needs square A and C with n_x columns"));
    }
    let ny = c.nrows();
    let map = c.transpose().kronecker(&DMatrix::<f64>::identity(nx, nx));
    BallConstraint::new(offset..offset + nx * ny, map, vec_of(a), (1.0 - eps3).sqrt())
}

/// `|A - L C|_F^2`, the left-hand side of the stability condition.
pub fn stability_residual(a: &DMatrix<f64>, c: &DMatrix<f64>, l: &DMatrix<f64>) -> f64 {
    (a - l * c).norm_squared()
}

/// Product of balls on disjoint blocks of the decision vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    dim: usize,
    balls: Vec<BallConstraint>,
}

impl ConstraintSet {
    pub fn new(dim: usize, balls: Vec<BallConstraint>) -> Result<Self> {
        let mut covered = vec![false; dim];
        for b in &balls {
            if b.block.end > dim {
                return Err(Error::dim("ball block exceeds the decision dimension"));
            }
            for i in b.block.clone() {
                if covered[i] {
                    return Err(Error::InvalidParameter("ball blocks overlap".into()));
                }
                covered[i] = true;
            }
        }
        Ok(ConstraintSet { dim, balls })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn balls(&self) -> &[BallConstraint] {
        &self.balls
    }

    pub fn contains(&self, mu: &DVector<f64>, tol: f64) -> bool {
        mu.len() == self.dim && self.balls.iter().all(|b| b.contains(mu, tol))
    }

    /// Largest `distance - radius` over the balls (nonpositive when feasible).
    pub fn max_violation(&self, mu: &DVector<f64>) -> f64 {
        self.balls
            .iter()
            .map(|b| b.distance(mu) - b.radius)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn pull_inside(&self, mu: &mut DVector<f64>) {
        for b in &self.balls {
            b.pull_inside(mu);
        }
    }
}

/// Interval of each coordinate of `v = D' mu` over the constraint set.
pub fn bound_box_for_v(set: &ConstraintSet, d: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    let n = set.dim;
    if d.shape() != (n, n) {
        return Err(Error::dim("transformation does not match the constraint dimension"));
    }
    let mut covered = vec![false; n];
    let mut parts = Vec::with_capacity(set.balls.len());
    for b in &set.balls {
        let lu = b.map.clone().lu();
        let inv = lu
            .try_inverse()
            .ok_or_else(|| Error::Unbounded("ball with a singular shaping map".into()))?;
        for i in b.block.clone() {
            covered[i] = true;
        }
        parts.push((b, &inv * &b.center, inv.transpose()));
    }
    if covered.iter().any(|c| !c) {
        return Err(Error::Unbounded("some decision coordinates are not constrained".into()));
    }
    Ok((0..n)
        .map(|l| {
            let col = d.column(l);
            let (mut lo, mut hi) = (0.0, 0.0);
            for (b, x0, inv_t) in &parts {
                let db = col.rows(b.block.start, b.block.len());
                let mid = db.dot(x0);
                let spread = b.radius * (inv_t * db).norm();
                lo += mid - spread;
                hi += mid + spread;
            }
            (lo, hi)
        })
        .collect())
}
