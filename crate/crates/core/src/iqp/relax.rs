use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::qfp::QuadraticForm;

/// `f(mu) = mu' O1 mu + O2 mu + O3` rewritten in `v = D' mu` as
/// `sum_l theta1_l v_l^2 + theta2 v + theta3`, eigenvalues ascending so the
/// `t` negative ones come first.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalizedProblem {
    pub d: DMatrix<f64>,
    pub theta1: DVector<f64>,
    pub theta2: DVector<f64>,
    pub theta3: f64,
    pub t: usize,
}

impl DiagonalizedProblem {
    pub fn dim(&self) -> usize {
        self.theta1.len()
    }

    /// Exact objective at `v`.
    pub fn eval(&self, v: &DVector<f64>) -> f64 {
        v.iter().zip(self.theta1.iter()).map(|(x, th)| th * x * x).sum::<f64>() + self.theta2.dot(v) + self.theta3
    }

    pub fn to_mu(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.d * v
    }

    pub fn to_v(&self, mu: &DVector<f64>) -> DVector<f64> {
        self.d.transpose() * mu
    }
}

/// Eigendecomposition `D' O1 D = diag(theta)` with ascending eigenvalues and
/// the number `t` of negative ones. Eigenvalues within a relative `1e-12` of
/// zero count as nonnegative.
pub fn diagonalize(o1: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, usize) {
    let n = o1.nrows();
    let eig = SymmetricEigen::new(o1.clone());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let d = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    let theta = DVector::from_fn(n, |i, _| eig.eigenvalues[idx[i]]);
    let tol = 1e-12 * o1.amax().max(1.0);
    let t = theta.iter().take_while(|&&x| x < -tol).count();
    (d, theta, t)
}

/// Diagonalizes a whole quadratic form.
pub fn diagonalize_form(f: &QuadraticForm) -> DiagonalizedProblem {
    let (d, theta1, t) = diagonalize(f.quad());
    let theta2 = d.transpose() * f.lin();
    DiagonalizedProblem {
        d,
        theta1,
        theta2,
        theta3: f.constant(),
        t,
    }
}

/// Uniform breakpoints on `[lo_l, hi_l]` for each concave coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseGrid {
    pub intervals: Vec<(f64, f64)>,
    pub m: usize,
}

impl PiecewiseGrid {
    pub fn new(intervals: Vec<(f64, f64)>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("segment count must be positive".into()));
        }
        if intervals.iter().any(|(lo, hi)| !lo.is_finite() || !hi.is_finite() || lo > hi) {
            return Err(Error::InvalidParameter("grid intervals must be finite and ordered".into()));
        }
        Ok(PiecewiseGrid { intervals, m })
    }

    pub fn width(&self, l: usize) -> f64 {
        let (lo, hi) = self.intervals[l];
        (hi - lo) / self.m as f64
    }

    /// Breakpoint `s` (0-based, `0..=m`) of coordinate `l`.
    pub fn breakpoint(&self, l: usize, s: usize) -> f64 {
        let (lo, hi) = self.intervals[l];
        if s == self.m {
            hi
        } else {
            lo + s as f64 * self.width(l)
        }
    }

    /// Segment containing `v`, clamped to the grid.
    pub fn segment_of(&self, l: usize, v: f64) -> usize {
        let w = self.width(l);
        if w <= 0.0 {
            return 0;
        }
        let s = ((v - self.intervals[l].0) / w).floor();
        (s.max(0.0) as usize).min(self.m - 1)
    }

    /// Lambda weights of `v` on its segment: `zeta[s]`, `zeta[s+1]`.
    pub fn zeta(&self, l: usize, v: f64) -> (usize, Vec<f64>) {
        let s = self.segment_of(l, v);
        let (a, b) = (self.breakpoint(l, s), self.breakpoint(l, s + 1));
        let mut z = vec![0.0; self.m + 1];
        if b > a {
            let w = ((v - a) / (b - a)).clamp(0.0, 1.0);
            z[s] = 1.0 - w;
            z[s + 1] = w;
        } else {
            z[s] = 1.0;
        }
        (s, z)
    }
}

/// Chord of `theta x^2` through `x = a` and `x = b`, as `(slope, intercept)`.
pub(crate) fn chord(theta: f64, a: f64, b: f64) -> (f64, f64) {
    (theta * (a + b), -theta * a * b)
}

/// The lambda-form relaxation of a diagonalized problem: each concave term
/// `theta_l v_l^2` is replaced by its piecewise-linear interpolant on the
/// grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedInstance {
    pub dp: DiagonalizedProblem,
    pub grid: PiecewiseGrid,
}

pub fn build_relaxation(dp: DiagonalizedProblem, grid: PiecewiseGrid) -> Result<RelaxedInstance> {
    if grid.intervals.len() != dp.t {
        return Err(Error::dim(format!(
            "grid covers {} coordinates but {} are concave",
            grid.intervals.len(),
            dp.t
        )));
    }
    Ok(RelaxedInstance { dp, grid })
}

impl RelaxedInstance {
    /// Relaxed objective for explicit weights `zeta[l][s]`, with `v_l` of the
    /// concave coordinates taken as `sum_s zeta[l][s] v^{l,s}`.
    pub fn eval_weights(&self, v: &DVector<f64>, zeta: &[Vec<f64>]) -> f64 {
        let dp = &self.dp;
        let mut total = dp.theta3 + dp.theta2.dot(v);
        for l in dp.t..dp.dim() {
            total += dp.theta1[l] * v[l] * v[l];
        }
        for (l, z) in zeta.iter().enumerate() {
            total += dp.theta1[l]
                * z.iter()
                    .enumerate()
                    .map(|(s, w)| w * self.grid.breakpoint(l, s).powi(2))
                    .sum::<f64>();
        }
        total
    }

    /// Weights consistent with `v` (adjacent pair on the containing segment).
    pub fn zeta_for(&self, v: &DVector<f64>) -> Vec<Vec<f64>> {
        (0..self.dp.t).map(|l| self.grid.zeta(l, v[l]).1).collect()
    }

    /// Relaxed objective with weights consistent with `v`.
    pub fn eval(&self, v: &DVector<f64>) -> f64 {
        let dp = &self.dp;
        let mut total = dp.theta3 + dp.theta2.dot(v);
        for l in 0..dp.dim() {
            if l < dp.t {
                let s = self.grid.segment_of(l, v[l]);
                let (k, c) = chord(dp.theta1[l], self.grid.breakpoint(l, s), self.grid.breakpoint(l, s + 1));
                total += k * v[l] + c;
            } else {
                total += dp.theta1[l] * v[l] * v[l];
            }
        }
        total
    }
}
