//! Quadratic fractional programs `min J_num(mu) / J_den(mu)` solved through
//! the Dinkelbach parametrization
//!
//! ```text
//! M(gamma) = min_mu  J_num(mu) - gamma * J_den(mu)
//! ```
//!
//! `M` is concave and strictly decreasing and its root is the optimal ratio.
//! The inner minimization is pluggable: [`Unconstrained`] uses the closed
//! form, the constrained solver lives in [`crate::iqp`].

use log::{debug, warn};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::symmetrize;

/// Default precision of the bisection on `M(gamma)`.
pub const DEFAULT_EPS: f64 = 1e-8;

/// Relative pivot threshold below which the closed-form minimizer treats the
/// Hessian as singular.
pub const PIVOT_TOL: f64 = 1e-12;

const MAX_BISECTIONS: usize = 200;
const MAX_MARCHES: usize = 1_000_000;

/// `f(x) = x' Q x + l' x + c` with `Q` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    quad: DMatrix<f64>,
    lin: DVector<f64>,
    constant: f64,
}

impl QuadraticForm {
    /// The quadratic part is symmetrized.
    pub fn new(quad: DMatrix<f64>, lin: DVector<f64>, constant: f64) -> Result<Self> {
        let n = lin.len();
        if quad.shape() != (n, n) {
            return Err(Error::dim(format!(
                "quadratic part is {}x{}, linear part has length {n}",
                quad.nrows(),
                quad.ncols()
            )));
        }
        if !constant.is_finite() || quad.iter().chain(lin.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("quadratic form is not finite".into()));
        }
        Ok(QuadraticForm {
            quad: symmetrize(&quad),
            lin,
            constant,
        })
    }

    pub fn zeros(n: usize) -> Self {
        QuadraticForm {
            quad: DMatrix::zeros(n, n),
            lin: DVector::zeros(n),
            constant: 0.0,
        }
    }

    pub fn quad(&self) -> &DMatrix<f64> {
        &self.quad
    }
    pub fn lin(&self) -> &DVector<f64> {
        &self.lin
    }
    pub fn constant(&self) -> f64 {
        self.constant
    }
    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.quad * x)) + self.lin.dot(x) + self.constant
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.quad * x * 2.0 + &self.lin
    }

    /// `self - gamma * other`.
    pub fn minus_scaled(&self, gamma: f64, other: &QuadraticForm) -> QuadraticForm {
        QuadraticForm {
            quad: &self.quad - &other.quad * gamma,
            lin: &self.lin - &other.lin * gamma,
            constant: self.constant - gamma * other.constant,
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &QuadraticForm) -> QuadraticForm {
        self.minus_scaled(-s, other)
    }
}

/// `min numerator / denominator` together with its parametrized family.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricQfp {
    pub numerator: QuadraticForm,
    pub denominator: QuadraticForm,
}

impl ParametricQfp {
    pub fn new(numerator: QuadraticForm, denominator: QuadraticForm) -> Result<Self> {
        if numerator.dim() != denominator.dim() {
            return Err(Error::dim("numerator and denominator differ in dimension"));
        }
        Ok(ParametricQfp {
            numerator,
            denominator,
        })
    }

    pub fn dim(&self) -> usize {
        self.numerator.dim()
    }

    /// `O(gamma) = numerator - gamma * denominator`.
    pub fn parametrized(&self, gamma: f64) -> QuadraticForm {
        self.numerator.minus_scaled(gamma, &self.denominator)
    }

    pub fn ratio(&self, x: &DVector<f64>) -> f64 {
        self.numerator.eval(x) / self.denominator.eval(x)
    }
}

/// `lo <= gamma* <= hi` with `M(lo) >= 0 >= M(hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaBracket {
    pub lo: f64,
    pub hi: f64,
}

/// Outcome of one evaluation of `M(gamma)`.
#[derive(Debug, Clone, PartialEq)]
pub enum InnerSolution {
    Bounded { value: f64, minimizer: DVector<f64> },
    Unbounded,
}

impl InnerSolution {
    /// `M(gamma)`, with `-inf` for an unbounded subproblem.
    pub fn value(&self) -> f64 {
        match self {
            InnerSolution::Bounded { value, .. } => *value,
            InnerSolution::Unbounded => f64::NEG_INFINITY,
        }
    }
}

/// Evaluates `M(gamma)`.
///
/// `sign_tol` lets a solver stop early once it can certify `M > sign_tol`
/// or `M < -sign_tol`; the returned value then carries the right sign but
/// is only a bound. When `|M| <= sign_tol` the value and minimizer must be
/// accurate.
pub trait InnerSolver {
    fn solve(&self, p: &ParametricQfp, gamma: f64, sign_tol: Option<f64>) -> Result<InnerSolution>;
}

/// Closed-form minimizer of the parametrized problem over all of `R^n`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unconstrained;

impl InnerSolver for Unconstrained {
    fn solve(&self, p: &ParametricQfp, gamma: f64, _sign_tol: Option<f64>) -> Result<InnerSolution> {
        m_of_gamma_unconstrained(p, gamma)
    }
}

/// Minimizes `x' O1 x + O2 x + O3` over `R^n`.
pub fn minimize_quadratic(f: &QuadraticForm) -> InnerSolution {
    let o1 = f.quad();
    let o2 = f.lin();
    let n = f.dim();
    if n == 0 {
        return InnerSolution::Bounded {
            value: f.constant(),
            minimizer: DVector::zeros(0),
        };
    }
    let scale = o1.amax().max(1.0);
    if let Some(chol) = o1.clone().cholesky() {
        let min_pivot = chol.l_dirty().diagonal().iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
        if min_pivot >= PIVOT_TOL * scale {
            let x = chol.solve(o2) * -0.5;
            let value = f.constant() + 0.5 * o2.dot(&x);
            return InnerSolution::Bounded { value, minimizer: x };
        }
    }
    // Semidefinite or indefinite: fall back to the spectrum.
    let eig = SymmetricEigen::new(o1.clone());
    let tol = PIVOT_TOL * scale;
    if eig.eigenvalues.iter().any(|&l| l < -tol) {
        return InnerSolution::Unbounded;
    }
    let coords = eig.eigenvectors.transpose() * o2;
    let mut y = DVector::zeros(n);
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        if l > tol {
            y[j] = -0.5 * coords[j] / l;
        } else if coords[j].abs() > 1e-10 * (1.0 + o2.norm()) {
            return InnerSolution::Unbounded;
        }
    }
    let x = &eig.eigenvectors * y;
    let value = f.constant() + 0.5 * o2.dot(&x);
    InnerSolution::Bounded { value, minimizer: x }
}

/// `M(gamma)` and its minimizer for the unconstrained problem.
pub fn m_of_gamma_unconstrained(p: &ParametricQfp, gamma: f64) -> Result<InnerSolution> {
    if !gamma.is_finite() {
        return Err(Error::InvalidParameter("gamma must be finite".into()));
    }
    Ok(minimize_quadratic(&p.parametrized(gamma)))
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest `gamma` with `P - gamma Q` positive semidefinite, by bisection on
/// the smallest eigenvalue (absolute width `1e-9`, relative for large bounds).
pub fn psd_gamma_upper_bound(p: &ParametricQfp) -> Result<f64> {
    let (pq, qq) = (p.numerator.quad(), p.denominator.quad());
    let scale = pq.amax().max(qq.amax()).max(1.0);
    let tol = 1e-12 * scale;
    if min_eigenvalue(pq) < -tol {
        return Err(Error::InvalidParameter(
            "numerator quadratic part is not positive semidefinite".into(),
        ));
    }
    if min_eigenvalue(&-qq) >= -tol {
        return Err(Error::Unbounded(
            "denominator has no positive curvature, P - gamma Q stays semidefinite".into(),
        ));
    }
    let psd = |g: f64| min_eigenvalue(&(pq - qq * g)) >= -tol;
    let (mut lo, mut hi) = (0.0, 1.0);
    while psd(hi) {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Unbounded("PSD bound search diverged".into()));
        }
    }
    while hi - lo > 1e-9 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if psd(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Result of a Dinkelbach solve.
#[derive(Debug, Clone, PartialEq)]
pub struct QfpSolution {
    pub gamma: f64,
    pub minimizer: DVector<f64>,
    /// `M(gamma)` at the returned point.
    pub m_value: f64,
    pub bracket: GammaBracket,
    pub evaluations: usize,
}

struct Counter<'a> {
    inner: &'a dyn InnerSolver,
    count: usize,
}

impl Counter<'_> {
    fn eval(&mut self, p: &ParametricQfp, gamma: f64, tol: Option<f64>) -> Result<InnerSolution> {
        self.count += 1;
        self.inner.solve(p, gamma, tol)
    }
}

/// Bisection on `M(gamma)` over a valid bracket until `|M| <= eps`.
pub fn dinkelbach_bisection(
    p: &ParametricQfp,
    bracket: GammaBracket,
    eps: f64,
    inner: &dyn InnerSolver,
) -> Result<QfpSolution> {
    let mut c = Counter { inner, count: 0 };
    bisect(p, bracket, eps, &mut c)
}

fn bisect(p: &ParametricQfp, bracket: GammaBracket, eps: f64, c: &mut Counter) -> Result<QfpSolution> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let GammaBracket { mut lo, mut hi } = bracket;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad gamma bracket [{lo}, {hi}]")));
    }
    let done = |gamma: f64, sol: InnerSolution, c: &Counter| -> Option<QfpSolution> {
        match sol {
            InnerSolution::Bounded { value, minimizer } if value.abs() <= eps => Some(QfpSolution {
                gamma,
                minimizer,
                m_value: value,
                bracket,
                evaluations: c.count,
            }),
            _ => None,
        }
    };

    let s_lo = c.eval(p, lo, Some(eps))?;
    let m_lo = s_lo.value();
    if let Some(s) = done(lo, s_lo, c) {
        return Ok(s);
    }
    let s_hi = c.eval(p, hi, Some(eps))?;
    let m_hi = s_hi.value();
    if let Some(s) = done(hi, s_hi, c) {
        return Ok(s);
    }
    if m_lo < 0.0 || m_hi > 0.0 {
        return Err(Error::InvalidBracket { lo, hi, m_lo, m_hi });
    }
    // Best point seen on the nonpositive side, used if the bracket collapses.
    let mut best: Option<(f64, f64, DVector<f64>)> = None;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let sol = c.eval(p, mid, Some(eps))?;
        let m = sol.value();
        if let InnerSolution::Bounded { minimizer, .. } = &sol {
            if m <= 0.0 && best.as_ref().is_none_or(|b| m.abs() < b.1.abs()) {
                best = Some((mid, m, minimizer.clone()));
            }
        }
        if let Some(s) = done(mid, sol, c) {
            debug!("dinkelbach converged at gamma = {mid} after {} evaluations", c.count);
            return Ok(s);
        }
        if m > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    match best {
        Some((gamma, m, minimizer)) => {
            warn!("bisection stalled at gamma = {gamma} with M = {m}");
            Ok(QfpSolution {
                gamma,
                minimizer,
                m_value: m,
                bracket,
                evaluations: c.count,
            })
        }
        None => Err(Error::NoConvergence(format!(
            "bisection on [{}, {}] found no bounded point with M <= 0",
            bracket.lo, bracket.hi
        ))),
    }
}

/// Marches `[0, s], [s, 2s], ...` until `M` changes sign.
pub fn gamma_interval_search(
    p: &ParametricQfp,
    step: f64,
    eps: f64,
    inner: &dyn InnerSolver,
) -> Result<GammaBracket> {
    let mut c = Counter { inner, count: 0 };
    march(p, step, eps, &mut c)
}

fn march(p: &ParametricQfp, step: f64, eps: f64, c: &mut Counter) -> Result<GammaBracket> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("step length {step} must be positive")));
    }
    let m0 = c.eval(p, 0.0, Some(eps))?.value();
    if m0 < -eps {
        return Err(Error::InvalidBracket {
            lo: 0.0,
            hi: 0.0,
            m_lo: m0,
            m_hi: m0,
        });
    }
    let mut lo = 0.0;
    for k in 1..=MAX_MARCHES {
        let hi = k as f64 * step;
        if c.eval(p, hi, Some(eps))?.value() <= eps {
            return Ok(GammaBracket { lo, hi });
        }
        lo = hi;
    }
    Err(Error::NoConvergence(format!(
        "no sign change of M within {MAX_MARCHES} steps of length {step}"
    )))
}

/// How the search interval for `gamma*` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BracketStrategy {
    /// `[0, gamma_bar]` from the PSD bound, marching if `M(gamma_bar) > 0`.
    PsdBound,
    /// Marching with the given step length.
    March(f64),
}

/// Full Dinkelbach solve: bracket, then bisection.
pub fn solve_qfp(
    p: &ParametricQfp,
    strategy: BracketStrategy,
    eps: f64,
    inner: &dyn InnerSolver,
) -> Result<QfpSolution> {
    let mut c = Counter { inner, count: 0 };
    let bracket = match strategy {
        BracketStrategy::March(step) => march(p, step, eps, &mut c)?,
        BracketStrategy::PsdBound => {
            let bar = psd_gamma_upper_bound(p)?;
            if bar <= 0.0 {
                // M(0) is already the root candidate: J_num reaches 0
                march(p, 1.0, eps, &mut c)?
            } else if c.eval(p, bar, Some(eps))?.value() > eps {
                warn!("M is positive at the PSD bound {bar}, marching instead");
                march(p, bar, eps, &mut c)?
            } else {
                GammaBracket { lo: 0.0, hi: bar }
            }
        }
    };
    bisect(p, bracket, eps, &mut c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn scalar(a: f64, b: f64, c: f64) -> QuadraticForm {
        QuadraticForm::new(DMatrix::from_element(1, 1, a), dvector![b], c).unwrap()
    }

    fn golden() -> ParametricQfp {
        ParametricQfp::new(scalar(1.0, 0.0, 1.0), scalar(1.0, 2.0, 2.0)).unwrap()
    }

    fn bounded(s: InnerSolution) -> (f64, DVector<f64>) {
        match s {
            InnerSolution::Bounded { value, minimizer } => (value, minimizer),
            InnerSolution::Unbounded => panic!("unexpected unbounded"),
        }
    }

    #[test]
    fn closed_form_at_zero() {
        let (m, x) = bounded(m_of_gamma_unconstrained(&golden(), 0.0).unwrap());
        assert_eq!(m, 1.0);
        assert_eq!(x[0], 0.0);
    }

    #[test]
    fn degenerate_hessian_is_unbounded() {
        assert_eq!(m_of_gamma_unconstrained(&golden(), 1.0).unwrap(), InnerSolution::Unbounded);
    }

    #[test]
    fn root_of_golden_instance() {
        let g = (3.0 - 5f64.sqrt()) / 2.0;
        let (m, x) = bounded(m_of_gamma_unconstrained(&golden(), g).unwrap());
        assert!(m.abs() < 1e-12);
        assert_relative_eq!(x[0], (5f64.sqrt() - 1.0) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn semidefinite_with_consistent_linear_part() {
        let f = QuadraticForm::new(
            DMatrix::from_diagonal(&dvector![1.0, 0.0]),
            dvector![2.0, 0.0],
            3.0,
        )
        .unwrap();
        let (m, x) = bounded(minimize_quadratic(&f));
        assert_relative_eq!(m, 2.0, epsilon = 1e-14);
        assert_relative_eq!(x[0], -1.0, epsilon = 1e-14);
        let g = QuadraticForm::new(DMatrix::from_diagonal(&dvector![1.0, -1.0]), dvector![0.0, 0.0], 0.0)
            .unwrap();
        assert_eq!(minimize_quadratic(&g), InnerSolution::Unbounded);
    }

    #[test]
    fn psd_bound_examples() {
        let mk = |p: DMatrix<f64>, q: DMatrix<f64>| {
            ParametricQfp::new(
                QuadraticForm::new(p, DVector::zeros(2), 0.0).unwrap(),
                QuadraticForm::new(q, DVector::zeros(2), 1.0).unwrap(),
            )
            .unwrap()
        };
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert!((psd_gamma_upper_bound(&mk(i2.clone(), i2.clone())).unwrap() - 1.0).abs() <= 1e-9);
        let b = psd_gamma_upper_bound(&mk(i2.clone() * 2.0, DMatrix::from_diagonal(&dvector![1.0, 2.0])))
            .unwrap();
        assert!((b - 1.0).abs() <= 1e-9);
        assert!(matches!(
            psd_gamma_upper_bound(&mk(i2.clone(), -i2)),
            Err(Error::Unbounded(_))
        ));
    }

    #[test]
    fn bisection_on_golden_instance() {
        let s = dinkelbach_bisection(&golden(), GammaBracket { lo: 0.0, hi: 1.0 }, 1e-8, &Unconstrained)
            .unwrap();
        assert!((s.gamma - 0.381_966_011_250_105_1).abs() < 1e-7);
        assert!((s.minimizer[0] - 0.618_033_988_749_894_9).abs() < 1e-3);
        assert!(s.m_value.abs() <= 1e-8);
    }

    #[test]
    fn proportional_forms_collapse() {
        let den = QuadraticForm::new(DMatrix::identity(2, 2), dvector![0.5, -0.5], 2.0).unwrap();
        let num = den.minus_scaled(-1.0, &QuadraticForm::zeros(2)).minus_scaled(-1.5, &den);
        // num = 2.5 * den
        let p = ParametricQfp::new(num, den).unwrap();
        let s = dinkelbach_bisection(&p, GammaBracket { lo: 0.0, hi: 5.0 }, 1e-8, &Unconstrained).unwrap();
        assert!((s.gamma - 2.5).abs() < 1e-8);
        assert_eq!(s.evaluations, 3);
    }

    #[test]
    fn zero_ratio_is_attained() {
        let num = QuadraticForm::new(DMatrix::identity(2, 2), DVector::zeros(2), 0.0).unwrap();
        let den = QuadraticForm::new(DMatrix::identity(2, 2) * 0.1, dvector![1.0, 0.0], 1.0).unwrap();
        let p = ParametricQfp::new(num, den).unwrap();
        let s = solve_qfp(&p, BracketStrategy::PsdBound, 1e-8, &Unconstrained).unwrap();
        assert_eq!(s.gamma, 0.0);
        assert_eq!(s.minimizer, DVector::zeros(2));
    }

    #[test]
    fn marching_brackets() {
        let g = golden();
        assert_eq!(
            gamma_interval_search(&g, 1.0, 1e-8, &Unconstrained).unwrap(),
            GammaBracket { lo: 0.0, hi: 1.0 }
        );
        // ratio (x^2 + 2.5) / 1 has optimum 2.5
        let p = ParametricQfp::new(scalar(1.0, 0.0, 2.5), scalar(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(
            gamma_interval_search(&p, 1.0, 1e-8, &Unconstrained).unwrap(),
            GammaBracket { lo: 2.0, hi: 3.0 }
        );
        let z = ParametricQfp::new(scalar(1.0, 0.0, 0.0), scalar(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(
            gamma_interval_search(&z, 0.5, 1e-8, &Unconstrained).unwrap(),
            GammaBracket { lo: 0.0, hi: 0.5 }
        );
        assert!(gamma_interval_search(&g, 0.0, 1e-8, &Unconstrained).is_err());
    }

    #[test]
    fn invalid_bracket_is_reported() {
        let r = dinkelbach_bisection(&golden(), GammaBracket { lo: 0.5, hi: 0.9 }, 1e-8, &Unconstrained);
        assert!(matches!(r, Err(Error::InvalidBracket { .. })));
    }

    #[test]
    fn full_solve_matches_closed_form() {
        let s = solve_qfp(&golden(), BracketStrategy::PsdBound, 1e-8, &Unconstrained).unwrap();
        assert!((s.gamma - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-8);
    }
}
