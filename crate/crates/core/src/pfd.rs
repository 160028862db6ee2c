//! Passive gain design: for observer `i`, after `y_{k+1}` is measured, choose
//! `L^i_k` minimizing `|H^r|_F^2 / |r^c|^2`, the reciprocal of the excluding
//! degree of the residual zonotope.
//!
//! With `xi = vec(L)` (column-major) the residual center is
//! `alpha + (beta' ⊗ C) xi` and the residual size is a convex quadratic in
//! `xi`, so the problem is a quadratic fractional program.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::iqp::{stability_ball, ConstraintSet};
use crate::linalg::{check_len, fro_sq, unvec, vec_of};
use crate::observer::SvoState;
use crate::plant::PlantModel;
use crate::qfp::{solve_qfp, BracketStrategy, InnerSolver, ParametricQfp, QuadraticForm};

/// The fractional program of one observer at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct PfdProblem {
    pub mode: usize,
    pub qfp: ParametricQfp,
    pub nx: usize,
    pub ny: usize,
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
}

/// Assembles the numerator (residual size) and denominator (squared residual
/// center) as quadratic forms in `vec(L)`.
pub fn build_pfd_problem(
    model: &PlantModel,
    obs: &SvoState,
    u_k: &DVector<f64>,
    y_k: &DVector<f64>,
    y_next: &DVector<f64>,
    eps1: f64,
) -> Result<PfdProblem> {
    let (nx, ny) = (model.nx(), model.ny());
    check_len("y_k", y_k, ny)?;
    check_len("y_next", y_next, ny)?;
    if obs.xhat.dim() != nx {
        return Err(Error::dim("observer set dimension differs from n_x"));
    }
    let (a, c, e, f) = (model.a(), model.c(), model.e(), model.f());
    let (w, v) = (model.disturbance(), model.noise());
    let xc = obs.xhat.center();
    let h = obs.xhat.generators();
    let bgu = model.input_enclosure(obs.mode, u_k, eps1)?;
    let fh = f * v.generators();
    let ch = c * h;

    let beta = c * xc - y_k + f * v.center();
    let alpha = y_next - c * (a * xc) - c * bgu.center() - c * (e * w.center()) - f * v.center();

    let ctc = c.transpose() * c;
    let s = &ch * ch.transpose() + &fh * fh.transpose();
    let p1 = s.kronecker(&ctc);
    let p2 = vec_of(&(&ctc * a * h * ch.transpose())) * -2.0;
    let p3 = fro_sq(&(c * a * h)) + fro_sq(&(c * e * w.generators())) + fro_sq(&(c * bgu.generators())) + fro_sq(&fh);

    let q1 = (&beta * beta.transpose()).kronecker(&ctc);
    let q2 = vec_of(&(c.transpose() * &alpha * beta.transpose())) * 2.0;
    let q3 = alpha.norm_squared();

    Ok(PfdProblem {
        mode: obs.mode,
        qfp: ParametricQfp::new(QuadraticForm::new(p1, p2, p3)?, QuadraticForm::new(q1, q2, q3)?)?,
        nx,
        ny,
        alpha,
        beta,
    })
}

/// Feasible set of the constrained design: the stability ball of `vec(L)`.
pub fn pfd_constraint_set(model: &PlantModel, eps3: f64) -> Result<ConstraintSet> {
    let ball = stability_ball(model.a(), model.c(), eps3, 0)?;
    ConstraintSet::new(model.nx() * model.ny(), vec![ball])
}

/// Outcome of a gain design.
#[derive(Debug, Clone, PartialEq)]
pub struct GainDesign {
    pub gain: DMatrix<f64>,
    /// Optimal ratio `J1 / J2`, i.e. the reciprocal of the excluding degree.
    pub gamma: f64,
    pub evaluations: usize,
}

/// Relative size below which the denominator is considered zero.
const DEGENERATE_TOL: f64 = 1e-14;

/// Solves the program with the given inner solver and bracketing rule and
/// returns `L = vec^{-1}(xi*)`.
///
/// Fails with [`Error::DegenerateDenominator`] when the residual center
/// vanishes identically in `L` or at the optimum.
pub fn design_pfd_gain(
    problem: &PfdProblem,
    inner: &dyn InnerSolver,
    strategy: BracketStrategy,
    eps: f64,
) -> Result<GainDesign> {
    let den = &problem.qfp.denominator;
    let scale = 1.0 + problem.alpha.norm_squared() + problem.beta.norm_squared();
    if den.quad().amax() <= DEGENERATE_TOL * scale
        && den.lin().amax() <= DEGENERATE_TOL * scale
        && den.constant() <= DEGENERATE_TOL * scale
    {
        return Err(Error::DegenerateDenominator(format!(
            "residual center of mode {} is identically zero",
            problem.mode
        )));
    }
    let sol = solve_qfp(&problem.qfp, strategy, eps, inner)?;
    let j2 = den.eval(&sol.minimizer);
    if j2.is_nan() || j2 <= DEGENERATE_TOL * scale {
        return Err(Error::DegenerateDenominator(format!(
            "residual center of mode {} vanishes at the optimum",
            problem.mode
        )));
    }
    Ok(GainDesign {
        gain: unvec(&sol.minimizer, problem.nx, problem.ny)?,
        gamma: sol.gamma,
        evaluations: sol.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observer::{output_set, residual, svo_step};
    use crate::qfp::Unconstrained;
    use crate::setops::Zonotope;
    use approx::assert_relative_eq;
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(c: DMatrix<f64>) -> PlantModel {
        PlantModel::with_fault_intervals(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.3, 0.2, 0.6]),
            DMatrix::from_row_slice(2, 2, &[0.05, 0.08, 0.07, 0.05]),
            c,
            DMatrix::from_row_slice(2, 2, &[0.05, 0.03, 0.04, 0.05]),
            DMatrix::identity(2, 2) * 0.1,
            &[(0.0, 0.8), (0.0, 0.8)],
            Zonotope::new(dvector![0.02, -0.01], DMatrix::identity(2, 2) * 0.5).unwrap(),
            Zonotope::new(dvector![0.01, 0.03], DMatrix::identity(2, 2) * 0.1).unwrap(),
        )
        .unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn open_set_healthy_mode_blocks() {
        let m = model(DMatrix::identity(2, 2));
        let obs = SvoState::new(&m, 0, Zonotope::point(dvector![0.1, 0.2])).unwrap();
        let zero = DVector::zeros(2);
        let p = build_pfd_problem(&m, &obs, &zero, &dvector![0.3, 0.3], &dvector![0.1, 0.4], 0.01)
            .unwrap();
        let fh = m.f() * m.noise().generators();
        let ctc = m.c().transpose() * m.c();
        assert_eq!(p.qfp.numerator.quad(), &(&fh * fh.transpose()).kronecker(&ctc));
        assert_eq!(p.qfp.numerator.lin().norm(), 0.0);
        let expected = fro_sq(&(m.c() * m.e() * m.disturbance().generators())) + fro_sq(&fh);
        assert_relative_eq!(p.qfp.numerator.constant(), expected, epsilon = 1e-15);
    }

    #[test]
    fn alpha_vanishes_on_the_predicted_output() {
        let m = model(DMatrix::identity(2, 2));
        let obs = SvoState::new(
            &m,
            1,
            Zonotope::new(dvector![0.55, 0.55], DMatrix::identity(2, 2) * 0.5).unwrap(),
        )
        .unwrap();
        let u = dvector![-0.7, 3.0];
        let mid = m.mode_bound(1).unwrap().closed(0.01).unwrap().mid();
        let xc = obs.xhat.center();
        let y_next = m.c() * m.a() * xc
            + m.c() * m.b() * mid * &u
            + m.c() * m.e() * m.disturbance().center()
            + m.f() * m.noise().center();
        let p = build_pfd_problem(&m, &obs, &u, &dvector![0.5, 0.5], &y_next, 0.01).unwrap();
        assert!(p.alpha.norm() < 1e-15);
        assert!(p.qfp.denominator.constant() < 1e-30);
    }

    #[test]
    fn quadratic_forms_match_the_set_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for mode in 0..3 {
            let c = DMatrix::identity(2, 2) + random_matrix(&mut rng, 2, 2) * 0.3;
            let m = model(c);
            let xhat = Zonotope::new(
                DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0)),
                random_matrix(&mut rng, 2, 5),
            )
            .unwrap();
            let obs = SvoState::new(&m, mode, xhat).unwrap();
            let u = DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0));
            let y_k = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            let y_next = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            let p = build_pfd_problem(&m, &obs, &u, &y_k, &y_next, 0.01).unwrap();
            for _ in 0..100 {
                let l = random_matrix(&mut rng, 2, 2);
                let next = svo_step(&m, &obs.clone().with_gain(l.clone()), &u, &y_k, 0.01).unwrap();
                let r = residual(mode, &y_next, &output_set(&m, &next.xhat).unwrap()).unwrap();
                let xi = vec_of(&l);
                let (j1, j2) = (p.qfp.numerator.eval(&xi), p.qfp.denominator.eval(&xi));
                assert_relative_eq!(j1, r.set.f_radius_sq(), max_relative = 1e-10);
                assert_relative_eq!(j2, r.set.center().norm_squared(), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn designed_gain_dominates_random_gains() {
        let m = model(DMatrix::identity(2, 2));
        let obs = SvoState::new(
            &m,
            1,
            Zonotope::new(dvector![0.55, 0.55], DMatrix::identity(2, 2) * 0.5).unwrap(),
        )
        .unwrap();
        let u = dvector![-0.7, 3.0];
        let p = build_pfd_problem(&m, &obs, &u, &dvector![0.61, 0.58], &dvector![0.62, 0.49], 0.01)
            .unwrap();
        let d = design_pfd_gain(&p, &Unconstrained, BracketStrategy::PsdBound, 1e-8).unwrap();
        let best = p.qfp.ratio(&vec_of(&d.gain));
        assert_relative_eq!(best, d.gamma, max_relative = 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(best <= p.qfp.ratio(&DVector::zeros(4)));
        for _ in 0..200 {
            let xi = DVector::from_fn(4, |_, _| rng.random_range(-2.0..2.0));
            assert!(best <= p.qfp.ratio(&xi) + 1e-6);
        }
    }

    #[test]
    fn identically_zero_center_is_flagged() {
        let m = model(DMatrix::identity(2, 2));
        let obs = SvoState::new(&m, 0, Zonotope::point(dvector![0.0, 0.0])).unwrap();
        let zero = DVector::zeros(2);
        // beta = F eta^c - y_k = 0 and alpha = 0
        let y_k = m.f() * m.noise().center();
        let y_next = m.c() * m.e() * m.disturbance().center() + m.f() * m.noise().center();
        let p = build_pfd_problem(&m, &obs, &zero, &y_k, &y_next, 0.01).unwrap();
        assert!(matches!(
            design_pfd_gain(&p, &Unconstrained, BracketStrategy::PsdBound, 1e-8),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn vec_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = random_matrix(&mut rng, 3, 2);
        assert_eq!(unvec(&vec_of(&l), 3, 2).unwrap(), l);
    }
}
