//! Joint design of all observer gains and the input.
//!
//! Each mode `i` also runs an open-loop set dynamics with the fault entry
//! inflated by `1 + eps2`:
//!
//! ```text
//! X^i_{k+1} = A X^i_k ⊕ B Υ_i G_i u_k ⊕ E W
//! ```
//!
//! The exclusion set `Ē^i_{k+1}` compares it with observer `i`. If the
//! origin is outside `Ē^i`, the plant is not in mode `i`. The design
//! maximizes the weighted total excluding degree of these sets over
//! `mu = [vec L^0; ...; vec L^{n_u}; u]`.

use std::ops::AddAssign;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::iqp::{stability_ball, BallConstraint, ConstraintSet};
use crate::linalg::{check_len, check_shape, fro_sq, unvec, vec_of};
use crate::observer::SvoState;
use crate::plant::PlantModel;
use crate::qfp::{solve_qfp, BracketStrategy, InnerSolver, ParametricQfp, QuadraticForm};
use crate::setops::{diag_interval_product, IntervalMatrix, Zonotope};

/// Default input inflation of the auxiliary dynamics.
pub const DEFAULT_EPS2: f64 = 0.01;

/// One auxiliary set per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxSetBank {
    pub sets: Vec<Zonotope>,
}

impl AuxSetBank {
    /// The same initial set for every mode.
    pub fn uniform(model: &PlantModel, x0: &Zonotope) -> Result<Self> {
        if x0.dim() != model.nx() {
            return Err(Error::dim("aux set dimension differs from n_x"));
        }
        Ok(AuxSetBank {
            sets: vec![x0.clone(); model.n_modes()],
        })
    }

    pub fn reduced(&self, q: usize) -> Result<Self> {
        Ok(AuxSetBank {
            sets: self.sets.iter().map(|s| s.reduce_order(q)).collect::<Result<_>>()?,
        })
    }
}

fn check_eps2(eps2: f64) -> Result<()> {
    if !(eps2 > 0.0 && eps2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eps2 = {eps2} must be positive; with eps2 = 0 the input drops out of the design"
        )));
    }
    Ok(())
}

/// `Υ_i G_i`: the closed bound of mode `i` with its fault entry scaled by
/// `1 + eps2`.
fn inflated_bound(model: &PlantModel, mode: usize, eps1: f64, eps2: f64) -> Result<IntervalMatrix> {
    let closed = model.mode_bound(mode)?.closed(eps1)?;
    match closed.single_fault_entry().flatten() {
        None => Ok(closed),
        Some((j, lo, hi)) => {
            let mut lower = closed.lower().clone();
            let mut upper = closed.upper().clone();
            lower[(j, j)] = lo * (1.0 + eps2);
            upper[(j, j)] = hi * (1.0 + eps2);
            IntervalMatrix::new(lower, upper)
        }
    }
}

/// Advances every auxiliary set one step. The result is not reduced.
pub fn step_aux_bank(
    model: &PlantModel,
    bank: &AuxSetBank,
    u: &DVector<f64>,
    eps1: f64,
    eps2: f64,
) -> Result<AuxSetBank> {
    check_eps2(eps2)?;
    check_len("u", u, model.nu())?;
    if bank.sets.len() != model.n_modes() {
        return Err(Error::dim("aux bank size differs from the number of modes"));
    }
    let ew = model.disturbance().linear_map(model.e())?;
    let sets = bank
        .sets
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let bgu = diag_interval_product(model.b(), &inflated_bound(model, i, eps1, eps2)?, u)?;
            x.linear_map(model.a())?.minkowski_sum(&bgu)?.minkowski_sum(&ew)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AuxSetBank { sets })
}

/// Coefficients `(c_i, kappa_i)` of the input term of the exclusion set for
/// a mode: `eps2 * mid` and `eps2 * rad` of the closed fault entry.
fn input_coefficients(model: &PlantModel, mode: usize, eps1: f64, eps2: f64) -> Result<Option<(usize, f64, f64)>> {
    Ok(model
        .fault_mid_rad(mode, eps1)?
        .map(|(j, mid, rad)| (j, eps2 * mid, eps2 * rad)))
}

/// Exclusion set of mode `i` at `k+1` for a candidate gain and input, from
/// the aux set `X^i_k` and observer set `X̂^i_k`.
#[allow(clippy::too_many_arguments)]
pub fn build_exclusion_set(
    model: &PlantModel,
    aux: &Zonotope,
    obs: &SvoState,
    gain: &DMatrix<f64>,
    u: &DVector<f64>,
    y_k: &DVector<f64>,
    eps1: f64,
    eps2: f64,
) -> Result<Zonotope> {
    check_eps2(eps2)?;
    let nx = model.nx();
    check_shape("gain", gain, nx, model.ny())?;
    check_len("u", u, model.nu())?;
    check_len("y_k", y_k, model.ny())?;
    let alc = model.a() - gain * model.c();
    let mut set = aux
        .linear_map(model.a())?
        .minkowski_sum(&obs.xhat.linear_map(&-alc)?)?
        .minkowski_sum(&model.noise().linear_map(&(gain * model.f()))?)?
        .translate(&-(gain * y_k))?;
    if let Some((j, c, kappa)) = input_coefficients(model, obs.mode, eps1, eps2)? {
        let bj = model.b().column(j).into_owned();
        let term = Zonotope::new(&bj * (c * u[j]), DMatrix::from_diagonal(&bj) * (kappa * u[j]))?;
        set = set.minkowski_sum(&term)?;
    }
    Ok(set)
}

/// Mode weights proportional to the excluding degrees of the previous
/// exclusion sets; uniform when all degrees vanish.
pub fn mode_weights(prev: &[Zonotope]) -> Result<DVector<f64>> {
    if prev.is_empty() {
        return Err(Error::InvalidParameter("no exclusion sets to weigh".into()));
    }
    let degrees = prev
        .iter()
        .map(|z| z.excluding_degree())
        .collect::<Result<Vec<_>>>()?;
    Ok(weights_from_degrees(&degrees))
}

/// Normalizes nonnegative degrees; all-zero input gives uniform weights.
pub fn weights_from_degrees(degrees: &[f64]) -> DVector<f64> {
    let n = degrees.len();
    let total: f64 = degrees.iter().sum();
    if total > 0.0 && total.is_finite() {
        DVector::from_iterator(n, degrees.iter().map(|d| d / total))
    } else {
        DVector::from_element(n, 1.0 / n as f64)
    }
}

/// Layout of `mu = [vec L^0; ...; vec L^{n_u}; u]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StackLayout {
    pub nx: usize,
    pub ny: usize,
    pub nu: usize,
    pub n_modes: usize,
}

impl StackLayout {
    pub fn for_model(model: &PlantModel) -> Self {
        StackLayout {
            nx: model.nx(),
            ny: model.ny(),
            nu: model.nu(),
            n_modes: model.n_modes(),
        }
    }

    pub fn gain_len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn gain_offset(&self, mode: usize) -> usize {
        mode * self.gain_len()
    }

    pub fn input_offset(&self) -> usize {
        self.n_modes * self.gain_len()
    }

    pub fn len(&self) -> usize {
        self.input_offset() + self.nu
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stack(&self, gains: &[DMatrix<f64>], u: &DVector<f64>) -> Result<DVector<f64>> {
        if gains.len() != self.n_modes {
            return Err(Error::dim("one gain per mode expected"));
        }
        check_len("u", u, self.nu)?;
        let mut mu = DVector::zeros(self.len());
        for (i, l) in gains.iter().enumerate() {
            check_shape("gain", l, self.nx, self.ny)?;
            mu.rows_mut(self.gain_offset(i), self.gain_len()).copy_from(&vec_of(l));
        }
        mu.rows_mut(self.input_offset(), self.nu).copy_from(u);
        Ok(mu)
    }

    pub fn unstack(&self, mu: &DVector<f64>) -> Result<(Vec<DMatrix<f64>>, DVector<f64>)> {
        check_len("mu", mu, self.len())?;
        let gains = (0..self.n_modes)
            .map(|i| unvec(&mu.rows(self.gain_offset(i), self.gain_len()).into_owned(), self.nx, self.ny))
            .collect::<Result<Vec<_>>>()?;
        Ok((gains, mu.rows(self.input_offset(), self.nu).into_owned()))
    }
}

/// The joint program plus the data needed to interpret its solution.
#[derive(Debug, Clone, PartialEq)]
pub struct JointProblem {
    pub qfp: ParametricQfp,
    pub layout: StackLayout,
    pub weights: DVector<f64>,
}

/// Assembles `J3 = sum sigma_i |H̄^i|_F^2` and `J4 = sum sigma_i |ē^i|^2` as
/// quadratic forms in `mu`.
#[allow(clippy::too_many_arguments)]
pub fn build_joint_problem(
    model: &PlantModel,
    bank: &AuxSetBank,
    observers: &[SvoState],
    weights: &DVector<f64>,
    y_k: &DVector<f64>,
    eps1: f64,
    eps2: f64,
) -> Result<JointProblem> {
    check_eps2(eps2)?;
    let layout = StackLayout::for_model(model);
    let n_modes = layout.n_modes;
    if bank.sets.len() != n_modes || observers.len() != n_modes || weights.len() != n_modes {
        return Err(Error::dim("aux sets, observers and weights must cover every mode"));
    }
    check_len("y_k", y_k, model.ny())?;
    let (nx, nl) = (layout.nx, layout.gain_len());
    let n = layout.len();
    let (a, c, f, b) = (model.a(), model.c(), model.f(), model.b());
    let v = model.noise();
    let fh = f * v.generators();
    let ix = DMatrix::<f64>::identity(nx, nx);
    let uo = layout.input_offset();

    let mut p = DMatrix::zeros(n, n);
    let mut p_lin = DVector::zeros(n);
    let mut p_const = 0.0;
    let mut q = DMatrix::zeros(n, n);
    let mut q_lin = DVector::zeros(n);
    let mut q_const = 0.0;

    for (i, obs) in observers.iter().enumerate() {
        if obs.mode != i {
            return Err(Error::InvalidParameter(format!(
                "observer at position {i} is for mode {}",
                obs.mode
            )));
        }
        let s = weights[i];
        let aux = &bank.sets[i];
        let h = obs.xhat.generators();
        let ch = c * h;
        let go = layout.gain_offset(i);

        // size: |A H|^2 + |A Ĥ - L C Ĥ|^2 + |L F H_eta|^2 + kappa^2 |diag(B e_j)|^2 u_j^2
        let sm = &ch * ch.transpose() + &fh * fh.transpose();
        let blk = sm.kronecker(&ix) * s;
        p.view_mut((go, go), (nl, nl)).add_assign(&blk);
        p_lin
            .rows_mut(go, nl)
            .axpy(-2.0 * s, &vec_of(&(a * h * ch.transpose())), 1.0);
        p_const += s * (fro_sq(&(a * aux.generators())) + fro_sq(&(a * h)));

        // center: delta + (beta' ⊗ I) vec L + c_j B e_j u_j
        let delta = a * (aux.center() - obs.xhat.center());
        let beta = c * obs.xhat.center() - y_k + f * v.center();
        let kb = beta.transpose().kronecker(&ix); // nx x nl
        let blk = kb.transpose() * &kb * s;
        q.view_mut((go, go), (nl, nl)).add_assign(&blk);
        q_lin.rows_mut(go, nl).axpy(2.0 * s, &(kb.transpose() * &delta), 1.0);
        q_const += s * delta.norm_squared();

        if let Some((j, cj, kappa)) = input_coefficients(model, i, eps1, eps2)? {
            let bj = b.column(j).into_owned();
            let bsq = bj.norm_squared();
            p[(uo + j, uo + j)] += s * kappa * kappa * bsq;
            q[(uo + j, uo + j)] += s * cj * cj * bsq;
            // cross term 2 c_j u_j (B e_j)' (beta' ⊗ I) vec L, split symmetrically
            let cross = kb.transpose() * &bj * (s * cj);
            for r in 0..nl {
                q[(go + r, uo + j)] += cross[r];
                q[(uo + j, go + r)] += cross[r];
            }
            q_lin[uo + j] += 2.0 * s * cj * delta.dot(&bj);
        }
    }
    Ok(JointProblem {
        qfp: ParametricQfp::new(
            QuadraticForm::new(p, p_lin, p_const)?,
            QuadraticForm::new(q, q_lin, q_const)?,
        )?,
        layout,
        weights: weights.clone(),
    })
}

/// Weighted total excluding degree of a family of exclusion sets.
pub fn total_excluding_degree(sets: &[Zonotope], weights: &DVector<f64>) -> Result<f64> {
    if sets.len() != weights.len() {
        return Err(Error::dim("one weight per exclusion set expected"));
    }
    let num: f64 = sets.iter().zip(weights.iter()).map(|(z, s)| s * z.center().norm_squared()).sum();
    let den: f64 = sets.iter().zip(weights.iter()).map(|(z, s)| s * z.f_radius_sq()).sum();
    if den <= 0.0 {
        return Err(Error::DegenerateSet);
    }
    Ok(num / den)
}

/// Feasible set of the joint design: one stability ball per gain and the
/// input ball `|u - center| <= radius`.
pub fn joint_constraint_set(
    model: &PlantModel,
    eps3: f64,
    input_center: &DVector<f64>,
    input_radius: f64,
) -> Result<ConstraintSet> {
    let layout = StackLayout::for_model(model);
    check_len("input center", input_center, layout.nu)?;
    let mut balls = (0..layout.n_modes)
        .map(|i| stability_ball(model.a(), model.c(), eps3, layout.gain_offset(i)))
        .collect::<Result<Vec<_>>>()?;
    let uo = layout.input_offset();
    balls.push(BallConstraint::ball(uo..uo + layout.nu, input_center.clone(), input_radius)?);
    ConstraintSet::new(layout.len(), balls)
}

/// Designed gains and input.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDesign {
    pub gains: Vec<DMatrix<f64>>,
    pub u: DVector<f64>,
    /// Optimal `J3 / J4`, the reciprocal of the total excluding degree.
    pub gamma: f64,
    pub evaluations: usize,
}

pub fn design_joint(
    problem: &JointProblem,
    inner: &dyn InnerSolver,
    strategy: BracketStrategy,
    eps: f64,
) -> Result<JointDesign> {
    let sol = solve_qfp(&problem.qfp, strategy, eps, inner)?;
    let (gains, u) = problem.layout.unstack(&sol.minimizer)?;
    Ok(JointDesign {
        gains,
        u,
        gamma: sol.gamma,
        evaluations: sol.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model() -> PlantModel {
        PlantModel::with_fault_intervals(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.3, 0.2, 0.6]),
            DMatrix::from_row_slice(2, 2, &[0.05, 0.08, 0.07, 0.05]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, -0.1, 0.9]),
            DMatrix::from_row_slice(2, 2, &[0.05, 0.03, 0.04, 0.05]),
            DMatrix::identity(2, 2) * 0.1,
            &[(0.0, 0.8), (0.0, 1.0)],
            Zonotope::new(dvector![0.01, 0.02], DMatrix::identity(2, 2) * 0.5).unwrap(),
            Zonotope::new(dvector![-0.02, 0.01], DMatrix::identity(2, 2) * 0.1).unwrap(),
        )
        .unwrap()
    }

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize, s: f64) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.random_range(-s..s))
    }

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize, s: f64) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-s..s))
    }

    struct Setup {
        m: PlantModel,
        bank: AuxSetBank,
        observers: Vec<SvoState>,
        weights: DVector<f64>,
        y_k: DVector<f64>,
    }

    fn random_setup(rng: &mut ChaCha8Rng) -> Setup {
        let m = model();
        let bank = AuxSetBank {
            sets: (0..3)
                .map(|_| Zonotope::new(rand_vec(rng, 2, 1.0), rand_mat(rng, 2, 3, 0.5)).unwrap())
                .collect(),
        };
        let observers = (0..3)
            .map(|i| {
                SvoState::new(&m, i, Zonotope::new(rand_vec(rng, 2, 1.0), rand_mat(rng, 2, 4, 0.5)).unwrap())
                    .unwrap()
            })
            .collect();
        let raw = DVector::from_fn(3, |_, _| rng.random_range(0.0..1.0));
        let weights = &raw / raw.sum();
        Setup {
            m,
            bank,
            observers,
            weights,
            y_k: rand_vec(rng, 2, 1.0),
        }
    }

    #[test]
    fn aux_bank_with_zero_input_is_mode_independent() {
        let m = model();
        let x0 = Zonotope::new(dvector![0.6, 0.6], DMatrix::identity(2, 2) * 0.1).unwrap();
        let bank = AuxSetBank::uniform(&m, &x0).unwrap();
        let next = step_aux_bank(&m, &bank, &DVector::zeros(2), 0.01, 0.01).unwrap();
        let expected = x0
            .linear_map(m.a())
            .unwrap()
            .minkowski_sum(&m.disturbance().linear_map(m.e()).unwrap())
            .unwrap();
        assert_eq!(next.sets[0], expected);
        for s in &next.sets[1..] {
            assert_eq!(s.center(), expected.center());
            assert_relative_eq!(s.f_radius_sq(), expected.f_radius_sq(), epsilon = 1e-15);
        }
    }

    #[test]
    fn aux_bank_healthy_mode_is_linear() {
        let m = model();
        let x0 = Zonotope::new(dvector![0.6, 0.6], DMatrix::identity(2, 2) * 0.1).unwrap();
        let bank = AuxSetBank::uniform(&m, &x0).unwrap();
        let u = dvector![-0.7, 3.0];
        let next = step_aux_bank(&m, &bank, &u, 0.01, 0.01).unwrap();
        let c = m.a() * x0.center() + m.b() * &u + m.e() * m.disturbance().center();
        assert_relative_eq!((next.sets[0].center() - c).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(next.sets[0].order(), 4);
        // inflated fault entry: [0, 0.8 * 1.01] on actuator 1
        let mid1 = 0.4 * 1.01;
        let c1 = m.a() * x0.center() + m.b() * dvector![mid1 * u[0], u[1]] + m.e() * m.disturbance().center();
        assert_relative_eq!((next.sets[1].center() - c1).norm(), 0.0, epsilon = 1e-15);
        assert!(step_aux_bank(&m, &bank, &u, 0.01, 0.0).is_err());
    }

    #[test]
    fn exclusion_set_without_gain_or_input() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let aux = Zonotope::new(rand_vec(&mut rng, 2, 1.0), rand_mat(&mut rng, 2, 2, 1.0)).unwrap();
        let obs = SvoState::new(&m, 1, aux.clone()).unwrap();
        let zero = DMatrix::zeros(2, 2);
        let e = build_exclusion_set(&m, &aux, &obs, &zero, &DVector::zeros(2), &dvector![0.3, 0.1], 0.01, 0.01)
            .unwrap();
        assert_eq!(e.center().norm(), 0.0);
        let ah = m.a() * aux.generators();
        assert_eq!(e.generators().columns(0, 2).into_owned(), ah);
        assert_eq!(e.generators().columns(2, 2).into_owned(), -ah);
    }

    #[test]
    fn exclusion_input_term_scales_with_eps2() {
        let m = model();
        let aux = Zonotope::new(dvector![0.6, 0.6], DMatrix::identity(2, 2) * 0.1).unwrap();
        let obs = SvoState::new(&m, 2, aux.clone()).unwrap();
        let l = DMatrix::zeros(2, 2);
        let u = dvector![0.0, 2.0];
        let y = dvector![0.0, 0.0];
        let e1 = build_exclusion_set(&m, &aux, &obs, &l, &u, &y, 0.01, 0.01).unwrap();
        let e2 = build_exclusion_set(&m, &aux, &obs, &l, &u, &y, 0.01, 1e-9).unwrap();
        let k = (1.0 - 0.01) * 0.01 / 2.0 * 2.0;
        assert_relative_eq!(e1.center()[0], k * 0.08, epsilon = 1e-15);
        assert_relative_eq!(e1.center()[1], k * 0.05, epsilon = 1e-15);
        assert!(e2.center().norm() < 1e-9);
        assert!(e2.generators().columns(6, 2).norm() < 1e-9);
    }

    #[test]
    fn weights_examples() {
        assert_eq!(weights_from_degrees(&[2.0, 2.0, 2.0]), DVector::from_element(3, 1.0 / 3.0));
        assert_eq!(weights_from_degrees(&[1.0, 3.0]), dvector![0.25, 0.75]);
        assert_eq!(weights_from_degrees(&[0.0, 5.0]), dvector![0.0, 1.0]);
        assert_eq!(weights_from_degrees(&[0.0, 0.0]), dvector![0.5, 0.5]);
        let sets = vec![
            Zonotope::new(dvector![3.0, 4.0], DMatrix::identity(2, 2)).unwrap(),
            Zonotope::new(dvector![1.0, 0.0], DMatrix::from_diagonal(&dvector![2.0, 1.0])).unwrap(),
        ];
        let w = mode_weights(&sets).unwrap();
        assert_relative_eq!(w.sum(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(w[0], 12.5 / 12.7, epsilon = 1e-12);
    }

    #[test]
    fn stack_round_trip() {
        let m = model();
        let layout = StackLayout::for_model(&m);
        assert_eq!(layout.len(), 14);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let gains: Vec<_> = (0..3).map(|_| rand_mat(&mut rng, 2, 2, 1.0)).collect();
        let u = rand_vec(&mut rng, 2, 3.0);
        let mu = layout.stack(&gains, &u).unwrap();
        let (g2, u2) = layout.unstack(&mu).unwrap();
        assert_eq!(g2, gains);
        assert_eq!(u2, u);
    }

    #[test]
    fn joint_forms_match_exclusion_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let s = random_setup(&mut rng);
            let jp = build_joint_problem(&s.m, &s.bank, &s.observers, &s.weights, &s.y_k, 0.01, 0.01)
                .unwrap();
            for _ in 0..100 {
                let gains: Vec<_> = (0..3).map(|_| rand_mat(&mut rng, 2, 2, 1.0)).collect();
                let u = rand_vec(&mut rng, 2, 4.0);
                let mu = jp.layout.stack(&gains, &u).unwrap();
                let sets: Vec<Zonotope> = (0..3)
                    .map(|i| {
                        build_exclusion_set(&s.m, &s.bank.sets[i], &s.observers[i], &gains[i], &u, &s.y_k, 0.01, 0.01)
                            .unwrap()
                    })
                    .collect();
                let j3: f64 = sets.iter().zip(s.weights.iter()).map(|(z, w)| w * z.f_radius_sq()).sum();
                let j4: f64 = sets.iter().zip(s.weights.iter()).map(|(z, w)| w * z.center().norm_squared()).sum();
                assert_relative_eq!(jp.qfp.numerator.eval(&mu), j3, max_relative = 1e-10);
                assert_relative_eq!(jp.qfp.denominator.eval(&mu), j4, max_relative = 1e-10);
                let ratio = jp.qfp.ratio(&mu);
                assert_relative_eq!(1.0 / ratio, total_excluding_degree(&sets, &s.weights).unwrap(), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn input_gradient_by_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = random_setup(&mut rng);
        let jp = build_joint_problem(&s.m, &s.bank, &s.observers, &s.weights, &s.y_k, 0.01, 0.01).unwrap();
        let uo = jp.layout.input_offset();
        for form in [&jp.qfp.numerator, &jp.qfp.denominator] {
            for _ in 0..20 {
                let mu = rand_vec(&mut rng, 14, 2.0);
                let g = form.gradient(&mu);
                for j in 0..2 {
                    let h = 1e-6;
                    let mut up = mu.clone();
                    let mut dn = mu.clone();
                    up[uo + j] += h;
                    dn[uo + j] -= h;
                    let fd = (form.eval(&up) - form.eval(&dn)) / (2.0 * h);
                    assert!((fd - g[uo + j]).abs() < 1e-6 * (1.0 + g[uo + j].abs()));
                }
            }
        }
    }

    #[test]
    fn gain_and_input_are_coupled() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let s = random_setup(&mut rng);
        let jp = build_joint_problem(&s.m, &s.bank, &s.observers, &s.weights, &s.y_k, 0.01, 0.01).unwrap();
        let uo = jp.layout.input_offset();
        let q = jp.qfp.denominator.quad();
        assert!(q.view((0, uo), (uo, 2)).norm() > 0.0);
        // the healthy gain does not multiply the input
        assert_eq!(q.view((0, uo), (4, 2)).norm(), 0.0);
    }

    #[test]
    fn without_actuators_only_gains_remain() {
        let m = PlantModel::with_fault_intervals(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.3, 0.2, 0.6]),
            DMatrix::zeros(2, 0),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2) * 0.05,
            DMatrix::identity(2, 2) * 0.1,
            &[],
            Zonotope::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap(),
            Zonotope::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap(),
        )
        .unwrap();
        let x0 = Zonotope::new(dvector![0.1, 0.2], DMatrix::identity(2, 2)).unwrap();
        let bank = AuxSetBank::uniform(&m, &x0).unwrap();
        let obs = vec![SvoState::new(&m, 0, x0).unwrap()];
        let jp = build_joint_problem(&m, &bank, &obs, &dvector![1.0], &dvector![0.5, 0.5], 0.01, 0.01).unwrap();
        assert_eq!(jp.layout.len(), 4);
        assert_eq!(jp.layout.input_offset(), 4);
    }
}
