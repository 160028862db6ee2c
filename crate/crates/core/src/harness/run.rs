//! Closed-loop simulation of one scenario.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::scenario::{DesignMode, ResolvedInput, Scenario, Setup, StopRule};
use crate::afd::{
    build_exclusion_set, build_joint_problem, design_joint, joint_constraint_set, mode_weights,
    step_aux_bank, weights_from_degrees, AuxSetBank,
};
use crate::error::{Error, Result};
use crate::iqp::{stability_residual, ConstrainedInner, ConstraintSet};
use crate::linalg::{unvec, vec_of};
use crate::observer::{diagnose_flags, output_set, residual, svo_step, SvoState, Verdict};
use crate::pfd::{build_pfd_problem, design_pfd_gain, pfd_constraint_set};
use crate::plant::{sample_in_zonotope, step_plant, PlantModel};
use crate::qfp::{BracketStrategy, InnerSolver, Unconstrained};
use crate::setops::Zonotope;

/// Gains, optimal ratio and failure note of one joint design.
type JointStep = (Vec<DMatrix<f64>>, Option<f64>, Option<String>);

/// Slack allowed on the stability audit.
pub const STABILITY_AUDIT_TOL: f64 = 1e-9;

/// Per-observer quantities at one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeStep {
    pub mode: usize,
    pub residual_center_norm: f64,
    /// `|H|_F^2` of the residual generators.
    pub f_norm_size: f64,
    pub excluding_degree: f64,
    pub contains_origin: bool,
    /// Optimal ratio of this observer's design, if it ran and succeeded.
    pub gamma: Option<f64>,
    /// Gain used for the step, row-major.
    pub gain: Vec<f64>,
    /// `|A - L C|_F^2`.
    pub stability_residual: f64,
    /// Set when the design failed and the previous gain was reused.
    pub design_failure: Option<String>,
    /// Origin membership of the exclusion set (joint design only).
    pub exclusion_contains_origin: Option<bool>,
    #[serde(skip)]
    pub residual: Zonotope,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    /// Time index `k + 1` of the residuals.
    pub step: usize,
    /// Input applied at `k`.
    pub u: Vec<f64>,
    pub verdict: Verdict,
    pub modes: Vec<ModeStep>,
    /// Optimal ratio of the joint design.
    pub joint_gamma: Option<f64>,
    /// Mode weights used by the joint design.
    pub weights: Option<Vec<f64>>,
    pub joint_failure: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    /// First step where the healthy observer's residual excludes the origin.
    pub detection_step: Option<usize>,
    /// First step where exactly one fault mode remains consistent.
    pub isolation_step: Option<usize>,
    pub isolated_mode: Option<usize>,
    pub steps_run: usize,
    pub design_failures: usize,
    /// Steps where the audited true mode was excluded.
    pub soundness_violations: usize,
    /// Gains of constrained designs outside the stability ball.
    pub stability_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub scenario: String,
    pub design: DesignMode,
    pub seed: u64,
    pub stream: u64,
    pub steps: Vec<StepRecord>,
    pub summary: RunSummary,
}

impl RunRecord {
    /// Fails with [`Error::Soundness`] if any audited step excluded the true
    /// mode.
    pub fn check_soundness(&self) -> Result<()> {
        if self.summary.soundness_violations > 0 {
            return Err(Error::Soundness(format!(
                "{}: true mode excluded at {} step(s)",
                self.scenario, self.summary.soundness_violations
            )));
        }
        Ok(())
    }
}

/// Runs the scenario on random stream 0.
pub fn run_scenario(s: &Scenario) -> Result<RunRecord> {
    run_scenario_stream(s, 0)
}

/// Runs the scenario with noise drawn from stream `stream` of its seed.
///
/// Each step draws `w_k` and then `v_{k+1}` so that runs differing only in
/// the design see the same realizations.
pub fn run_scenario_stream(s: &Scenario, stream: u64) -> Result<RunRecord> {
    let setup = s.setup()?;
    let mut sim = Simulation::new(s, &setup, stream)?;
    let mut steps = Vec::new();
    let mut summary = RunSummary::default();
    for k in 0..s.params.horizon {
        let rec = sim.step(k, &mut summary)?;
        let label = rec.step;
        let healthy_excluded = rec.modes.iter().any(|m| m.mode == 0 && !m.contains_origin);
        if healthy_excluded && summary.detection_step.is_none() {
            summary.detection_step = Some(label);
        }
        if let Verdict::Isolated(i) = rec.verdict {
            if i != 0 && summary.isolation_step.is_none() {
                summary.isolation_step = Some(label);
                summary.isolated_mode = Some(i);
            }
        }
        steps.push(rec);
        summary.steps_run += 1;
        let stop = match s.stop {
            StopRule::Never => false,
            StopRule::Detection => summary.detection_step.is_some(),
            StopRule::Isolation => summary.isolation_step.is_some(),
        };
        if stop {
            break;
        }
    }
    Ok(RunRecord {
        scenario: s.name.clone(),
        design: s.design,
        seed: s.params.seed,
        stream,
        steps,
        summary,
    })
}

struct Simulation<'a> {
    s: &'a Scenario,
    setup: &'a Setup,
    rng: ChaCha8Rng,
    x: DVector<f64>,
    y: DVector<f64>,
    observers: Vec<SvoState>,
    prev_gamma: Vec<Option<f64>>,
    constraint: Option<ConstraintSet>,
    joint: Option<JointState>,
}

struct JointState {
    bank: AuxSetBank,
    weights: DVector<f64>,
    u: DVector<f64>,
    prev_gamma: Option<f64>,
}

fn measure(model: &PlantModel, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    model.c() * x + model.f() * v
}

impl<'a> Simulation<'a> {
    fn new(s: &'a Scenario, setup: &'a Setup, stream: u64) -> Result<Self> {
        let model = &setup.model;
        let p = &s.params;
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        rng.set_stream(stream);
        let v0 = sample_in_zonotope(model.noise(), &mut rng);
        let y = measure(model, &setup.x0, &v0);

        let constraint = match (s.design, &setup.input) {
            (DesignMode::PfdConstrained, _) => Some(pfd_constraint_set(model, p.eps3)?),
            (DesignMode::AfdJoint, ResolvedInput::Ball { center, radius }) => {
                Some(joint_constraint_set(model, p.eps3, center, *radius)?)
            }
            _ => None,
        };

        // Initial gains are reused if the first design fails, so constrained
        // runs start from a point of the feasible set.
        let init_gain = if s.design == DesignMode::FixedGain {
            setup.fixed_gain.clone()
        } else if s.design.is_constrained() {
            let mut xi = DVector::zeros(model.nx() * model.ny());
            pfd_constraint_set(model, p.eps3)?.pull_inside(&mut xi);
            unvec(&xi, model.nx(), model.ny())?
        } else {
            DMatrix::zeros(model.nx(), model.ny())
        };
        let observers = setup
            .modes
            .iter()
            .map(|&i| Ok(SvoState::new(model, i, setup.observer_init.clone())?.with_gain(init_gain.clone())))
            .collect::<Result<Vec<_>>>()?;

        let joint = match (&setup.input, s.design) {
            (ResolvedInput::Ball { center, .. }, DesignMode::AfdJoint) => Some(JointState {
                bank: AuxSetBank::uniform(model, &setup.aux_init)?,
                weights: weights_from_degrees(&vec![0.0; model.n_modes()]),
                u: center.clone(),
                prev_gamma: None,
            }),
            _ => None,
        };

        Ok(Simulation {
            s,
            setup,
            rng,
            x: setup.x0.clone(),
            y,
            prev_gamma: vec![None; observers.len()],
            observers,
            constraint,
            joint,
        })
    }

    fn inner(&self) -> Box<dyn InnerSolver> {
        match &self.constraint {
            Some(set) => Box::new(ConstrainedInner {
                set: set.clone(),
                m: self.s.params.m,
                node_limit: self.s.params.node_limit,
            }),
            None => Box::new(Unconstrained),
        }
    }

    /// Bracketing rule: the PSD bound first, then marching with the
    /// previous optimum as step length in constrained designs.
    fn strategy(&self, prev: Option<f64>) -> BracketStrategy {
        match prev {
            Some(g) if self.constraint.is_some() && g > 0.0 => BracketStrategy::March(g),
            _ => BracketStrategy::PsdBound,
        }
    }

    fn step(&mut self, k: usize, summary: &mut RunSummary) -> Result<StepRecord> {
        let model = &self.setup.model;
        let p = &self.s.params;
        let w = sample_in_zonotope(model.disturbance(), &mut self.rng);
        let v_next = sample_in_zonotope(model.noise(), &mut self.rng);

        let mut joint_gamma = None;
        let mut joint_failure = None;
        let mut weights_used = None;
        let mut joint_gains = None;
        if self.joint.is_some() {
            let (gains, gamma, failure) = self.design_joint_step()?;
            joint_gamma = gamma;
            joint_failure = failure;
            if joint_failure.is_some() {
                summary.design_failures += 1;
            }
            weights_used = self.joint.as_ref().map(|j| j.weights.iter().copied().collect());
            joint_gains = Some(gains);
        }
        let u = match (&self.setup.input, &self.joint) {
            (ResolvedInput::Constant(u), _) => u.clone(),
            (_, Some(j)) => j.u.clone(),
            (ResolvedInput::Ball { center, .. }, None) => center.clone(),
        };

        let true_mode = self.setup.true_mode_at(k);
        let (x_next, _) = step_plant(model, &self.x, &u, &true_mode, &w, model.noise().center())?;
        let y_next = measure(model, &x_next, &v_next);
        let audited = self.setup.audited_mode_at(k);

        let mut modes = Vec::with_capacity(self.observers.len());
        let mut exclusion_sets = Vec::new();
        for idx in 0..self.observers.len() {
            let mode = self.observers[idx].mode;
            let mut gamma = None;
            let mut failure = None;
            match (&joint_gains, self.s.design) {
                (Some(gains), _) => {
                    let gains: &Vec<DMatrix<f64>> = gains;
                    let j = self.joint.as_ref().expect("joint state");
                    let excl = build_exclusion_set(
                        model,
                        &j.bank.sets[mode],
                        &self.observers[idx],
                        &gains[mode],
                        &u,
                        &self.y,
                        p.eps1,
                        p.eps2,
                    )?;
                    exclusion_sets.push(excl);
                    self.observers[idx].gain = gains[mode].clone();
                }
                (None, DesignMode::PfdUnconstrained | DesignMode::PfdConstrained) => {
                    let problem = build_pfd_problem(model, &self.observers[idx], &u, &self.y, &y_next, p.eps1)?;
                    let inner = self.inner();
                    let first = design_pfd_gain(&problem, inner.as_ref(), self.strategy(self.prev_gamma[idx]), p.eps);
                    let outcome = match first {
                        Err(e) if e.is_solver_failure() && self.prev_gamma[idx].is_some() => {
                            debug!("step {k} mode {mode}: {e}, retrying from the PSD bound");
                            design_pfd_gain(&problem, inner.as_ref(), BracketStrategy::PsdBound, p.eps)
                        }
                        other => other,
                    };
                    match outcome {
                        Ok(d) => {
                            gamma = Some(d.gamma);
                            self.prev_gamma[idx] = Some(d.gamma);
                            self.observers[idx].gain = d.gain;
                        }
                        Err(e) if e.is_solver_failure() => {
                            warn!("step {k} mode {mode}: design failed ({e}), reusing previous gain");
                            failure = Some(e.to_string());
                            summary.design_failures += 1;
                        }
                        Err(e) => return Err(e),
                    }
                }
                (None, _) => {}
            }

            let obs = &self.observers[idx];
            let next = svo_step(model, obs, &u, &self.y, p.eps1)?;
            let yhat = output_set(model, &next.xhat)?;
            let r = residual(mode, &y_next, &yhat)?;
            let contains_origin = r.contains_origin()?;
            let stab = stability_residual(model.a(), model.c(), &obs.gain);
            if self.s.design.is_constrained() && stab > 1.0 - p.eps3 + STABILITY_AUDIT_TOL {
                warn!("step {k} mode {mode}: gain outside the stability ball ({stab})");
                summary.stability_violations += 1;
            }
            let exclusion_contains_origin = match exclusion_sets.last() {
                Some(z) if joint_gains.is_some() => Some(z.contains_point(&DVector::zeros(z.dim()))?),
                _ => None,
            };
            if audited == Some(mode) {
                let excluded = !contains_origin || exclusion_contains_origin == Some(false);
                if excluded {
                    warn!("step {k}: true mode {mode} excluded");
                    summary.soundness_violations += 1;
                }
            }
            modes.push(ModeStep {
                mode,
                residual_center_norm: r.set.center().norm(),
                f_norm_size: r.set.f_radius_sq(),
                excluding_degree: r.set.excluding_degree()?,
                contains_origin,
                gamma,
                gain: row_major(&obs.gain),
                stability_residual: stab,
                design_failure: failure,
                exclusion_contains_origin,
                residual: r.set,
            });
            self.observers[idx] = next.reduced(p.reduction_order)?;
        }

        if let Some(j) = self.joint.as_mut() {
            j.weights = mode_weights(&exclusion_sets)
                .unwrap_or_else(|_| weights_from_degrees(&vec![0.0; exclusion_sets.len()]));
            j.bank = step_aux_bank(model, &j.bank, &u, p.eps1, p.eps2)?.reduced(p.reduction_order)?;
        }

        let diagnosis = diagnose_flags(modes.iter().map(|m| (m.mode, m.contains_origin)).collect())?;
        self.x = x_next;
        self.y = y_next;
        Ok(StepRecord {
            step: k + 1,
            u: u.iter().copied().collect(),
            verdict: diagnosis.verdict,
            modes,
            joint_gamma,
            weights: weights_used,
            joint_failure,
        })
    }

    /// Joint design at the current step. Updates the stored input and
    /// returns the gains to use, the optimal ratio and a failure note.
    fn design_joint_step(&mut self) -> Result<JointStep> {
        let model = &self.setup.model;
        let p = &self.s.params;
        let j = self.joint.as_ref().expect("joint state");
        let problem = build_joint_problem(model, &j.bank, &self.observers, &j.weights, &self.y, p.eps1, p.eps2)?;
        let inner = self.inner();
        let first = design_joint(&problem, inner.as_ref(), self.strategy(j.prev_gamma), p.eps);
        let outcome = match first {
            Err(e) if e.is_solver_failure() && j.prev_gamma.is_some() => {
                design_joint(&problem, inner.as_ref(), BracketStrategy::PsdBound, p.eps)
            }
            other => other,
        };
        let previous: Vec<DMatrix<f64>> = self.observers.iter().map(|o| o.gain.clone()).collect();
        let j = self.joint.as_mut().expect("joint state");
        match outcome {
            Ok(d) => {
                j.prev_gamma = Some(d.gamma);
                j.u = d.u;
                Ok((d.gains, Some(d.gamma), None))
            }
            Err(e) if e.is_solver_failure() => {
                warn!("joint design failed ({e}), reusing previous gains and input");
                Ok((previous, None, Some(e.to_string())))
            }
            Err(e) => Err(e),
        }
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    vec_of(&m.transpose()).iter().copied().collect()
}
