//! Scenario files.
//!
//! A scenario is a JSON document. Matrices are row-major nested arrays and
//! zonotopes are `{ "center": [...], "generators": [[...], ...] }` with one
//! inner array per row of the generator matrix.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{PlantModel, TrueMode};
use crate::setops::Zonotope;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZonotopeSpec {
    pub center: Vec<f64>,
    #[serde(default)]
    pub generators: Vec<Vec<f64>>,
}

impl ZonotopeSpec {
    /// Axis-aligned box with equal radii.
    pub fn cube(center: &[f64], radius: f64) -> Self {
        let n = center.len();
        let generators = (0..n)
            .map(|i| (0..n).map(|j| if i == j { radius } else { 0.0 }).collect())
            .collect();
        ZonotopeSpec {
            center: center.to_vec(),
            generators,
        }
    }

    pub fn to_zonotope(&self, what: &str) -> Result<Zonotope> {
        let n = self.center.len();
        let generators = if self.generators.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            matrix(&format!("{what}.generators"), &self.generators)?
        };
        if generators.nrows() != n {
            return Err(Error::Scenario(format!(
                "{what}: generator matrix has {} rows, center has length {n}",
                generators.nrows()
            )));
        }
        Zonotope::new(DVector::from_column_slice(&self.center), generators)
            .map_err(|e| Error::Scenario(format!("{what}: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub e: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    /// `[lo, hi]` gain interval of each actuator's fault mode.
    pub fault_intervals: Vec<[f64; 2]>,
    pub disturbance: ZonotopeSpec,
    pub noise: ZonotopeSpec,
}

impl PlantSpec {
    pub fn to_model(&self) -> Result<PlantModel> {
        let intervals: Vec<(f64, f64)> = self.fault_intervals.iter().map(|p| (p[0], p[1])).collect();
        PlantModel::with_fault_intervals(
            matrix("plant.a", &self.a)?,
            matrix("plant.b", &self.b)?,
            matrix("plant.c", &self.c)?,
            matrix("plant.e", &self.e)?,
            matrix("plant.f", &self.f)?,
            &intervals,
            self.disturbance.to_zonotope("plant.disturbance")?,
            self.noise.to_zonotope("plant.noise")?,
        )
        .map_err(|e| Error::Scenario(format!("plant: {e}")))
    }
}

/// The realized fault. Before `inject_at` the plant is healthy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueModeSpec {
    /// Mode whose bound contains `g`, or `null` for a fault outside the
    /// modelled modes.
    pub index: Option<usize>,
    /// Diagonal of the fault matrix `G`.
    pub g: Vec<f64>,
    #[serde(default)]
    pub inject_at: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputPolicy {
    Constant { u: Vec<f64> },
    /// Input chosen by the joint design inside `|u - center| <= radius`.
    Designed { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignMode {
    /// Every observer keeps the scenario's `fixed_gain` (zero if absent).
    FixedGain,
    PfdUnconstrained,
    /// Gain design restricted to the stability ball.
    PfdConstrained,
    /// Joint gain and input design with stability and input balls.
    AfdJoint,
}

impl DesignMode {
    pub fn label(self) -> &'static str {
        match self {
            DesignMode::FixedGain => "fixed_gain",
            DesignMode::PfdUnconstrained => "pfd_unconstrained",
            DesignMode::PfdConstrained => "pfd_constrained",
            DesignMode::AfdJoint => "afd_joint",
        }
    }

    pub fn is_constrained(self) -> bool {
        matches!(self, DesignMode::PfdConstrained | DesignMode::AfdJoint)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Run the full horizon.
    #[default]
    Never,
    /// Stop after the first step where the healthy observer excludes the origin.
    Detection,
    /// Stop after the first step that isolates a fault mode.
    Isolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    /// Segments per concave coordinate in the constrained solver.
    pub m: usize,
    /// Bisection precision on `M(gamma)`.
    pub eps: f64,
    pub reduction_order: usize,
    /// Number of simulated steps.
    pub horizon: usize,
    pub seed: u64,
    pub node_limit: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            eps1: crate::setops::DEFAULT_EPS1,
            eps2: crate::afd::DEFAULT_EPS2,
            eps3: crate::iqp::DEFAULT_EPS3,
            m: crate::iqp::DEFAULT_SEGMENTS,
            eps: crate::qfp::DEFAULT_EPS,
            reduction_order: crate::setops::DEFAULT_REDUCTION_ORDER,
            horizon: 20,
            seed: 0,
            node_limit: crate::iqp::DEFAULT_NODE_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub plant: PlantSpec,
    /// Initial set of every observer.
    pub observer_init: ZonotopeSpec,
    /// Initial set of every auxiliary set (joint design only); defaults to
    /// `observer_init`.
    #[serde(default)]
    pub aux_init: Option<ZonotopeSpec>,
    pub x0: Vec<f64>,
    pub true_mode: TrueModeSpec,
    pub input: InputPolicy,
    pub design: DesignMode,
    /// Observers to run; all modes when absent. Must include mode 0.
    #[serde(default)]
    pub modes: Option<Vec<usize>>,
    #[serde(default)]
    pub fixed_gain: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub params: Params,
}

/// Input source resolved from a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedInput {
    Constant(DVector<f64>),
    Ball { center: DVector<f64>, radius: f64 },
}

/// A validated scenario in matrix form.
#[derive(Debug, Clone)]
pub struct Setup {
    pub model: PlantModel,
    pub observer_init: Zonotope,
    pub aux_init: Zonotope,
    pub x0: DVector<f64>,
    pub fault: TrueMode,
    pub inject_at: usize,
    pub input: ResolvedInput,
    pub modes: Vec<usize>,
    pub fixed_gain: DMatrix<f64>,
}

impl Setup {
    /// Realized plant mode at step `k`.
    pub fn true_mode_at(&self, k: usize) -> TrueMode {
        if k >= self.inject_at {
            self.fault.clone()
        } else {
            TrueMode::healthy(self.model.nu())
        }
    }

    /// Mode whose observer is guaranteed to contain the state at step `k`:
    /// the plant must have been in that mode since step 0.
    pub fn audited_mode_at(&self, k: usize) -> Option<usize> {
        if self.inject_at == 0 {
            self.fault.index
        } else if k < self.inject_at {
            Some(0)
        } else {
            None
        }
    }
}

pub(crate) fn matrix(what: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if nr == 0 || nc == 0 {
        return Err(Error::Scenario(format!("{what}: empty matrix")));
    }
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Scenario(format!("{what}: rows differ in length")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Scenario(format!("{what}: non-finite entry")));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

fn vector(what: &str, v: &[f64], n: usize) -> Result<DVector<f64>> {
    if v.len() != n {
        return Err(Error::Scenario(format!("{what}: expected length {n}, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Scenario(format!("{what}: non-finite entry")));
    }
    Ok(DVector::from_column_slice(v))
}

fn scenario_err(e: Error) -> Error {
    match e {
        Error::Scenario(_) => e,
        other => Error::Scenario(other.to_string()),
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.params.seed = seed;
        self
    }

    pub fn with_constant_input(mut self, u: &[f64]) -> Self {
        self.input = InputPolicy::Constant { u: u.to_vec() };
        self
    }

    /// Checks the schema invariants and converts to matrix form.
    pub fn setup(&self) -> Result<Setup> {
        let p = &self.params;
        if p.horizon == 0 {
            return Err(Error::Scenario("params.horizon must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&p.eps1) {
            return Err(Error::Scenario("params.eps1 must lie in [0, 1)".into()));
        }
        if !(p.eps2 > 0.0 && p.eps2.is_finite()) {
            return Err(Error::Scenario("params.eps2 must be positive".into()));
        }
        if !(p.eps3 > 0.0 && p.eps3 < 1.0) {
            return Err(Error::Scenario("params.eps3 must lie in (0, 1)".into()));
        }
        if p.m == 0 || p.node_limit == 0 {
            return Err(Error::Scenario("params.m and params.node_limit must be positive".into()));
        }
        if !(p.eps > 0.0 && p.eps.is_finite()) {
            return Err(Error::Scenario("params.eps must be positive".into()));
        }

        let model = self.plant.to_model()?;
        let (nx, nu, ny) = (model.nx(), model.nu(), model.ny());
        if p.reduction_order < nx {
            return Err(Error::Scenario(format!(
                "params.reduction_order must be at least n_x = {nx}"
            )));
        }
        let observer_init = self.observer_init.to_zonotope("observer_init")?;
        let aux_init = match &self.aux_init {
            Some(z) => z.to_zonotope("aux_init")?,
            None => observer_init.clone(),
        };
        if observer_init.dim() != nx || aux_init.dim() != nx {
            return Err(Error::Scenario(format!("initial sets must have dimension {nx}")));
        }
        let x0 = vector("x0", &self.x0, nx)?;
        if !observer_init.contains_point(&x0).map_err(scenario_err)? {
            return Err(Error::Scenario("x0 lies outside observer_init".into()));
        }

        let g = vector("true_mode.g", &self.true_mode.g, nu)?;
        let fault = TrueMode {
            index: self.true_mode.index,
            g: DMatrix::from_diagonal(&g),
        };
        fault.validate(&model).map_err(scenario_err)?;

        let modes = match &self.modes {
            None => (0..model.n_modes()).collect(),
            Some(m) => {
                let mut m = m.clone();
                m.sort_unstable();
                m.dedup();
                m
            }
        };
        if modes.first() != Some(&0) {
            return Err(Error::Scenario("modes must include the healthy mode 0".into()));
        }
        if let Some(&bad) = modes.iter().find(|&&i| i >= model.n_modes()) {
            return Err(Error::Scenario(format!(
                "mode {bad} does not exist (the plant has {} modes)",
                model.n_modes()
            )));
        }

        let fixed_gain = match &self.fixed_gain {
            None => DMatrix::zeros(nx, ny),
            Some(rows) => {
                let l = matrix("fixed_gain", rows)?;
                if l.shape() != (nx, ny) {
                    return Err(Error::Scenario(format!("fixed_gain must be {nx} x {ny}")));
                }
                l
            }
        };

        let input = match &self.input {
            InputPolicy::Constant { u } => ResolvedInput::Constant(vector("input.u", u, nu)?),
            InputPolicy::Designed { center, radius } => {
                if !(*radius >= 0.0 && radius.is_finite()) {
                    return Err(Error::Scenario("input.radius must be nonnegative".into()));
                }
                ResolvedInput::Ball {
                    center: vector("input.center", center, nu)?,
                    radius: *radius,
                }
            }
        };
        match (self.design, &input) {
            (DesignMode::AfdJoint, ResolvedInput::Constant(_)) => {
                return Err(Error::Scenario("afd_joint requires a designed input".into()));
            }
            (DesignMode::AfdJoint, _) => {
                if modes.len() != model.n_modes() {
                    return Err(Error::Scenario("afd_joint runs every mode".into()));
                }
                if !aux_init.contains_point(&x0).map_err(scenario_err)? {
                    return Err(Error::Scenario("x0 lies outside aux_init".into()));
                }
            }
            (_, ResolvedInput::Ball { .. }) => {
                return Err(Error::Scenario(format!(
                    "{} requires a constant input",
                    self.design.label()
                )));
            }
            _ => {}
        }

        Ok(Setup {
            model,
            observer_init,
            aux_init,
            x0,
            fault,
            inject_at: self.true_mode.inject_at,
            input,
            modes,
            fixed_gain,
        })
    }
}
