//! The bank of set-valued observers, residual zonotopes and the diagnosis
//! rule.
//!
//! Observer `i` assumes the plant is in mode `i` and propagates
//!
//! ```text
//! X^i_{k+1} = (A - L C) X^i_k + L y_k - L F V + B G_i u_k + E W
//! ```
//!
//! where `B G_i u_k` is enclosed through the interval bound of mode `i`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{check_len, check_shape, hcat};
use crate::plant::PlantModel;
use crate::setops::Zonotope;

/// State of observer `mode`: its estimation set and the gain used for the
/// next propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct SvoState {
    pub mode: usize,
    pub xhat: Zonotope,
    pub gain: DMatrix<f64>,
}

impl SvoState {
    /// Observer with a zero gain.
    pub fn new(model: &PlantModel, mode: usize, xhat: Zonotope) -> Result<Self> {
        if xhat.dim() != model.nx() {
            return Err(Error::dim("observer set dimension differs from n_x"));
        }
        model.mode_bound(mode)?;
        Ok(SvoState {
            mode,
            xhat,
            gain: DMatrix::zeros(model.nx(), model.ny()),
        })
    }

    pub fn with_gain(mut self, gain: DMatrix<f64>) -> Self {
        self.gain = gain;
        self
    }

    /// Applies order reduction to the estimation set.
    pub fn reduced(mut self, q: usize) -> Result<Self> {
        self.xhat = self.xhat.reduce_order(q)?;
        Ok(self)
    }
}

/// Propagates observer `obs` one step with its current gain. The returned set
/// is not reduced.
pub fn svo_step(
    model: &PlantModel,
    obs: &SvoState,
    u: &DVector<f64>,
    y_k: &DVector<f64>,
    eps1: f64,
) -> Result<SvoState> {
    let (nx, ny) = (model.nx(), model.ny());
    check_shape("gain", &obs.gain, nx, ny)?;
    check_len("y_k", y_k, ny)?;
    if obs.xhat.dim() != nx {
        return Err(Error::dim("observer set dimension differs from n_x"));
    }
    let l = &obs.gain;
    let alc = model.a() - l * model.c();
    let lf = l * model.f();
    let w = model.disturbance();
    let v = model.noise();
    let bgu = model.input_enclosure(obs.mode, u, eps1)?;

    let center = &alc * obs.xhat.center() + l * y_k - &lf * v.center()
        + bgu.center()
        + model.e() * w.center();
    let g_x = &alc * obs.xhat.generators();
    let g_v = -(&lf * v.generators());
    let g_w = model.e() * w.generators();
    let generators = hcat(nx, &[&g_x, &g_v, bgu.generators(), &g_w])?;
    Ok(SvoState {
        mode: obs.mode,
        xhat: Zonotope::new(center, generators)?,
        gain: obs.gain.clone(),
    })
}

/// Output set `C X ⊕ F V`.
pub fn output_set(model: &PlantModel, xhat: &Zonotope) -> Result<Zonotope> {
    if xhat.dim() != model.nx() {
        return Err(Error::dim("observer set dimension differs from n_x"));
    }
    xhat.linear_map(model.c())?
        .minkowski_sum(&model.noise().linear_map(model.f())?)
}

/// Residual zonotope `y ⊕ (-Y)` of one observer.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualZonotope {
    pub mode: usize,
    pub set: Zonotope,
}

impl ResidualZonotope {
    pub fn contains_origin(&self) -> Result<bool> {
        self.set.contains_point(&DVector::zeros(self.set.dim()))
    }
}

/// Residual of a measured output against a predicted output set. The
/// generators are kept with their sign since the set is symmetric.
pub fn residual(mode: usize, y_next: &DVector<f64>, yhat_next: &Zonotope) -> Result<ResidualZonotope> {
    check_len("y", y_next, yhat_next.dim())?;
    Ok(ResidualZonotope {
        mode,
        set: Zonotope::new(y_next - yhat_next.center(), yhat_next.generators().clone())?,
    })
}

/// Excluding degree of a residual zonotope.
pub fn excluding_degree_residual(r: &ResidualZonotope) -> Result<f64> {
    r.set.excluding_degree()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "modes")]
pub enum Verdict {
    /// More than one mode is consistent with the measurement.
    Consistent(Vec<usize>),
    /// Exactly one mode is consistent.
    Isolated(usize),
    /// No mode is consistent.
    Indeterminate,
}

impl Verdict {
    /// Short label used in CSV output.
    pub fn label(&self) -> String {
        match self {
            Verdict::Consistent(m) => {
                let ids: Vec<String> = m.iter().map(|i| i.to_string()).collect();
                format!("consistent:{}", ids.join("+"))
            }
            Verdict::Isolated(i) => format!("isolated:{i}"),
            Verdict::Indeterminate => "indeterminate".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnosis {
    pub verdict: Verdict,
    /// `(mode, origin in residual)` for each observer.
    pub flags: Vec<(usize, bool)>,
}

/// Applies the residual test to every observer and classifies the result.
pub fn diagnose(residuals: &[ResidualZonotope]) -> Result<Diagnosis> {
    let flags = residuals
        .iter()
        .map(|r| Ok((r.mode, r.contains_origin()?)))
        .collect::<Result<Vec<_>>>()?;
    diagnose_flags(flags)
}

/// Classification from precomputed membership flags.
pub fn diagnose_flags(flags: Vec<(usize, bool)>) -> Result<Diagnosis> {
    if flags.is_empty() {
        return Err(Error::InvalidParameter("no residuals to diagnose".into()));
    }
    let consistent: Vec<usize> = flags.iter().filter(|f| f.1).map(|f| f.0).collect();
    let verdict = match consistent.len() {
        0 => Verdict::Indeterminate,
        1 => Verdict::Isolated(consistent[0]),
        _ => Verdict::Consistent(consistent),
    };
    Ok(Diagnosis { verdict, flags })
}
