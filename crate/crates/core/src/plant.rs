//! Ground-truth simulation of the multi-mode LTI plant
//!
//! ```text
//! x_{k+1} = A x_k + B G u_k + E w_k
//! y_k     = C x_k + F v_k
//! ```
//!
//! with `w_k` in the disturbance zonotope `W` and `v_k` in the noise zonotope `V`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, check_len, check_shape};
use crate::setops::{interval_product_enclosure, IntervalMatrix, Zonotope};

/// System matrices, actuator mode bounds and uncertainty sets.
///
/// `mode_bounds[0]` is the healthy mode (identity). `mode_bounds[i]` for
/// `i >= 1` differs from the identity only at diagonal entry `i - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    e: DMatrix<f64>,
    f: DMatrix<f64>,
    mode_bounds: Vec<IntervalMatrix>,
    disturbance: Zonotope,
    noise: Zonotope,
}

impl PlantModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        e: DMatrix<f64>,
        f: DMatrix<f64>,
        mode_bounds: Vec<IntervalMatrix>,
        disturbance: Zonotope,
        noise: Zonotope,
    ) -> Result<Self> {
        let nx = a.nrows();
        check_shape("A", &a, nx, nx)?;
        let nu = b.ncols();
        check_shape("B", &b, nx, nu)?;
        let ny = c.nrows();
        check_shape("C", &c, ny, nx)?;
        check_shape("E", &e, nx, disturbance.dim())?;
        check_shape("F", &f, ny, noise.dim())?;
        for (name, m) in [("A", &a), ("B", &b), ("C", &c), ("E", &e), ("F", &f)] {
            if !all_finite(m) {
                return Err(Error::InvalidParameter(format!("{name} has non-finite entries")));
            }
        }
        if mode_bounds.len() != nu + 1 {
            return Err(Error::dim(format!(
                "{} mode bounds given for {nu} actuators (expected {})",
                mode_bounds.len(),
                nu + 1
            )));
        }
        for (i, g) in mode_bounds.iter().enumerate() {
            if g.shape() != (nu, nu) {
                return Err(Error::dim(format!("mode bound {i} is not {nu}x{nu}")));
            }
            match (i, g.single_fault_entry()) {
                (0, Some(None)) => {}
                (0, _) => {
                    return Err(Error::InvalidParameter(
                        "mode bound 0 must be the identity".into(),
                    ))
                }
                (i, Some(Some((j, _, _)))) if j == i - 1 => {}
                (i, _) => {
                    return Err(Error::InvalidParameter(format!(
                        "mode bound {i} must fault only actuator {i}"
                    )))
                }
            }
        }
        Ok(PlantModel {
            a,
            b,
            c,
            e,
            f,
            mode_bounds,
            disturbance,
            noise,
        })
    }

    /// Builds the mode list from one fault interval `[lo, hi]` per actuator
    /// (`hi == 1` stands for the half-open `[lo, 1)`).
    #[allow(clippy::too_many_arguments)]
    pub fn with_fault_intervals(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        e: DMatrix<f64>,
        f: DMatrix<f64>,
        fault_intervals: &[(f64, f64)],
        disturbance: Zonotope,
        noise: Zonotope,
    ) -> Result<Self> {
        let nu = b.ncols();
        if fault_intervals.len() != nu {
            return Err(Error::dim(format!(
                "{} fault intervals for {nu} actuators",
                fault_intervals.len()
            )));
        }
        let mut bounds = vec![IntervalMatrix::identity(nu)];
        for (j, &(lo, hi)) in fault_intervals.iter().enumerate() {
            bounds.push(IntervalMatrix::single_fault(nu, j, lo, hi)?);
        }
        PlantModel::new(a, b, c, e, f, bounds, disturbance, noise)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn e(&self) -> &DMatrix<f64> {
        &self.e
    }
    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }
    pub fn mode_bounds(&self) -> &[IntervalMatrix] {
        &self.mode_bounds
    }
    pub fn mode_bound(&self, mode: usize) -> Result<&IntervalMatrix> {
        self.mode_bounds
            .get(mode)
            .ok_or_else(|| Error::dim(format!("mode {mode} out of range")))
    }
    /// Disturbance bound `W = <w^c, H_w>`.
    pub fn disturbance(&self) -> &Zonotope {
        &self.disturbance
    }
    /// Noise bound `V = <eta^c, H_eta>`.
    pub fn noise(&self) -> &Zonotope {
        &self.noise
    }

    pub fn nx(&self) -> usize {
        self.a.nrows()
    }
    pub fn nu(&self) -> usize {
        self.b.ncols()
    }
    pub fn ny(&self) -> usize {
        self.c.nrows()
    }
    /// Number of modes including the healthy one.
    pub fn n_modes(&self) -> usize {
        self.mode_bounds.len()
    }

    /// `(mid, rad)` of the faulty diagonal entry of a mode after closing a
    /// half-open interval with `eps1`, or `None` for the healthy mode.
    pub fn fault_mid_rad(&self, mode: usize, eps1: f64) -> Result<Option<(usize, f64, f64)>> {
        let closed = self.mode_bound(mode)?.closed(eps1)?;
        Ok(closed.single_fault_entry().flatten().map(|(j, lo, hi)| {
            (j, 0.5 * (lo + hi), 0.5 * (hi - lo))
        }))
    }

    /// Enclosure of `{B G u : G in mode bound}`.
    pub fn input_enclosure(&self, mode: usize, u: &DVector<f64>, eps1: f64) -> Result<Zonotope> {
        check_len("u", u, self.nu())?;
        interval_product_enclosure(&self.b, self.mode_bound(mode)?, u, eps1)
    }
}

/// The realized actuator health: a mode index (if the fault matches one of
/// the modelled modes) and the diagonal fault matrix `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueMode {
    pub index: Option<usize>,
    pub g: DMatrix<f64>,
}

impl TrueMode {
    pub fn healthy(nu: usize) -> Self {
        TrueMode {
            index: Some(0),
            g: DMatrix::identity(nu, nu),
        }
    }

    /// Checks that `g` lies in the bound of the claimed mode.
    pub fn validate(&self, model: &PlantModel) -> Result<()> {
        check_shape("G", &self.g, model.nu(), model.nu())?;
        if let Some(i) = self.index {
            if !model.mode_bound(i)?.contains(&self.g) {
                return Err(Error::InvalidParameter(format!(
                    "fault matrix lies outside the bound of mode {i}"
                )));
            }
        }
        Ok(())
    }
}

/// One plant step. Returns `(x_{k+1}, y_k)` where `y_k = C x_k + F v` is the
/// measurement of the supplied state.
pub fn step_plant(
    model: &PlantModel,
    x: &DVector<f64>,
    u: &DVector<f64>,
    mode: &TrueMode,
    w: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_len("x", x, model.nx())?;
    check_len("u", u, model.nu())?;
    check_shape("G", &mode.g, model.nu(), model.nu())?;
    if !model.disturbance.contains_point(w)? {
        return Err(Error::InvalidParameter("disturbance outside its bound".into()));
    }
    if !model.noise.contains_point(v)? {
        return Err(Error::InvalidParameter("noise outside its bound".into()));
    }
    let next = &model.a * x + &model.b * (&mode.g * u) + &model.e * w;
    let y = &model.c * x + &model.f * v;
    Ok((next, y))
}

/// Draws `g + H xi` with `xi` uniform on `[-1, 1]^r`.
pub fn sample_in_zonotope<R: Rng + ?Sized>(z: &Zonotope, rng: &mut R) -> DVector<f64> {
    let xi = DVector::from_fn(z.order(), |_, _| rng.random_range(-1.0..=1.0));
    z.center() + z.generators() * xi
}
