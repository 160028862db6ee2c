//! Input-grid campaigns.

use rayon::prelude::*;
use serde::Serialize;

use super::run::{run_scenario_stream, RunSummary};
use super::scenario::{DesignMode, InputPolicy, Scenario, StopRule};
use crate::error::{Error, Result};

/// Detection delay of one method in one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub u1: f64,
    pub u2: f64,
    pub method: DesignMode,
    /// Steps from fault injection to detection, or the sentinel.
    pub detection_step: usize,
    pub detected: bool,
}

/// Paired outcome of the first method against the second in one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Faster,
    Slower,
    Equal,
    NeitherDetects,
}

impl Comparison {
    pub fn classify(a: Option<usize>, b: Option<usize>) -> Self {
        match (a, b) {
            (None, None) => Comparison::NeitherDetects,
            (Some(_), None) => Comparison::Faster,
            (None, Some(_)) => Comparison::Slower,
            (Some(x), Some(y)) if x < y => Comparison::Faster,
            (Some(x), Some(y)) if x > y => Comparison::Slower,
            _ => Comparison::Equal,
        }
    }

    pub fn swapped(self) -> Self {
        match self {
            Comparison::Faster => Comparison::Slower,
            Comparison::Slower => Comparison::Faster,
            other => other,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Comparison::Faster => "faster",
            Comparison::Slower => "slower",
            Comparison::Equal => "equal",
            Comparison::NeitherDetects => "neither_detects",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellComparison {
    pub u1: f64,
    pub u2: f64,
    pub outcome: Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub methods: Vec<DesignMode>,
    pub values: Vec<f64>,
    pub sentinel: usize,
    /// Cells in row-major order of `(u1, u2)`, methods innermost.
    pub rows: Vec<GridRow>,
    /// First method against the second, when two or more were run.
    pub comparisons: Vec<CellComparison>,
    pub design_failures: usize,
    pub soundness_violations: usize,
}

fn cells(values: &[f64]) -> Vec<(usize, [f64; 2])> {
    let n = values.len();
    (0..n * n).map(|c| (c, [values[c / n], values[c % n]])).collect()
}

fn check_grid(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Scenario("input grid is empty".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Scenario("input grid has non-finite values".into()));
    }
    Ok(())
}

/// Runs every method on every cell of `values x values`. Cell `c` (row-major)
/// uses random stream `c`, shared by all methods. Detection is reported as
/// the delay after fault injection; undetected cells get the sentinel
/// `base.params.horizon`.
pub fn run_input_grid(base: &Scenario, values: &[f64], methods: &[DesignMode]) -> Result<GridResult> {
    check_grid(values)?;
    if methods.is_empty() {
        return Err(Error::Scenario("no methods to compare".into()));
    }
    if methods.contains(&DesignMode::AfdJoint) {
        return Err(Error::Scenario("the input grid runs passive designs only".into()));
    }
    base.setup()?;
    let sentinel = base.params.horizon;
    let inject_at = base.true_mode.inject_at;
    let per_cell: Vec<Vec<(GridRow, RunSummary)>> = cells(values)
        .into_par_iter()
        .map(|(c, [u1, u2])| {
            methods
                .iter()
                .map(|&method| {
                    let mut s = base.clone().with_constant_input(&[u1, u2]);
                    s.design = method;
                    s.stop = StopRule::Detection;
                    let rec = run_scenario_stream(&s, c as u64)?;
                    let delay = rec.summary.detection_step.map(|d| d.saturating_sub(inject_at));
                    Ok((
                        GridRow {
                            u1,
                            u2,
                            method,
                            detection_step: delay.unwrap_or(sentinel),
                            detected: delay.is_some(),
                        },
                        rec.summary,
                    ))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut comparisons = Vec::new();
    let (mut design_failures, mut soundness_violations) = (0, 0);
    for cell in per_cell {
        if cell.len() >= 2 {
            let step = |r: &GridRow| r.detected.then_some(r.detection_step);
            comparisons.push(CellComparison {
                u1: cell[0].0.u1,
                u2: cell[0].0.u2,
                outcome: Comparison::classify(step(&cell[0].0), step(&cell[1].0)),
            });
        }
        for (row, summary) in cell {
            design_failures += summary.design_failures;
            soundness_violations += summary.soundness_violations;
            rows.push(row);
        }
    }
    Ok(GridResult {
        methods: methods.to_vec(),
        values: values.to_vec(),
        sentinel,
        rows,
        comparisons,
        design_failures,
        soundness_violations,
    })
}

/// Outcome of a passive design relative to the joint design in one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AfdPfdCategory {
    /// The passive design isolates earlier.
    PfdFaster,
    Equal,
    /// The passive design isolates within the horizon, but later.
    PfdSlower,
    /// The passive design does not isolate within the horizon.
    PfdFails,
}

impl AfdPfdCategory {
    pub const ALL: [AfdPfdCategory; 4] = [
        AfdPfdCategory::PfdFaster,
        AfdPfdCategory::Equal,
        AfdPfdCategory::PfdSlower,
        AfdPfdCategory::PfdFails,
    ];

    pub fn classify(pfd: Option<usize>, afd: Option<usize>) -> Self {
        match (pfd, afd) {
            (None, _) => AfdPfdCategory::PfdFails,
            (Some(_), None) => AfdPfdCategory::PfdFaster,
            (Some(p), Some(a)) if p < a => AfdPfdCategory::PfdFaster,
            (Some(p), Some(a)) if p == a => AfdPfdCategory::Equal,
            _ => AfdPfdCategory::PfdSlower,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AfdPfdCategory::PfdFaster => "pfd_faster",
            AfdPfdCategory::Equal => "equal",
            AfdPfdCategory::PfdSlower => "pfd_slower",
            AfdPfdCategory::PfdFails => "pfd_fails",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub u1: f64,
    pub u2: f64,
    /// Isolation step of the passive design, or the sentinel.
    pub pfd_step: usize,
    /// Isolation step of the joint design (the same in every cell).
    pub afd_step: usize,
    pub category: AfdPfdCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonResult {
    pub pfd_design: DesignMode,
    pub sentinel: usize,
    pub afd_summary: RunSummary,
    pub rows: Vec<ComparisonRow>,
    /// Cell counts in the order of [`AfdPfdCategory::ALL`].
    pub counts: [usize; 4],
    pub design_failures: usize,
    pub soundness_violations: usize,
}

impl ComparisonResult {
    /// Share of cells where the joint design isolates no later than the
    /// passive one.
    pub fn afd_faster_or_equal(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        (self.counts[1] + self.counts[2] + self.counts[3]) as f64 / self.rows.len() as f64
    }
}

/// Runs the joint design once and the passive design `pfd_design` on every
/// cell of `values x values`, both for `k_max - 1` steps (time instants
/// `0..k_max`). Isolation steps are compared; `k_max` is the sentinel for
/// no isolation. All runs share random stream 0, so each passive run sees
/// the same disturbance and noise as the joint run.
pub fn run_afd_vs_pfd(
    afd: &Scenario,
    pfd_design: DesignMode,
    values: &[f64],
    k_max: usize,
) -> Result<ComparisonResult> {
    check_grid(values)?;
    if k_max < 2 {
        return Err(Error::Scenario("the comparison horizon must be at least 2".into()));
    }
    if afd.design != DesignMode::AfdJoint || !matches!(afd.input, InputPolicy::Designed { .. }) {
        return Err(Error::Scenario("the comparison base must be an afd_joint scenario".into()));
    }
    if pfd_design == DesignMode::AfdJoint {
        return Err(Error::Scenario("the passive side cannot be afd_joint".into()));
    }
    let mut base = afd.clone();
    base.params.horizon = k_max - 1;
    base.stop = StopRule::Isolation;
    let afd_rec = run_scenario_stream(&base, 0)?;
    let afd_step = afd_rec.summary.isolation_step;

    let results: Vec<(ComparisonRow, RunSummary)> = cells(values)
        .into_par_iter()
        .map(|(_, [u1, u2])| {
            let mut s = base.clone().with_constant_input(&[u1, u2]);
            s.design = pfd_design;
            s.aux_init = None;
            let rec = run_scenario_stream(&s, 0)?;
            let pfd_step = rec.summary.isolation_step;
            Ok((
                ComparisonRow {
                    u1,
                    u2,
                    pfd_step: pfd_step.unwrap_or(k_max),
                    afd_step: afd_step.unwrap_or(k_max),
                    category: AfdPfdCategory::classify(pfd_step, afd_step),
                },
                rec.summary,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut counts = [0; 4];
    let mut design_failures = afd_rec.summary.design_failures;
    let mut soundness_violations = afd_rec.summary.soundness_violations;
    let mut rows = Vec::with_capacity(results.len());
    for (row, summary) in results {
        let slot = AfdPfdCategory::ALL.iter().position(|c| *c == row.category).expect("category");
        counts[slot] += 1;
        design_failures += summary.design_failures;
        soundness_violations += summary.soundness_violations;
        rows.push(row);
    }
    Ok(ComparisonResult {
        pfd_design,
        sentinel: k_max,
        afd_summary: afd_rec.summary,
        rows,
        counts,
        design_failures,
        soundness_violations,
    })
}
