//! Result files.
//!
//! | file | columns |
//! |------|---------|
//! | `trace.csv` | step, mode, residual-center-norm, f-norm-size, excluding-degree, contains-origin, verdict, gamma-star, stability-residual, stability-ok, design-failed, exclusion-contains-origin, u1..un |
//! | `grid.csv` | u1, u2, method, detection-step |
//! | `grid-compare.csv` | u1, u2, outcome |
//! | `compare.csv` | u1, u2, pfd-step, afd-step, category |
//! | `polygons/<step>_<mode>.csv` | x, y (closed loop) |
//! | `scenario-echo.json` | the scenario and the run summaries |
//!
//! Floats are written in shortest round-trip form, so identical runs give
//! byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::campaign::{ComparisonResult, GridResult};
use super::run::RunRecord;
use super::scenario::Scenario;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Per-step, per-mode trace.
pub fn write_trace_csv(path: &Path, record: &RunRecord, eps3: f64) -> Result<()> {
    let nu = record.steps.first().map_or(0, |s| s.u.len());
    let mut header = strings(&[
        "step",
        "mode",
        "residual-center-norm",
        "f-norm-size",
        "excluding-degree",
        "contains-origin",
        "verdict",
        "gamma-star",
        "stability-residual",
        "stability-ok",
        "design-failed",
        "exclusion-contains-origin",
    ]);
    header.extend((1..=nu).map(|j| format!("u{j}")));
    let mut rows = Vec::new();
    for s in &record.steps {
        let verdict = s.verdict.label();
        for m in &s.modes {
            let gamma = m.gamma.or(s.joint_gamma);
            let mut r = vec![
                s.step.to_string(),
                m.mode.to_string(),
                m.residual_center_norm.to_string(),
                m.f_norm_size.to_string(),
                m.excluding_degree.to_string(),
                m.contains_origin.to_string(),
                verdict.clone(),
                opt(gamma),
                m.stability_residual.to_string(),
                (m.stability_residual <= 1.0 - eps3 + super::run::STABILITY_AUDIT_TOL).to_string(),
                (m.design_failure.is_some() || s.joint_failure.is_some()).to_string(),
                opt(m.exclusion_contains_origin),
            ];
            r.extend(s.u.iter().map(f64::to_string));
            rows.push(r);
        }
    }
    write_csv(path, &header, &rows)
}

/// Residual zonotopes of two-output runs as closed vertex loops, one file
/// per step and mode. Returns the paths written (none for other output
/// dimensions).
pub fn write_polygons(dir: &Path, record: &RunRecord) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let two_d = record
        .steps
        .iter()
        .flat_map(|s| &s.modes)
        .all(|m| m.residual.dim() == 2);
    if !two_d || record.steps.is_empty() {
        return Ok(written);
    }
    create_dir(dir)?;
    for s in &record.steps {
        for m in &s.modes {
            let mut pts = m.residual.boundary_polygon_2d()?;
            if let Some(&first) = pts.first() {
                pts.push(first);
            }
            let rows: Vec<Vec<String>> = pts.iter().map(|p| vec![p[0].to_string(), p[1].to_string()]).collect();
            let path = dir.join(format!("{}_{}.csv", s.step, m.mode));
            write_csv(&path, &strings(&["x", "y"]), &rows)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[derive(Serialize)]
struct RunEcho<'a> {
    scenario: &'a Scenario,
    seed: u64,
    summary: &'a super::run::RunSummary,
}

/// Writes `trace.*`, `polygons/` and `scenario-echo.json` for one run.
pub fn emit_run(dir: &Path, scenario: &Scenario, record: &RunRecord, format: OutputFormat) -> Result<()> {
    create_dir(dir)?;
    match format {
        OutputFormat::Csv => write_trace_csv(&dir.join("trace.csv"), record, scenario.params.eps3)?,
        OutputFormat::Json => write_json(&dir.join("trace.json"), record)?,
    }
    write_polygons(&dir.join("polygons"), record)?;
    write_json(
        &dir.join("scenario-echo.json"),
        &RunEcho {
            scenario,
            seed: record.seed,
            summary: &record.summary,
        },
    )
}

pub fn write_grid_csv(path: &Path, grid: &GridResult) -> Result<()> {
    let rows: Vec<Vec<String>> = grid
        .rows
        .iter()
        .map(|r| {
            vec![
                r.u1.to_string(),
                r.u2.to_string(),
                r.method.label().to_string(),
                r.detection_step.to_string(),
            ]
        })
        .collect();
    write_csv(path, &strings(&["u1", "u2", "method", "detection-step"]), &rows)
}

pub fn write_grid_comparison_csv(path: &Path, grid: &GridResult) -> Result<()> {
    let rows: Vec<Vec<String>> = grid
        .comparisons
        .iter()
        .map(|c| vec![c.u1.to_string(), c.u2.to_string(), c.outcome.label().to_string()])
        .collect();
    write_csv(path, &strings(&["u1", "u2", "outcome"]), &rows)
}

#[derive(Serialize)]
struct GridEcho<'a> {
    scenario: &'a Scenario,
    methods: Vec<&'static str>,
    sentinel: usize,
    design_failures: usize,
    soundness_violations: usize,
}

/// Writes `grid.*`, `grid-compare.csv` (two or more methods) and
/// `scenario-echo.json`.
pub fn emit_grid(dir: &Path, base: &Scenario, grid: &GridResult, format: OutputFormat) -> Result<()> {
    create_dir(dir)?;
    match format {
        OutputFormat::Csv => {
            write_grid_csv(&dir.join("grid.csv"), grid)?;
            if !grid.comparisons.is_empty() {
                write_grid_comparison_csv(&dir.join("grid-compare.csv"), grid)?;
            }
        }
        OutputFormat::Json => write_json(&dir.join("grid.json"), grid)?,
    }
    write_json(
        &dir.join("scenario-echo.json"),
        &GridEcho {
            scenario: base,
            methods: grid.methods.iter().map(|m| m.label()).collect(),
            sentinel: grid.sentinel,
            design_failures: grid.design_failures,
            soundness_violations: grid.soundness_violations,
        },
    )
}

pub fn write_comparison_csv(path: &Path, cmp: &ComparisonResult) -> Result<()> {
    let rows: Vec<Vec<String>> = cmp
        .rows
        .iter()
        .map(|r| {
            vec![
                r.u1.to_string(),
                r.u2.to_string(),
                r.pfd_step.to_string(),
                r.afd_step.to_string(),
                r.category.label().to_string(),
            ]
        })
        .collect();
    write_csv(path, &strings(&["u1", "u2", "pfd-step", "afd-step", "category"]), &rows)
}

#[derive(Serialize)]
struct ComparisonEcho<'a> {
    scenario: &'a Scenario,
    pfd_design: &'static str,
    sentinel: usize,
    afd_summary: &'a super::run::RunSummary,
    counts: std::collections::BTreeMap<&'static str, usize>,
    afd_faster_or_equal: f64,
}

/// Writes `compare.*` and `scenario-echo.json`.
pub fn emit_comparison(dir: &Path, afd: &Scenario, cmp: &ComparisonResult, format: OutputFormat) -> Result<()> {
    create_dir(dir)?;
    match format {
        OutputFormat::Csv => write_comparison_csv(&dir.join("compare.csv"), cmp)?,
        OutputFormat::Json => write_json(&dir.join("compare.json"), cmp)?,
    }
    let counts = super::campaign::AfdPfdCategory::ALL
        .iter()
        .zip(cmp.counts)
        .map(|(c, n)| (c.label(), n))
        .collect();
    write_json(
        &dir.join("scenario-echo.json"),
        &ComparisonEcho {
            scenario: afd,
            pfd_design: cmp.pfd_design.label(),
            sentinel: cmp.sentinel,
            afd_summary: &cmp.afd_summary,
            counts,
            afd_faster_or_equal: cmp.afd_faster_or_equal(),
        },
    )
}
