//! Scenarios, closed-loop simulation, input-grid campaigns and result
//! files.
//!
//! A run follows the time loop
//!
//! 1. draw `w_k` and `v_{k+1}`;
//! 2. joint design only: choose the gains and `u_k` from the data at `k`;
//! 3. apply `u_k`, measure `y_{k+1}`;
//! 4. passive designs: choose each gain from `y_{k+1}`;
//! 5. propagate every observer with its gain and test the residuals.
//!
//! Design failures are absorbed by reusing the previous gain (and input) and
//! are counted in the summary.

mod campaign;
mod emit;
pub mod presets;
mod run;
mod scenario;

pub use campaign::{
    run_afd_vs_pfd, run_input_grid, AfdPfdCategory, CellComparison, Comparison, ComparisonResult, ComparisonRow,
    GridResult, GridRow,
};
pub use emit::{
    emit_comparison, emit_grid, emit_run, write_comparison_csv, write_grid_comparison_csv, write_grid_csv,
    write_json, write_polygons, write_trace_csv, OutputFormat,
};
pub use run::{
    run_scenario, run_scenario_stream, ModeStep, RunRecord, RunSummary, StepRecord, STABILITY_AUDIT_TOL,
};
pub use scenario::{
    DesignMode, InputPolicy, Params, PlantSpec, ResolvedInput, Scenario, Setup, StopRule, TrueModeSpec,
    ZonotopeSpec,
};
