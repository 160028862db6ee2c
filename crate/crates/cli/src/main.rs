use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use zonofd::harness::{
    emit_comparison, emit_grid, emit_run, presets, run_afd_vs_pfd, run_input_grid, run_scenario, DesignMode,
    OutputFormat, Scenario,
};
use zonofd::Error;

#[derive(Parser)]
#[command(name = "zonofd", version, about = "Set-based fault diagnosis simulation campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its trace.
    Run(Common),
    /// Detection delays over a square grid of constant inputs.
    Grid {
        #[command(flatten)]
        common: Common,
        /// Designs to compare, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "pfd_constrained,pfd_unconstrained")]
        methods: Vec<String>,
        /// Grid values for each input channel, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
    },
    /// Joint design against a passive design over an input grid.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "pfd_constrained")]
        pfd_design: String,
        /// Number of time instants; also the no-isolation sentinel.
        #[arg(long, default_value_t = 21)]
        k_max: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
    },
    /// Print a built-in scenario as JSON, or list them.
    Preset { name: Option<String> },
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// Built-in scenario name (see `zonofd preset`).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Segments per concave coordinate.
    #[arg(long)]
    m: Option<usize>,
    /// Bisection precision.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    reduction_order: Option<usize>,
    /// Worker threads for grid cells (0: all cores).
    #[arg(long, default_value_t = 0)]
    parallel: usize,
}

impl Common {
    fn scenario(&self, default_preset: &str) -> Result<Scenario, Error> {
        let mut s = match (&self.scenario, &self.preset) {
            (Some(path), _) => Scenario::load(path)?,
            (None, name) => {
                let name = name.as_deref().unwrap_or(default_preset);
                presets::by_name(name).ok_or_else(|| {
                    Error::Scenario(format!("unknown preset {name:?}; known: {}", presets::NAMES.join(", ")))
                })?
            }
        };
        if let Some(seed) = self.seed {
            s.params.seed = seed;
        }
        if let Some(m) = self.m {
            s.params.m = m;
        }
        if let Some(eps) = self.eps {
            s.params.eps = eps;
        }
        if let Some(q) = self.reduction_order {
            s.params.reduction_order = q;
        }
        s.setup()?;
        Ok(s)
    }

    fn init_threads(&self) {
        if self.parallel > 0 {
            // fails only if a pool already exists, which is harmless here
            let _ = rayon::ThreadPoolBuilder::new().num_threads(self.parallel).build_global();
        }
    }
}

fn design(name: &str) -> Result<DesignMode, Error> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| Error::Scenario(format!("unknown design {name:?}")))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Scenario(_) => 2,
        Error::Soundness(_) => 4,
        Error::Io { .. } | Error::Csv { .. } => 1,
        _ => 3,
    }
}

fn soundness(violations: usize, what: &str) -> Result<(), Error> {
    if violations > 0 {
        return Err(Error::Soundness(format!("{what}: true mode excluded at {violations} step(s)")));
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(c) => {
            let s = c.scenario("pfd-g1")?;
            let rec = run_scenario(&s)?;
            emit_run(&c.out, &s, &rec, c.format)?;
            let sum = &rec.summary;
            println!(
                "{}: detection {} isolation {} ({} steps, {} design failures)",
                s.name,
                sum.detection_step.map_or("-".into(), |k| k.to_string()),
                sum.isolation_step.map_or("-".into(), |k| k.to_string()),
                sum.steps_run,
                sum.design_failures
            );
            rec.check_soundness()
        }
        Command::Grid { common, methods, values } => {
            common.init_threads();
            let s = common.scenario("detection-grid")?;
            let methods = methods.iter().map(|m| design(m)).collect::<Result<Vec<_>, _>>()?;
            let values = values.unwrap_or_else(presets::detection_grid_values);
            info!("{} cells x {} methods", values.len() * values.len(), methods.len());
            let grid = run_input_grid(&s, &values, &methods)?;
            emit_grid(&common.out, &s, &grid, common.format)?;
            for m in &methods {
                let detected = grid.rows.iter().filter(|r| r.method == *m && r.detected).count();
                println!("{}: detected in {detected} of {} cells", m.label(), values.len() * values.len());
            }
            soundness(grid.soundness_violations, "grid")
        }
        Command::Compare {
            common,
            pfd_design,
            k_max,
            values,
        } => {
            common.init_threads();
            let s = common.scenario("afd-g1")?;
            let values = values.unwrap_or_else(presets::comparison_grid_values);
            let cmp = run_afd_vs_pfd(&s, design(&pfd_design)?, &values, k_max)?;
            emit_comparison(&common.out, &s, &cmp, common.format)?;
            println!(
                "afd isolation {}; pfd_faster {} equal {} pfd_slower {} pfd_fails {}; afd faster or equal in {:.1}% of cells",
                cmp.afd_summary.isolation_step.map_or("-".into(), |k| k.to_string()),
                cmp.counts[0],
                cmp.counts[1],
                cmp.counts[2],
                cmp.counts[3],
                100.0 * cmp.afd_faster_or_equal()
            );
            soundness(cmp.soundness_violations, "compare")
        }
        Command::Preset { name: None } => {
            for n in presets::NAMES {
                println!("{n}");
            }
            Ok(())
        }
        Command::Preset { name: Some(name) } => {
            let s = presets::by_name(&name)
                .ok_or_else(|| Error::Scenario(format!("unknown preset {name:?}")))?;
            println!("{}", s.to_json());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
