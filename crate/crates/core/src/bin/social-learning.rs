use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use social_learning::bounds::{BoundError, BoundReport};
use social_learning::io::results::{to_json, BOUNDS_FILE, PLOT_FILE, TRAJECTORY_FILE};
use social_learning::io::{
    emit_plot_data, parse_config, parse_trajectory_csv, plot_csv, write_atomic, write_results, Experiment, IoError,
    Manifest,
};
use social_learning::sim::{monte_carlo_validate, run_all, SimError};

/// Distributed non-Bayesian learning: simulate update rules, compute the
/// theorem constants and validate the concentration bounds.
#[derive(Parser)]
#[command(name = "social-learning", version)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Log beliefs every N steps.
    #[arg(long, global = true)]
    stride: Option<usize>,
    #[arg(long, global = true)]
    quiet: bool,
    /// Proceed even if assumption checks fail.
    #[arg(long, global = true)]
    waive: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Check model, weights and connectivity assumptions.
    Validate,
    /// Print the theorem constants without simulating.
    Bounds,
    /// Run the experiment and write its trajectory.
    Run,
    /// Run every replicate and count bound violations.
    Montecarlo,
    /// Build plot tables from an existing result directory.
    Plotdata,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Bounds => "bounds",
            Command::Run => "run",
            Command::Montecarlo => "montecarlo",
            Command::Plotdata => "plotdata",
        }
    }
}

const CONFIG_ERROR: u8 = 2;
const ASSUMPTION_ERROR: u8 = 3;
const NUMERICAL_ERROR: u8 = 4;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::new(CONFIG_ERROR, e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Step { .. } => Failure::new(NUMERICAL_ERROR, e.to_string()),
            SimError::Bound(b) => b.into(),
            SimError::Config(_) => Failure::new(CONFIG_ERROR, e.to_string()),
        }
    }
}

impl From<BoundError> for Failure {
    fn from(e: BoundError) -> Self {
        let code = match e {
            BoundError::InvalidParameter(_) | BoundError::UpperBoundTooSmall { .. } => CONFIG_ERROR,
            BoundError::Overflow(_) | BoundError::Graph(_) => NUMERICAL_ERROR,
            _ => ASSUMPTION_ERROR,
        };
        Failure::new(code, e.to_string())
    }
}

struct Loaded {
    bytes: Vec<u8>,
    exp: Experiment,
    waivers: Vec<String>,
}

fn load(cli: &Cli) -> Result<Loaded, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::new(CONFIG_ERROR, "--config is required"))?;
    let bytes = std::fs::read(path).map_err(|e| Failure::new(CONFIG_ERROR, format!("{}: {e}", path.display())))?;
    let text =
        std::str::from_utf8(&bytes).map_err(|e| Failure::new(CONFIG_ERROR, format!("{}: {e}", path.display())))?;
    let mut doc = parse_config(text)?;
    if let Some(s) = cli.seed {
        doc.run.seed = Some(s);
    }
    if let Some(s) = cli.stride {
        doc.run.stride = Some(s);
    }
    if cli.waive {
        doc.run.waive = Some(true);
    }
    let waivers = doc.waivers();
    let exp = doc.build()?;
    Ok(Loaded { bytes, exp, waivers })
}

fn out_dir(cli: &Cli, exp: Option<&Experiment>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| exp.and_then(|e| e.doc.output.dir.clone()).map(PathBuf::from))
        .or_else(|| std::env::var_os("SOCIAL_LEARNING_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

/// Fails with code 3 unless the checks pass or are waived.
fn gate(loaded: &Loaded) -> Result<(), Failure> {
    let report = loaded.exp.check_assumptions();
    if report.passed || loaded.exp.doc.run.waive == Some(true) {
        return Ok(());
    }
    Err(Failure::new(
        ASSUMPTION_ERROR,
        format!(
            "assumption checks failed (use --waive to proceed):\n{}",
            to_json(&report)
        ),
    ))
}

fn bounds_of(exp: &Experiment) -> Result<BoundReport, Failure> {
    match exp.bounds() {
        None => Err(Failure::new(
            ASSUMPTION_ERROR,
            format!("rule {} has no theorem bound", exp.sim.rule.name()),
        )),
        Some(r) => Ok(r?),
    }
}

fn manifest(cli: &Cli, loaded: &Loaded) -> Manifest {
    Manifest::new(
        cli.command.name(),
        &loaded.bytes,
        loaded.exp.sim.seed,
        loaded.exp.sim.replicates,
        loaded.waivers.clone(),
    )
}

fn say(cli: &Cli, text: &str) {
    if !cli.quiet {
        println!("{text}");
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate => {
            let loaded = load(cli)?;
            let report = loaded.exp.check_assumptions();
            say(cli, to_json(&report).trim_end());
            if !report.passed && loaded.exp.doc.run.waive != Some(true) {
                return Err(Failure::new(ASSUMPTION_ERROR, "assumption checks failed"));
            }
        }
        Command::Bounds => {
            let loaded = load(cli)?;
            let report = bounds_of(&loaded.exp)?;
            say(cli, to_json(&report).trim_end());
            if cli.out.is_some() {
                write_results(
                    &out_dir(cli, Some(&loaded.exp)),
                    None,
                    Some(&report),
                    None,
                    manifest(cli, &loaded),
                )?;
            }
        }
        Command::Run => {
            let loaded = load(cli)?;
            gate(&loaded)?;
            let logs = run_all(&loaded.exp.sim)?;
            let report = match loaded.exp.bounds() {
                Some(Ok(r)) => Some(r),
                Some(Err(e)) => {
                    eprintln!("warning: no bound report: {e}");
                    None
                }
                None => None,
            };
            let dir = out_dir(cli, Some(&loaded.exp));
            let bundle = write_results(&dir, Some(&logs), report.as_ref(), None, manifest(cli, &loaded))?;
            if let Some(first) = logs.first() {
                let b = first.final_beliefs();
                for i in 0..b.agents() {
                    let row: Vec<String> = b.row(i).iter().map(|p| format!("{p:.6}")).collect();
                    say(
                        cli,
                        &format!("agent {i} at k = {}: [{}]", first.horizon, row.join(", ")),
                    );
                }
            }
            say(cli, &format!("wrote {}", bundle.dir.display()));
        }
        Command::Montecarlo => {
            let loaded = load(cli)?;
            gate(&loaded)?;
            let report = bounds_of(&loaded.exp)?;
            let summary = monte_carlo_validate(&loaded.exp.sim, &report)?;
            let dir = out_dir(cli, Some(&loaded.exp));
            write_results(&dir, None, Some(&report), Some(&summary), manifest(cli, &loaded))?;
            say(cli, to_json(&summary).trim_end());
        }
        Command::Plotdata => {
            let dir = match &cli.config {
                Some(_) => out_dir(cli, Some(&load(cli)?.exp)),
                None => out_dir(cli, None),
            };
            plotdata(cli, &dir)?;
        }
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(CONFIG_ERROR, format!("{}: {e}", path.display())))
}

fn plotdata(cli: &Cli, dir: &Path) -> Result<(), Failure> {
    let rows = parse_trajectory_csv(&read(&dir.join(TRAJECTORY_FILE))?)?;
    let report: BoundReport = serde_json::from_str(&read(&dir.join(BOUNDS_FILE))?)
        .map_err(|e| Failure::new(CONFIG_ERROR, format!("{BOUNDS_FILE}: {e}")))?;
    let plot = emit_plot_data(&rows, &report);
    let path = write_atomic(dir, PLOT_FILE, plot_csv(&plot).as_bytes())?;
    say(cli, &format!("wrote {} ({} rows)", path.display(), plot.len()));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
