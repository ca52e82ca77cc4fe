use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dlms::claims::{self, Claim};
use dlms::ensemble::Simulation;
use dlms::error::Error;
use dlms::metrics::{MetricsReport, DEFAULT_WINDOW_FRACTION};
use dlms::output;
use dlms::scenario::{self, Scenario};

/// Caps the number of worker threads used for ensemble runs.
#[cfg(feature = "parallel")]
const THREADS_ENV: &str = "DLMS_THREADS";

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "dlms", version, about = "Diffusion LMS network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trajectory and metrics CSV files
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Trajectory CSV; metrics go to <stem>.metrics.csv alongside
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check one of the cooperative-behaviour claims on a scenario
    Verify {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// merge, speedup, crossing, delay or stabilize
        claim: String,
    },
    /// List built-in scenarios
    List,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Built-in scenario name or path to a config file
    scenario: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    ensemble: Option<usize>,
    /// Target parameter vector, comma-separated
    #[arg(long = "w-opt")]
    w_opt: Option<String>,
    /// Override as key=value, e.g. a.mu=0.3 or trust.a.b=0.2
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<(String, Scenario), Error> {
        let (name, mut s) = if scenario::BUILTINS.iter().any(|(n, _)| *n == self.scenario) {
            (self.scenario.clone(), scenario::builtin(&self.scenario)?)
        } else {
            let text = std::fs::read_to_string(&self.scenario).map_err(|e| {
                Error::Config(format!("cannot read scenario file {}: {e}", self.scenario))
            })?;
            let s = scenario::parse(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", self.scenario)))?;
            (self.scenario.clone(), s)
        };
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.iterations {
            s.iterations = v;
        }
        if let Some(v) = self.ensemble {
            s.ensemble = v;
        }
        if let Some(v) = &self.w_opt {
            s.apply_override("w_opt", v)?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            s.apply_override(k, v)?;
        }
        s.validate()?;
        Ok((name, s))
    }
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(if err.is_divergence() {
        EXIT_DIVERGENCE
    } else {
        EXIT_USAGE
    })
}

fn default_out(name: &str) -> PathBuf {
    let stem = std::path::Path::new(name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trajectory".into());
    PathBuf::from(format!("{stem}.csv"))
}

fn cmd_run(args: &ScenarioArgs, out: Option<PathBuf>) -> Result<ExitCode, Error> {
    let (name, s) = args.load()?;
    let out = out.unwrap_or_else(|| default_out(&name));
    let sim = Simulation::new(&s)?;
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (r, res) in sim.run_each().into_iter().enumerate() {
        match res {
            Ok(rec) => records.push(rec),
            Err(e) => errors.push((r, e)),
        }
    }
    output::write_file(&out, |w| output::write_trajectory(w, &records))?;
    if !records.is_empty() {
        let report =
            MetricsReport::compute(&records, claims::scenario_band(&s), DEFAULT_WINDOW_FRACTION)?;
        output::write_file(&output::metrics_path(&out), |w| {
            output::write_metrics(w, &report)
        })?;
    }
    if let Some((_, first)) = errors.first() {
        let manifest = output::errors_path(&out);
        output::write_file(&manifest, |w| output::write_errors(w, &errors))?;
        eprintln!(
            "error: {} of {} runs diverged (first: {first}); manifest in {}",
            errors.len(),
            s.ensemble,
            manifest.display()
        );
        return Ok(ExitCode::from(EXIT_DIVERGENCE));
    }
    println!(
        "wrote {} runs × {} iterations to {} and {}",
        records.len(),
        s.iterations,
        out.display(),
        output::metrics_path(&out).display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &ScenarioArgs, claim: &str) -> Result<ExitCode, Error> {
    let claim: Claim = claim.parse()?;
    let (_, s) = args.load()?;
    let outcome = claims::evaluate(claim, &s)?;
    println!("{outcome}");
    Ok(if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    })
}

fn cmd_list() -> ExitCode {
    for (name, description) in scenario::BUILTINS {
        println!("{name:<10} {description}");
    }
    ExitCode::SUCCESS
}

fn init_threads() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let result = match &cli.command {
        Command::Run { scenario, out } => cmd_run(scenario, out.clone()),
        Command::Verify { scenario, claim } => cmd_verify(scenario, claim),
        Command::List => Ok(cmd_list()),
    };
    result.unwrap_or_else(|e| exit_for(&e))
}
