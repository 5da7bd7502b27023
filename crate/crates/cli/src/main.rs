use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sihg_cli::check::{run_check, CheckKind};
use sihg_cli::config::Experiment;
use sihg_cli::presets::{find, PRESETS};
use sihg_cli::run::{at_eval, run_experiment, RunOptions};
use sihg_cli::{CliError, Result, EXIT_ERROR, EXIT_OK, OUTPUT_DIR_ENV};

/// Semi-implicit hybrid gradient solvers: experiment runner and diagnostics.
///
/// Exit codes: 0 success, 1 config or solver error, 2 a check failed.
#[derive(Parser)]
#[command(name = "sihg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments given as config files or preset names. Several
    /// targets run concurrently, one worker each.
    Run {
        /// Config file paths or preset names.
        #[arg(required = true)]
        targets: Vec<String>,
        #[command(flatten)]
        out: OutputArgs,
        /// Skip the SVG residual plot.
        #[arg(long)]
        no_plot: bool,
    },
    /// Check a solver experiment; exits 2 when the check fails.
    Check {
        #[arg(value_enum)]
        kind: CheckArg,
        /// Config file path or preset name.
        target: String,
        /// Print only the JSON report.
        #[arg(long)]
        json: bool,
    },
    /// List the built-in presets.
    ListPresets,
    /// Print a preset as a config file.
    ShowPreset { name: String },
    /// Train the methods of a training experiment and save their parameters.
    AtTrain {
        /// Config file path or preset name.
        target: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Evaluate saved parameters on a training experiment's held-out set.
    AtEval {
        /// Parameter file written by `at-train`.
        model: PathBuf,
        /// Config file path or preset name supplying data and attack.
        target: String,
        /// Print only the JSON report.
        #[arg(long)]
        json: bool,
    },
}

#[derive(clap::Args)]
struct OutputArgs {
    /// Output directory; overrides the config's `output.dir`.
    #[arg(long, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
    /// Write elapsed_ns as 0 so traces are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Admissibility,
    Mvi,
    Identities,
}

impl From<CheckArg> for CheckKind {
    fn from(c: CheckArg) -> Self {
        match c {
            CheckArg::Admissibility => CheckKind::Admissibility,
            CheckArg::Mvi => CheckKind::Mvi,
            CheckArg::Identities => CheckKind::Identities,
        }
    }
}

/// A path that exists wins over a preset of the same name.
fn load_target(target: &str) -> Result<Experiment> {
    let path = Path::new(target);
    if path.exists() {
        return Experiment::load(path);
    }
    match find(target) {
        Some(p) => Ok(p.experiment()),
        None => Err(CliError::Config(format!(
            "'{target}' is neither a config file nor a preset (see `sihg list-presets`)"
        ))),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run_all(targets: &[String], opts: &RunOptions) -> Result<()> {
    let experiments = targets.iter().map(|t| load_target(t)).collect::<Result<Vec<_>>>()?;
    let outcomes: Vec<Result<_>> = std::thread::scope(|s| {
        let handles: Vec<_> = experiments
            .iter()
            .map(|e| s.spawn(move || run_experiment(e, opts)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Config("experiment worker panicked".into()))))
            .collect()
    });
    let mut first_error = None;
    for (target, outcome) in targets.iter().zip(outcomes) {
        match outcome {
            Ok(o) => {
                println!("[{}]", o.name);
                for line in &o.lines {
                    println!("  {line}");
                }
            }
            Err(e) => {
                eprintln!("[{target}] error: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    first_error.map_or(Ok(()), Err)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { targets, out, no_plot } => run_all(
            &targets,
            &RunOptions {
                output_dir: out.output_dir,
                no_timing: out.no_timing,
                no_plot,
            },
        ),
        Command::Check { kind, target, json } => {
            let outcome = run_check(kind.into(), &load_target(&target)?)?;
            if json {
                print_json(&outcome)?;
            } else {
                println!("check {} [{}]", outcome.check, outcome.experiment);
                for line in &outcome.lines {
                    println!("  {line}");
                }
                println!("{}", if outcome.passed { "PASS" } else { "FAIL" });
            }
            if outcome.passed {
                Ok(())
            } else {
                Err(CliError::CheckFailed(format!("{} on {}", outcome.check, outcome.experiment)))
            }
        }
        Command::ListPresets => {
            let width = PRESETS.iter().map(|p| p.name.len()).max().unwrap_or(0);
            for p in PRESETS {
                println!("{:width$}  {}", p.name, p.description);
            }
            Ok(())
        }
        Command::ShowPreset { name } => {
            let preset = find(&name).ok_or_else(|| CliError::Config(format!("unknown preset '{name}'")))?;
            print!("{}", preset.experiment().to_toml()?);
            Ok(())
        }
        Command::AtTrain { target, out } => {
            let experiment = load_target(&target)?;
            if !matches!(experiment, Experiment::Training(_)) {
                return Err(CliError::Config("at-train needs a training experiment".into()));
            }
            let outcome = run_experiment(
                &experiment,
                &RunOptions {
                    output_dir: out.output_dir,
                    no_timing: out.no_timing,
                    no_plot: true,
                },
            )?;
            println!("[{}]", outcome.name);
            for line in &outcome.lines {
                println!("  {line}");
            }
            Ok(())
        }
        Command::AtEval { model, target, json } => {
            let outcome = at_eval(&model, &load_target(&target)?)?;
            if json {
                print_json(&outcome)?;
            } else {
                println!(
                    "{}: natural {:.4}, robust ({}, eps {}) {:.4}",
                    outcome.model.display(),
                    outcome.natural_acc,
                    outcome.attack,
                    outcome.eps,
                    outcome.robust_acc
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code().clamp(EXIT_ERROR, 255) as u8)
        }
    }
}
