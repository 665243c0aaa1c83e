use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use provisim::harness::{
    list_presets, parse_config, preset, run_experiment, run_preset, run_sweep, verify,
    ConfigError, ExperimentConfig, HarnessError, SweepSpec,
};
use provisim::policy::AdmissionKind;
use provisim::sim::{run_simulation_with, RunOptions, TRACE_HEADER};

#[derive(Parser)]
#[command(name = "provisim", version, about = "Simulate SLA-driven admission and allocation policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the replications of one configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a configuration over a list of values of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted path, e.g. `classes[4].delta`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        /// Policies to compare; defaults to the configured one.
        #[arg(long, value_delimiter = ',')]
        policies: Vec<AdmissionKind>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a built-in experiment (`preset list` prints the catalog).
    Preset {
        name: String,
        /// Required unless listing or printing.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the preset's configuration instead of running it.
        #[arg(long)]
        print: bool,
    },
    /// Recompute the aggregates of a result directory from its per-run files.
    Verify { dir: PathBuf },
    /// Dump every simulation event as tab-separated text.
    Trace {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Invalid {
        field: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let cfg = parse_config(&text)?;
    for note in cfg.advisories() {
        eprintln!("note: {note}");
    }
    Ok(cfg)
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run { config, seed, out } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.run.seed = s;
            }
            let result = run_experiment(&cfg, &out)?;
            let a = &result.aggregate;
            println!(
                "{}: revenue {:.4}/s [{:.4}, {:.4}], rejected {:.1}%, violated {:.1}% -> {}",
                a.policy,
                a.revenue_mean,
                a.ci_low,
                a.ci_high,
                100.0 * a.reject_frac,
                100.0 * a.violation_frac,
                out.display()
            );
        }
        Command::Sweep {
            config,
            param,
            values,
            policies,
            out,
        } => {
            let cfg = load(&config)?;
            let policies = if policies.is_empty() {
                vec![cfg.policy.admission]
            } else {
                policies
            };
            let sweep = SweepSpec {
                param,
                values,
                policies,
            };
            let result = run_sweep(&cfg, &sweep, &out)?;
            println!("{} points -> {}", result.points.len(), out.join("sweep.csv").display());
        }
        Command::Preset { name, out, print } => {
            if name == "list" {
                for p in list_presets() {
                    println!("{:<14} {}", p.name, p.description);
                }
                return Ok(());
            }
            let p = preset(&name).ok_or(HarnessError::UnknownPreset(name))?;
            if print {
                print!("{}", p.config.to_text());
                return Ok(());
            }
            let out = out.ok_or_else(|| ConfigError::Missing("--out".into()))?;
            for file in run_preset(&p, &out)? {
                println!("{}", file.display());
            }
            println!("{} -> {}", p.name, out.display());
        }
        Command::Verify { dir } => {
            let report = verify(&dir)?;
            for problem in &report.problems {
                eprintln!("{problem}");
            }
            if !report.ok() {
                return Err(HarnessError::Invariant(format!(
                    "{} problems in {}",
                    report.problems.len(),
                    dir.display()
                )));
            }
            println!(
                "ok: {} experiments, {} runs recomputed",
                report.experiments, report.runs
            );
        }
        Command::Trace { config, seed } => {
            let cfg = load(&config)?;
            let seed = seed.unwrap_or(cfg.run.seed);
            let options = RunOptions {
                trace: true,
                ..RunOptions::default()
            };
            let run = run_simulation_with(&cfg, seed, options)?;
            use std::io::Write;
            let stdout = std::io::stdout();
            let mut w = std::io::BufWriter::new(stdout.lock());
            let io = |e| HarnessError::Io {
                path: "<stdout>".into(),
                source: e,
            };
            writeln!(w, "{TRACE_HEADER}").map_err(io)?;
            for rec in &run.trace {
                writeln!(w, "{rec}").map_err(io)?;
            }
            w.flush().map_err(io)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
