//! `hyperlb`: analytic tables, oracle checks and simulation sweeps as CSV.
//!
//! Exit codes: 0 success, 1 usage, 2 configuration, 3 audit or
//! verification failure.

mod commands;
mod error;
mod presets;
mod spec;
mod table;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;
use spec::{
    parse_experiment, BoundSpec, Experiment, ExtensionSpec, Grid, Overrides, PmfSpec, SimSpec, VerifySpec,
};

#[derive(Debug, Parser)]
#[command(name = "hyperlb", version, about = "Hyper-scalable load balancing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Output {
    /// Write CSV here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimFlags {
    /// First seed; a seed count expands to seed, seed+1, ...
    #[arg(long)]
    seed: Option<u64>,
    /// Number of independent runs per sweep point.
    #[arg(long)]
    seeds: Option<u64>,
    /// Simulated time per run.
    #[arg(long)]
    horizon: Option<f64>,
    /// Fraction of the horizon discarded as warmup.
    #[arg(long)]
    warmup: Option<f64>,
}

impl SimFlags {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, seeds: self.seeds, horizon: self.horizon, warmup: self.warmup }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Throughput bound lambda*(delta, K).
    Bound {
        /// Message budgets, as start:stop:step or a comma list.
        #[arg(long)]
        delta: String,
        /// Queue limits, comma separated.
        #[arg(long, value_delimiter = ',')]
        k: Vec<usize>,
        /// delta*K products for integer-K curves, comma separated.
        #[arg(long, value_delimiter = ',')]
        product: Vec<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Stationary law of the number of open servers.
    Pmf {
        #[arg(long, value_delimiter = ',', required = true)]
        servers: Vec<usize>,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        out: Output,
    },
    /// One simulation point from an experiment file, with CIs over seeds.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        sim: SimFlags,
        #[command(flatten)]
        out: Output,
    },
    /// A simulation sweep from an experiment file.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        sim: SimFlags,
        #[command(flatten)]
        out: Output,
    },
    /// Product-form oracle suite; fails on any residual above 1e-8.
    Verify {
        /// Largest state space to enumerate.
        #[arg(long, default_value_t = 100_000)]
        cap: usize,
        /// Check this network (TOML) instead of the built-in suite.
        #[arg(long)]
        network: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Cool-down extension: lambda*, updates per job and jobs ahead.
    Extension {
        #[arg(long)]
        tau1: String,
        #[arg(long, conflicts_with = "tau_sum")]
        tau2: Option<String>,
        /// Sets tau2 = tau_sum - tau1 on each row.
        #[arg(long)]
        tau_sum: Option<f64>,
        #[arg(long)]
        tau3: String,
        #[command(flatten)]
        out: Output,
    },
    /// Runs a shipped experiment file.
    Reproduce {
        #[arg(required_unless_present = "list")]
        preset: Option<String>,
        /// List presets and exit.
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        sim: SimFlags,
        #[command(flatten)]
        out: Output,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn simulate(
    mut spec: SimSpec,
    single: bool,
    overrides: &Overrides,
    out: Option<&Path>,
) -> Result<(), CliError> {
    overrides.apply(&mut spec);
    let outcome = commands::simulate(&spec, single)?;
    outcome.table.emit(out)?;
    if outcome.audit_failures.is_empty() {
        Ok(())
    } else {
        for f in &outcome.audit_failures {
            eprintln!("audit: {f}");
        }
        Err(CliError::Audit(format!("{} sweep points failed audits", outcome.audit_failures.len())))
    }
}

fn run_experiment(exp: Experiment, overrides: &Overrides, out: Option<&Path>) -> Result<(), CliError> {
    match exp {
        Experiment::Simulate(s) => simulate(s, true, overrides, out),
        Experiment::Sweep(s) => simulate(s, false, overrides, out),
        other => {
            if !overrides.is_empty() {
                return Err(CliError::Usage(format!(
                    "--seed, --seeds, --horizon and --warmup only apply to simulations, not {}",
                    other.mode()
                )));
            }
            match other {
                Experiment::Bound(b) => commands::bound(&b)?.emit(out),
                Experiment::Pmf(p) => commands::pmf(&p)?.emit(out),
                Experiment::Extension(e) => commands::extension(&e)?.emit(out),
                Experiment::Verify(v) => {
                    let (table, report) = commands::verify(&v)?;
                    table.emit(out)?;
                    let max = report.max_deviation();
                    eprintln!(
                        "{} checks, max deviation {:e} (tolerance {:e})",
                        report.checks.len(),
                        max,
                        commands::VERIFY_TOLERANCE
                    );
                    if report.passed(commands::VERIFY_TOLERANCE) {
                        Ok(())
                    } else {
                        Err(CliError::Audit(format!(
                            "{} checks exceed the tolerance",
                            report.failures(commands::VERIFY_TOLERANCE).count()
                        )))
                    }
                }
                Experiment::Simulate(_) | Experiment::Sweep(_) => unreachable!(),
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Bound { delta, k, product, out } => {
            let spec = BoundSpec { delta: Grid::parse(&delta)?, k, products: product };
            commands::bound(&spec)?.emit(out.output.as_deref())
        }
        Command::Pmf { servers, lambda, tau, k, out } => {
            commands::pmf(&PmfSpec { servers, lambda, tau, k })?.emit(out.output.as_deref())
        }
        Command::Simulate { config, sim, out } => {
            let f = parse_experiment(&read(&config)?, Some("simulate"))?;
            run_experiment(f.experiment, &sim.overrides(), out.output.as_deref())
        }
        Command::Sweep { config, sim, out } => {
            let f = parse_experiment(&read(&config)?, Some("sweep"))?;
            run_experiment(f.experiment, &sim.overrides(), out.output.as_deref())
        }
        Command::Verify { cap, network, out } => {
            let network = match network {
                Some(p) => Some(toml::from_str(&read(&p)?).map_err(|e| CliError::Config(e.to_string()))?),
                None => None,
            };
            run_experiment(
                Experiment::Verify(VerifySpec { cap, network }),
                &Overrides::default(),
                out.output.as_deref(),
            )
        }
        Command::Extension { tau1, tau2, tau_sum, tau3, out } => {
            let spec = ExtensionSpec {
                tau1: Grid::parse(&tau1)?,
                tau2: tau2.as_deref().map(Grid::parse).transpose()?,
                tau_sum,
                tau3: Grid::parse(&tau3)?,
            };
            commands::extension(&spec)?.emit(out.output.as_deref())
        }
        Command::Reproduce { preset, list, sim, out } => {
            if list {
                for (name, text) in presets::PRESETS {
                    let f = parse_experiment(text, None)?;
                    println!("{name:<26} {}", f.description.unwrap_or_default());
                }
                return Ok(());
            }
            let name = preset.expect("clap requires a preset without --list");
            let text = presets::find(&name).ok_or_else(|| {
                CliError::Usage(format!("unknown preset {name:?}; see `hyperlb reproduce --list`"))
            })?;
            let f = parse_experiment(text, None)?;
            run_experiment(f.experiment, &sim.overrides(), out.output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
