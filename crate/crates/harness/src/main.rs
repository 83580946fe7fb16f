use clap::{Parser, Subcommand};
use mcfl_harness::config::{load_config, ConfigError};
use mcfl_harness::experiment::run_experiment;
use mcfl_harness::pareto::{check_sweep, pareto_sweep, write_pareto};
use mcfl_harness::plot::{emit_plot_data, PlotError, PlotKind};
use mcfl_harness::selftest::{library_normalizer, run_selftest, SelftestSizes};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mcfl", version, about = "Multi-cell over-the-air federated learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scheme of a config over all repetitions and write CSV metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sweep the profiling vector and write boundary and baseline gap tuples.
    Pareto {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the oracle suite.
    Selftest {
        /// Smaller instance counts.
        #[arg(long)]
        quick: bool,
    },
    /// Turn a metrics or sweep CSV into tab-separated plot series.
    Emit {
        /// loss_vs_round, acc_vs_round, pareto_region or avg_multicell.
        #[arg(long)]
        kind: String,
        #[arg(long = "in")]
        input: PathBuf,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated scheme names to keep.
        #[arg(long, value_delimiter = ',')]
        schemes: Option<Vec<String>>,
    },
}

const VALIDATION: u8 = 2;
const RUNTIME: u8 = 3;

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn config_or_exit(path: &Path) -> Result<mcfl_harness::config::ExperimentConfig, ExitCode> {
    load_config(path).map_err(|e| match e {
        ConfigError::Read { .. } => fail(RUNTIME, e),
        _ => fail(VALIDATION, e),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = match config_or_exit(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            match run_experiment(&cfg, &out) {
                Ok(summary) => {
                    for f in summary.files {
                        println!("wrote {}", f.display());
                    }
                    let violations = summary.output.bounds.iter().filter(|b| !b.holds()).count();
                    if violations > 0 {
                        eprintln!("warning: {violations} convergence-bound violations");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(RUNTIME, e),
            }
        }
        Command::Pareto { config, out } => {
            let cfg = match config_or_exit(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let points = match pareto_sweep(&cfg) {
                Ok(p) => p,
                Err(e) => return fail(RUNTIME, e),
            };
            let path = out.join("pareto.csv");
            let mut buf = Vec::new();
            if let Err(e) = std::fs::create_dir_all(&out)
                .map_err(|e| e.to_string())
                .and_then(|_| write_pareto(&mut buf, &points).map_err(|e| e.to_string()))
                .and_then(|_| std::fs::write(&path, &buf).map_err(|e| e.to_string()))
            {
                return fail(RUNTIME, format!("writing {}: {e}", path.display()));
            }
            println!("wrote {}", path.display());
            let check = check_sweep(&points, 1e-9);
            if !check.passed() {
                eprintln!("warning: sweep check failed: {check:?}");
            }
            ExitCode::SUCCESS
        }
        Command::Selftest { quick } => {
            let sizes = if quick { SelftestSizes::QUICK } else { SelftestSizes::FULL };
            let report = run_selftest(sizes, library_normalizer);
            println!("{report}");
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(RUNTIME)
            }
        }
        Command::Emit {
            kind,
            input,
            out,
            schemes,
        } => {
            let kind: PlotKind = match kind.parse() {
                Ok(k) => k,
                Err(e) => return fail(1, e),
            };
            let text = match std::fs::read_to_string(&input) {
                Ok(t) => t,
                Err(e) => return fail(RUNTIME, format!("reading {}: {e}", input.display())),
            };
            let tsv = match emit_plot_data(kind, &text, schemes.as_deref()) {
                Ok(t) => t,
                Err(e @ PlotError::Input(_)) => return fail(VALIDATION, e),
                Err(e) => return fail(1, e),
            };
            match out {
                Some(p) => match std::fs::write(&p, tsv) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(RUNTIME, format!("writing {}: {e}", p.display())),
                },
                None => {
                    print!("{tsv}");
                    ExitCode::SUCCESS
                }
            }
        }
    }
}
