use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pdhg_cli::commands::{self, AnalyzeOptions, CliError, SolveOptions};
use pdhg_cli::io::{self, SolveReport, TimedTrace};
use pdhg_core::pdhg::NoTrace;
use pdhg_core::GeneralFormLp;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "pdhg", version, about = "Solve or classify linear programs with PDHG")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run PDHG and report optimal or a certified infeasibility.
    Solve {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunArgs,
        /// Write one CSV line per candidate check.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
    /// Identify the infimal displacement and fit the convergence rates.
    Analyze {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 0.9)]
        step_factor: f64,
        /// Iterations used to locate the ray before refinement.
        #[arg(long, default_value_t = 20_000, value_parser = count)]
        warm_iters: u64,
        /// Last iteration of the rate-fitting run.
        #[arg(long, default_value_t = 100_000, value_parser = count)]
        horizon: u64,
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
    /// Decide the feasibility cell in exact arithmetic (tiny instances only).
    Oracle {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
    /// Print a built-in instance as native JSON.
    Demo {
        /// One of: ex1, ex1_feasible, ex1_both_infeasible, ex1_primal_infeasible,
        /// ex1_dual_infeasible, transport_shortfall, unbounded_ray, degenerate_tie.
        name: String,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        beta: f64,
    },
}

#[derive(Args)]
struct Input {
    /// MPS file or native JSON instance.
    #[arg(required_unless_present = "demo", conflicts_with = "demo")]
    path: Option<PathBuf>,
    /// Use a built-in instance instead of a file.
    #[arg(long)]
    demo: Option<String>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    beta: f64,
}

impl Input {
    fn load(&self) -> Result<GeneralFormLp, CliError> {
        match (&self.path, &self.demo) {
            (Some(path), _) => commands::load(path),
            (None, Some(name)) => commands::demo(name, self.alpha, self.beta),
            (None, None) => unreachable!("clap requires one input"),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "1e6", value_parser = count)]
    max_iters: u64,
    /// Tolerance of both infeasibility tests.
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    #[arg(long, default_value_t = 1e-8)]
    kkt_tol: f64,
    #[arg(long, default_value_t = 0.9)]
    step_factor: f64,
    #[arg(long, default_value_t = 40, value_parser = count)]
    check_interval: u64,
    /// Reserved; the method is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

/// Accepts `1000000` as well as `1e6`.
fn count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 => Ok(v as u64),
        _ => Err(format!("`{s}` is not a nonnegative integer")),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let file = File::create(path).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(Failure::Cli(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(Failure::Output(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

enum Failure {
    Cli(CliError),
    Output(String),
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        Failure::Cli(e)
    }
}

fn execute(command: Command) -> Result<i32, Failure> {
    match command {
        Command::Solve { input, run, trace_out, json_out } => {
            let lp = input.load()?;
            let opts = SolveOptions {
                max_iters: run.max_iters,
                eps: run.eps,
                kkt_tol: run.kkt_tol,
                step_factor: run.step_factor,
                check_interval: run.check_interval,
            };
            let mut trace = TimedTrace::new();
            let (out, steps) = match trace_out {
                Some(_) => commands::solve(&lp, &opts, &mut trace)?,
                None => commands::solve(&lp, &opts, &mut NoTrace)?,
            };
            println!("{}", out.status.name());
            eprintln!("iterations {} kkt {:e} objective {}", out.iterations, out.kkt, out.primal_objective);
            if let Some(path) = trace_out {
                let file = File::create(&path)
                    .map_err(|e| Failure::Output(format!("cannot write {}: {e}", path.display())))?;
                io::write_trace(&trace.rows, BufWriter::new(file)).map_err(|e| Failure::Output(e.to_string()))?;
            }
            if let Some(path) = json_out {
                write_json(&path, &SolveReport::new(&out, steps)).map_err(Failure::Output)?;
            }
            Ok(commands::status_exit_code(out.status))
        }
        Command::Analyze { input, step_factor, warm_iters, horizon, json_out } => {
            let lp = input.load()?;
            let opts = AnalyzeOptions { step_factor, warm_iters, horizon, ..AnalyzeOptions::default() };
            let report = commands::analyze(&lp, &opts)?;
            println!("freeze {} (observed: {})", report.freeze_k, report.freeze_observed);
            println!("|v_x| {:e} |v_y| {:e}", report.v_x_norm, report.v_y_norm);
            match (&report.spectral.skipped, report.spectral.mu) {
                (Some(why), _) => println!("spectral skipped: {why}"),
                (None, Some(mu)) => println!("mu {mu}"),
                _ => {}
            }
            println!("farkas residuals {:e} {:e}", report.farkas_x, report.farkas_y);
            if let Some(path) = json_out {
                write_json(&path, &report).map_err(Failure::Output)?;
            } else {
                println!("{}", serde_json::to_string_pretty(&report).expect("plain data serializes"));
            }
            Ok(0)
        }
        Command::Oracle { input, json_out } => {
            let lp = input.load()?;
            let report = commands::oracle(&lp)?;
            println!("{}", report.class);
            if let Some(v) = &report.optimal_value {
                println!("optimal value {v}");
            }
            if let Some(path) = json_out {
                write_json(&path, &report).map_err(Failure::Output)?;
            }
            Ok(0)
        }
        Command::Demo { name, alpha, beta } => {
            let lp = commands::demo(&name, alpha, beta)?;
            println!("{}", io::write_instance(&lp));
            Ok(0)
        }
    }
}
