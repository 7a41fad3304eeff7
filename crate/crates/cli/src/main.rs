use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use multijet_cli::report::{EXIT_INPUT, SCHEMA_VERSION};
use multijet_cli::{run, Command, Report, Settings};
use multijet_core::lagrangian::{PivotPolicy, SingularMode};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Pivot {
    Diag,
    DiagLast,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sopde,
    TwoStep,
}

/// Integrability, Euler-Lagrange and Noether computations on jet bundles.
#[derive(Debug, Parser)]
#[command(name = "multijet", version)]
struct Args {
    command: Command,
    /// Problem files; `-` reads standard input.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Output::Json)]
    output: Output,
    /// Seed for randomized zero tests.
    #[arg(long)]
    seed: Option<u64>,
    /// Depth bound of the constraint algorithms.
    #[arg(long, default_value_t = 10)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = Pivot::Diag)]
    pivot: Pivot,
    #[arg(long, value_enum, default_value_t = Mode::Sopde)]
    mode: Mode,
    /// Overrides the residual and commutation tolerances.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Worker threads for batch runs.
    #[arg(long)]
    jobs: Option<usize>,
    /// Numeric section written by `integrate` or read by `residual`.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Build the current even when the symmetry defect does not vanish.
    #[arg(long)]
    acknowledge_defect: bool,
}

fn load(command: Command, path: &PathBuf, settings: &Settings) -> Report {
    let name = path.display().to_string();
    let text = if name == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map(|_| s)
    } else {
        std::fs::read_to_string(path)
    };
    match text {
        Ok(t) => run(command, &name, &t, settings),
        Err(e) => Report::input_failure(command.to_string(), name, settings.echo(), e.to_string()),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    let settings = Settings {
        seed: args.seed,
        depth: args.depth,
        pivot: match args.pivot {
            Pivot::Diag => PivotPolicy::Diag,
            Pivot::DiagLast => PivotPolicy::DiagLast,
            Pivot::Auto => PivotPolicy::Auto,
        },
        mode: match args.mode {
            Mode::Sopde => SingularMode::Sopde,
            Mode::TwoStep => SingularMode::TwoStep,
        },
        tolerance: args.tolerance,
        csv: args.csv.clone(),
        acknowledge_defect: args.acknowledge_defect,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .expect("thread pool");
    let reports: Vec<Report> = pool.install(|| {
        args.files
            .par_iter()
            .map(|f| load(args.command, f, &settings))
            .collect()
    });
    let text = match args.output {
        Output::Json => {
            let json = if reports.len() == 1 {
                serde_json::to_string_pretty(&reports[0])
            } else {
                serde_json::to_string_pretty(&reports)
            };
            json.expect("reports serialize") + "\n"
        }
        Output::Text => reports.iter().map(Report::render_text).collect::<Vec<_>>().join("\n"),
    };
    // A closed pipe on stdout is not an error of the computation.
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    debug_assert!(reports.iter().all(|r| r.schema_version == SCHEMA_VERSION));
    let code = if reports.iter().any(|r| r.exit_code == EXIT_INPUT) {
        EXIT_INPUT
    } else {
        reports.iter().map(|r| r.exit_code).max().unwrap_or(0)
    };
    ExitCode::from(code as u8)
}
