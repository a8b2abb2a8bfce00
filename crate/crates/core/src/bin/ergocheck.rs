use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ergocheck::oracle::write_csv;
use ergocheck::report::{load_witness, render_report, run, AnalyzeOptions, Format, OracleMode, ReportError};

/// Static ergodicity verifier for stochastic mass-action reaction networks.
#[derive(Parser)]
#[command(name = "ergocheck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a network file and print a verdict with certificates.
    Analyze(AnalyzeArgs),
    /// Check a supplied Lyapunov witness instead of solving for one.
    Verify {
        #[command(flatten)]
        args: AnalyzeArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Human,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Ssa,
    Cme,
    Off,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Network file.
    file: PathBuf,
    /// One total per detected conservation relation, in detection order.
    #[arg(long, value_delimiter = ',')]
    conserved_totals: Option<Vec<u64>>,
    #[arg(long, value_enum, default_value = "human")]
    format: FormatArg,
    /// JSON witness vector (original species order) to verify.
    #[arg(long)]
    witness: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "off")]
    oracle: OracleArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Simulation end time for the ssa oracle.
    #[arg(long, default_value_t = 1000.0)]
    t_end: f64,
    /// Omit stage timings so output is byte-reproducible.
    #[arg(long)]
    no_timings: bool,
    /// Write the simulated trajectory as CSV (ssa oracle).
    #[arg(long)]
    trajectory_csv: Option<PathBuf>,
    /// Write the stationary estimate as JSON (cme oracle).
    #[arg(long)]
    stationary_json: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors share the input-error code
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let (args, require_witness) = match cli.command {
        Command::Analyze(a) => (a, false),
        Command::Verify { args } => (args, true),
    };
    match execute(&args, require_witness) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &AnalyzeArgs, require_witness: bool) -> Result<i32, ReportError> {
    let opts = AnalyzeOptions {
        totals: args.conserved_totals.clone(),
        timings: !args.no_timings,
        oracle: match args.oracle {
            OracleArg::Ssa => OracleMode::Ssa,
            OracleArg::Cme => OracleMode::Cme,
            OracleArg::Off => OracleMode::Off,
        },
        seed: args.seed,
        t_end: args.t_end,
        ..AnalyzeOptions::default()
    }
    .with_env()?;
    let witness = match &args.witness {
        Some(p) => Some(load_witness(p)?),
        None if require_witness => return Err(ReportError::WitnessFormat("verify needs --witness".into())),
        None => None,
    };
    let text = std::fs::read_to_string(&args.file)
        .map_err(|e| ReportError::Io { path: args.file.display().to_string(), message: e.to_string() })?;
    let analysis = run(&text, witness.as_deref(), &opts)?;

    if let (Some(path), Some(traj)) = (&args.trajectory_csv, &analysis.trajectory) {
        let out = create(path)?;
        write_csv(traj, &analysis.report.network.species, out).map_err(|e| io_error(path, e))?;
    }
    if let (Some(path), Some(est)) = (&args.stationary_json, &analysis.stationary) {
        let mut out = create(path)?;
        serde_json::to_writer_pretty(&mut out, est).map_err(|e| io_error(path, e.into()))?;
        writeln!(out).map_err(|e| io_error(path, e))?;
    }
    let format = match args.format {
        FormatArg::Human => Format::Human,
        FormatArg::Json => Format::Json,
    };
    print!("{}", render_report(&analysis.report, format));
    Ok(analysis.report.exit_code())
}

fn create(path: &Path) -> Result<BufWriter<File>, ReportError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, e: std::io::Error) -> ReportError {
    ReportError::Io { path: path.display().to_string(), message: e.to_string() }
}
