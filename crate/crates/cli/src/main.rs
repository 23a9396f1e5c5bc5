use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maslov_core::io::{self, RunConfig, ScanSummary};
use maslov_core::selftest::{format_table, run_selftest, SelftestOptions};
use maslov_core::MaslovError;

#[derive(Parser)]
#[command(name = "maslov", version, about = "Maslov indices of Lagrangian paths under conformally symplectic flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Index CSV along one trajectory.
    Index(RunArgs),
    /// Asymptotic index estimate as JSON.
    Asymptotic(RunArgs),
    /// Zero-section scan: CSV plus a JSON summary.
    Scan(RunArgs),
    /// Twist certificate as JSON.
    Twist(RunArgs),
    /// Run the invariant suite.
    Selftest {
        /// Flip the crossing sign convention (mutation check).
        #[arg(long, hide = true)]
        flip_crossing_sign: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Override a config entry, e.g. `--set time.dt=1e-3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

enum Failure {
    Selftest,
    Run(MaslovError),
}

impl From<MaslovError> for Failure {
    fn from(e: MaslovError) -> Self {
        Failure::Run(e)
    }
}

fn write(path: &Path, text: &str) -> Result<(), MaslovError> {
    std::fs::write(path, text).map_err(|e| MaslovError::Io(format!("{}: {e}", path.display())))
}

fn load(args: &RunArgs) -> Result<RunConfig, MaslovError> {
    RunConfig::load(&args.config, &args.set)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Index(args) => {
            let cfg = load(&args)?;
            let out = cfg.output_path()?;
            let csv = io::index_csv(&cfg)?;
            write(out, &csv)?;
        }
        Command::Asymptotic(args) => {
            let cfg = load(&args)?;
            let out = cfg.output_path()?;
            let est = io::asymptotic_report(&cfg)?;
            write(out, &io::to_json_string(&est)?)?;
        }
        Command::Scan(args) => {
            let cfg = load(&args)?;
            let out = cfg.output_path()?;
            let result = io::scan_run(&cfg)?;
            let summary = io::to_json_string(&ScanSummary::from_result(&result))?;
            write(out, &io::scan_csv(&result))?;
            write(&io::summary_path(out), &summary)?;
            print!("{summary}");
        }
        Command::Twist(args) => {
            let cfg = load(&args)?;
            let out = cfg.output_path()?;
            let cert = io::twist_report(&cfg)?;
            write(out, &io::to_json_string(&cert)?)?;
        }
        Command::Selftest { flip_crossing_sign } => {
            let mut opts = SelftestOptions::default();
            if flip_crossing_sign {
                opts.crossing_orientation = -opts.crossing_orientation;
            }
            let outcomes = run_selftest(&opts);
            print!("{}", format_table(&outcomes));
            if outcomes.iter().any(|o| !o.passed) {
                return Err(Failure::Selftest);
            }
        }
    }
    Ok(())
}

fn init_threads() -> Result<(), MaslovError> {
    let Ok(raw) = std::env::var("MASLOV_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| MaslovError::Config(format!("MASLOV_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| MaslovError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().map_err(Failure::Run).and_then(|_| run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Selftest) => ExitCode::from(1),
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            if e.is_config() || matches!(e, MaslovError::Io(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
