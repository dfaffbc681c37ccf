//! Command-line front end: configuration, experiment orchestration and
//! deterministic CSV/JSON output.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{
    cmd_evolve, cmd_overlap_scan, cmd_spectrum, reproduce, Figure, RunSummary, ASSERTIONS_FILE, MANIFEST_FILE,
    ROTATED_FILE, SCAN_FILE, SPECTRUM_FILE, UNROTATED_FILE,
};
use config::{parse_window, ExperimentConfig};
pub use error::CliError;
use error::{EXIT_CONFIG, EXIT_OK};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MPEMBA_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "mpemba-out";

#[derive(Debug, Parser)]
#[command(name = "mpemba", version, about = "Liouvillian spectra, optimal pre-rotations and relaxation trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full Liouvillian spectrum and relaxation summary.
    Spectrum(RunArgs),
    /// Slow-mode overlap of the rotated state along the rotation parameter.
    OverlapScan(RunArgs),
    /// Distance to the stationary state along the time grid.
    Evolve {
        /// Apply the optimal unitary to the initial state first.
        #[arg(long)]
        rotated: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Frozen reproduction bundle with acceptance assertions.
    Reproduce {
        #[arg(value_enum)]
        figure: FigureArg,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FigureArg {
    Fig2,
    Fig3,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Flat key = value configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Seed of the random initial state.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: config `out`, then $MPEMBA_OUT_DIR, then ./mpemba-out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Number of spins.
    #[arg(long)]
    n: Option<usize>,
    /// Largest |Im| of a real slow eigenvalue, relative to max |lambda|.
    #[arg(long, value_name = "TOL", allow_negative_numbers = true)]
    tol_imag: Option<f64>,
    /// Smallest separation of the two slowest rates, relative to max |lambda|.
    #[arg(long, value_name = "TOL", allow_negative_numbers = true)]
    tol_gap: Option<f64>,
    /// Fit window for the un-rotated trajectory.
    #[arg(long, value_name = "HI:LO")]
    fit_window: Option<String>,
    /// Fit window for the rotated trajectory.
    #[arg(long, value_name = "HI:LO")]
    fit_window_rotated: Option<String>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), CliError> {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(t) = self.tol_imag {
            cfg.tolerances.imag = t;
        }
        if let Some(t) = self.tol_gap {
            cfg.tolerances.gap = t;
        }
        if let Some(w) = &self.fit_window {
            cfg.fit_window = parse_window(w)?;
        }
        if let Some(w) = &self.fit_window_rotated {
            cfg.fit_window_rotated = parse_window(w)?;
        }
        cfg.validate()
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    match path {
        None => Ok(ExperimentConfig::fig2()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            ExperimentConfig::parse(&text)
        }
    }
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn execute(command: Command) -> Result<RunSummary, CliError> {
    match command {
        Command::Spectrum(run) => {
            let cfg = run.resolve()?;
            cmd_spectrum(&cfg, &out_dir(&cfg))
        }
        Command::OverlapScan(run) => {
            let cfg = run.resolve()?;
            cmd_overlap_scan(&cfg, &out_dir(&cfg))
        }
        Command::Evolve { rotated, run } => {
            let cfg = run.resolve()?;
            cmd_evolve(&cfg, rotated, &out_dir(&cfg))
        }
        Command::Reproduce { figure, overrides } => {
            let figure = match figure {
                FigureArg::Fig2 => Figure::Fig2,
                FigureArg::Fig3 => Figure::Fig3,
            };
            let mut cfg = figure.config();
            overrides.apply(&mut cfg)?;
            let dir = out_dir(&cfg).join(figure.name());
            let bundle = reproduce(figure, &cfg, &dir)?;
            if !bundle.passed() {
                return Err(CliError::AssertionsFailed(bundle.failures()));
            }
            Ok(RunSummary {
                dir,
                files: [SPECTRUM_FILE, SCAN_FILE, UNROTATED_FILE, ROTATED_FILE, ASSERTIONS_FILE, MANIFEST_FILE]
                    .map(String::from)
                    .to_vec(),
                headline: format!("{} assertions passed in {:.1} s", bundle.assertions.len(), bundle.seconds),
            })
        }
    }
}

impl RunArgs {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = load_config(self.config.as_deref())?;
        self.overrides.apply(&mut cfg)?;
        Ok(cfg)
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status. Errors are printed to stderr as one
/// line of JSON.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let message = if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                eprint!("{e}");
                "missing subcommand".to_string()
            } else {
                e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string()
            };
            let err = CliError::config("USAGE", message);
            eprintln!("{}", err.to_json());
            return EXIT_CONFIG;
        }
    };
    match execute(cli.command) {
        Ok(summary) => {
            println!("{}: {}", summary.dir.display(), summary.headline);
            EXIT_OK
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
    }
}
