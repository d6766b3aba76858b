//! Command-line front end: structural validation, bound verification and
//! ROC experiments driven by a JSON configuration.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_bounds, cmd_roc, cmd_validate, RocReport, ValidateReport};
pub use config::{ExperimentConfig, KSpec, SolverConfig, ThresholdSpec};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "cmimo", version, about = "Compressive MIMO radar simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structural identities of the sensing operator.
    Validate(CommonArgs),
    /// Compare operator norm and coherence against the theoretical bounds.
    Bounds(CommonArgs),
    /// Run the Monte-Carlo ROC experiment.
    Roc(RocArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the master seed of the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: the config's output_dir, else ./out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RocArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write one SVG per SNR.
    #[arg(long)]
    pub plot: bool,
}

impl CommonArgs {
    fn load(&self) -> CliResult<(ExperimentConfig, PathBuf)> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok((cfg, out))
    }

    fn pool(&self) -> CliResult<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(CliError::Usage("--threads must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))
    }
}

/// Runs a parsed command and returns the process exit code: 0 success,
/// 1 failed check, 2 usage or parse error, 3 numerical failure.
pub fn execute(cli: &Cli, stdout: &mut (dyn Write + Send), stderr: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Validate(a) => a.pool().and_then(|pool| {
            let (cfg, out) = a.load()?;
            pool.install(|| cmd_validate(&cfg, &out, stdout)).map(|r| if r.passed() { 0 } else { 1 })
        }),
        Command::Bounds(a) => a.pool().and_then(|pool| {
            let (cfg, out) = a.load()?;
            pool.install(|| cmd_bounds(&cfg, &out, stdout)).map(|_| 0)
        }),
        Command::Roc(a) => a.common.pool().and_then(|pool| {
            let (cfg, out) = a.common.load()?;
            pool.install(|| cmd_roc(&cfg, &out, a.plot, stdout)).map(|_| 0)
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut (dyn Write + Send), stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli, stdout, stderr),
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                2
            } else {
                let _ = write!(stdout, "{}", e.render());
                0
            }
        }
    }
}
