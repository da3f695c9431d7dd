use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use reqo_cli::{run, CliError, CliResult, CommandKind, LoadedConfig, RunContext};

/// Estimate the satisfiable-scenario probability of a random-exist
/// quantified oracle, classically and by simulated amplitude estimation.
#[derive(Debug, Parser)]
#[command(name = "reqo", version)]
struct Cli {
    #[arg(value_enum)]
    command: CommandKind,
    /// Experiment config (JSON). Required by every command but `selftest`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config's `out`, default `.`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and trials.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

fn execute(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
    }
    let config = cli.config.as_deref().map(LoadedConfig::load).transpose()?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.as_ref().and_then(|c| c.config.out.as_ref().map(|o| c.base_dir.join(o))))
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = RunContext::new(config, cli.seed);
    let output = run(cli.command, &ctx)?;
    for path in output.write_to(&out_dir)? {
        eprintln!("wrote {}", path.display());
    }
    println!("{}", output.summary);
    match output.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("reqo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
