mod bundle;
mod config;
mod runner;

use clap::Parser;
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

/// Frequency-bin network simulator: runs one configured experiment per
/// invocation and writes matrices, scan tables, and a run manifest.
#[derive(Parser)]
#[command(name = "freqnet", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output-dir` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid size (overrides `grid-n` from the config).
    #[arg(long)]
    grid: Option<usize>,
    /// Worker threads for scan parallelism (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn execute(cli: &Cli) -> Result<(), (u8, String)> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| (2, format!("cannot read {}: {e}", cli.config.display())))?;
    let mut config = RunConfig::parse(&text).map_err(|e| (2, e))?;
    if let Some(out) = &cli.out {
        config.output_dir = Some(out.clone());
    }
    if let Some(grid) = cli.grid {
        config.grid_n = grid;
    }
    config.validate().map_err(|e| (2, e))?;
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            log::warn!("thread pool already configured: {e}");
        }
    }
    runner::run(&config).map_err(|e| (e.exit_code() as u8, e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
