use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trilevel_heat_cli::commands::{run, Command};
use trilevel_heat_cli::config::{load_config, RunConfig};

/// Steady-state heat currents through a three-level system between three thermal baths.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Flat `key = value` configuration file; missing keys use reference defaults.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV path [default: `output` key, else `<command>.csv`].
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for parameter sweeps [default: all cores].
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Currents of every scheme against the middle-bath coupling.
    Currents,
    /// Amplification factors against the middle-bath temperature.
    Amplification,
    /// Strong-coupling rates and current components against the middle-bath temperature.
    Mechanism,
    /// Two-terminal current against the temperature bias.
    Ndtc,
    /// All rates at the configured parameter point.
    RatesDump,
    /// Coupling strengths where the limiting schemes stop or start agreeing.
    Classify,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Currents => Command::Currents,
            Cmd::Amplification => Command::Amplification,
            Cmd::Mechanism => Command::Mechanism,
            Cmd::Ndtc => Command::Ndtc,
            Cmd::RatesDump => Command::RatesDump,
            Cmd::Classify => Command::Classify,
        }
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = Command::from(cli.command);
    let cfg = match &cli.config {
        Some(path) => match load_config(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(e.exit_code() as u8);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let path = cli
        .output
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", command.name())));
    let outcome = run(command, &cfg);
    for sheet in &outcome.sheets {
        let target = sheet
            .name
            .map_or_else(|| path.clone(), |s| sibling(&path, s));
        if let Err(e) = std::fs::write(&target, sheet.to_csv()) {
            eprintln!("error: cannot write {}: {e}", target.display());
            return ExitCode::from(1);
        }
    }
    match outcome.failure {
        Some(msg) => {
            eprintln!("error: solver failure: {msg}");
            ExitCode::from(4)
        }
        None => ExitCode::SUCCESS,
    }
}
