use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use levyfield::io::{cmd_bootstrap, cmd_covariance, cmd_fit, cmd_simulate, cmd_tail, exit_code, LoadedConfig};

#[derive(Parser)]
#[command(name = "levyfield", version, about = "Lévy-basis random fields: simulate, covariance, tail, fit, bootstrap")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured field and write field.csv.
    Simulate { config: PathBuf },
    /// Write the correlation and covariance on a lag grid to covariance.csv.
    Covariance { config: PathBuf },
    /// Write theoretical and empirical tail coefficients to tail.csv.
    Tail { config: PathBuf },
    /// Fit the model to paths.data and write fit.json and fit.txt.
    Fit { config: PathBuf },
    /// Add block-bootstrap standard errors and CLIC; writes bootstrap.json and bootstrap.txt.
    Bootstrap { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, path) = match &cli.command {
        Command::Simulate { config } => ("simulate", config),
        Command::Covariance { config } => ("covariance", config),
        Command::Tail { config } => ("tail", config),
        Command::Fit { config } => ("fit", config),
        Command::Bootstrap { config } => ("bootstrap", config),
    };
    let run = || {
        let cfg = LoadedConfig::from_path(path)?;
        match cli.command {
            Command::Simulate { .. } => cmd_simulate(&cfg),
            Command::Covariance { .. } => cmd_covariance(&cfg),
            Command::Tail { .. } => cmd_tail(&cfg),
            Command::Fit { .. } => cmd_fit(&cfg),
            Command::Bootstrap { .. } => cmd_bootstrap(&cfg),
        }
    };
    match run() {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {name}: {e}");
            ExitCode::from(code as u8)
        }
    }
}
