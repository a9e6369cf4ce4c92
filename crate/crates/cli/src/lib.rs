//! Command-line front end for the radgas solvers.
//!
//! `radgas <subcommand> [--config FILE] [--set key=value]... [flags]`
//! resolves a flat configuration, runs one solver and writes CSV/JSON
//! artifacts plus `manifest.json` into the output directory.
//!
//! Exit codes: 0 success, 1 negative verdict or solver failure (a report
//! is still written), 2 configuration error.

pub mod config;
pub mod output;
pub mod run;
pub mod values;

use std::path::PathBuf;

use clap::builder::PossibleValuesParser;
use clap::Parser;
use serde_json::json;
use thiserror::Error;

use config::{ConfigError, Overrides, RunConfig, Subcommand};
use output::Artifacts;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver: {0}")]
    Solver(#[from] radgas::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "radgas", version, about = "Stationary gas-radiation solvers")]
pub struct Cli {
    #[arg(value_parser = PossibleValuesParser::new(Subcommand::ALL.map(|s| s.name())))]
    pub subcommand: String,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory (else `out` from the config, else $RADGAS_OUT, else ./out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 keeps the rayon default.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    pub print_config: bool,
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            file: self.config.clone(),
            set: self.set.clone(),
            out: self.out.clone(),
            seed: self.seed,
            threads: self.threads,
            env_out: std::env::var("RADGAS_OUT").ok(),
        }
    }
}

/// Resolve, run and report; returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let sub = Subcommand::parse(&cli.subcommand).expect("validated by clap");
    let cfg = match RunConfig::resolve(sub, &cli.overrides()).and_then(|c| c.check_files().map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    if cli.print_config {
        print!("{}", cfg.render());
        return 0;
    }
    let threads = cfg.usize("threads");
    if threads > 0 {
        // Fails only if a pool already exists, which keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let mut art = match Artifacts::create(&cfg.out_dir()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("cannot create {}: {e}", cfg.out_dir().display());
            return 1;
        }
    };
    let (code, status) = match run::run(&cfg, &mut art) {
        Ok(o) => (if o.ok { 0 } else { 1 }, o.status),
        Err(CliError::Config(e)) => {
            eprintln!("config error: {e}");
            return 2;
        }
        Err(e) => {
            eprintln!("{e}");
            let report = json!({ "status": "error", "error": e.to_string() });
            if let Err(io) = art.json("error.json", &report) {
                eprintln!("cannot write error report: {io}");
            }
            (1, format!("error: {e}"))
        }
    };
    if let Err(e) = art.finish(&cfg, code, &status) {
        eprintln!("cannot write manifest: {e}");
        return 1;
    }
    eprintln!("{}: {status} (exit {code}), artifacts in {}", cfg.subcommand, cfg.out_dir().display());
    code
}
