use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mhdal_cli::{parse_with_overrides, run};

/// Output directory override, taking precedence over the config file.
const OUTPUT_ENV: &str = "MHDAL_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "mhdal", version, about = "Augmented-Lagrangian solver for stationary and transient 2D MHD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a key = value config file.
    Run {
        config: PathBuf,
        /// Override a config entry; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn main() -> ExitCode {
    let Command::Run { config, set } = Cli::parse().command;
    let text = match std::fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", config.display());
            return ExitCode::from(4);
        }
    };
    let mut cfg = match parse_with_overrides(&text, &set) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", config.display());
            return ExitCode::from(2);
        }
    };
    if let Some(dir) = std::env::var_os(OUTPUT_ENV) {
        cfg.output_dir = dir.into();
    }
    match run(&cfg) {
        Ok(out) => {
            for r in out.report.rows.iter().filter(|r| !r.converged()) {
                eprintln!("{} S={} Re={} Rem={} t={}: {:?}", r.stage, r.s, r.re, r.re_m, r.t, r.failure);
            }
            println!("wrote {} files to {}", out.files.len(), cfg.output_dir.display());
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
