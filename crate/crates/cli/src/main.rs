mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command, Manifest, RunConfig};
use output::Failure;

const DEFAULT_OUT: &str = "cloudnoise-out";

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::input("threads", e.to_string()))?;
    }
    let config = match cli.command {
        Command::Replay(args) => {
            let mut config = Manifest::read(&args.manifest)?.config;
            if let Some(dir) = args.into {
                config.out = dir;
            }
            config
        }
        command => RunConfig {
            out: cli.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            threads: cli.threads,
            command,
        },
    };
    commands::execute(&config)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code())
        }
    }
}
