//! `catbond` — command-line front end of the two-region CAT bond engine.

mod args;
mod commands;

use args::{Cli, Command};
use clap::Parser;

/// Error classified by exit code: 2 config, 3 data, 4 numeric.
#[derive(Debug)]
pub struct CliError {
    exit_code: i32,
    message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            exit_code: 2,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            exit_code: 3,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        CliError {
            exit_code: 4,
            message: message.into(),
        }
    }

    pub fn from_ingest(e: catbond::ingestion::IngestError) -> Self {
        use catbond::ingestion::IngestError as E;
        match e {
            E::Stochastic(_) => CliError::config(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("catbond: cannot configure {threads} threads: {e}");
            std::process::exit(2);
        }
    }
    let result = match cli.command {
        Command::Fit(a) => a.resolve().and_then(commands::run_fit),
        Command::Price(a) => a.resolve().and_then(commands::run_price),
        Command::Surface(a) => a.resolve().and_then(commands::run_surface),
        Command::Wang(a) => a.resolve().and_then(commands::run_wang),
        Command::GenerateFixture(a) => a.resolve().and_then(commands::run_fixture),
    };
    if let Err(e) = result {
        eprintln!("catbond: {e}");
        std::process::exit(e.exit_code);
    }
}
