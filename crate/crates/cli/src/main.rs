use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ddpc_cli::{cmd_compare, cmd_run, cmd_validate, Overrides};

#[derive(Parser)]
#[command(name = "ddpc", version, about = "Data-driven predictive control benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one controller in closed loop.
    Run(Common),
    /// Run all configured controllers on identical data and tabulate them.
    Compare(Common),
    /// Check a configuration and print derived dimensions.
    Validate {
        #[arg(long)]
        config: String,
    },
}

#[derive(Args)]
struct Common {
    /// Configuration file, or `preset:NAME` for a bundled preset.
    #[arg(long)]
    config: String,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress output and warnings
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            quiet: self.quiet,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = match &cli.command {
        Command::Run(c) | Command::Compare(c) => c.quiet,
        Command::Validate { .. } => false,
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if quiet { "error" } else { "warn" }))
        .init();
    let outcome = match &cli.command {
        Command::Run(c) => cmd_run(&c.config, &c.overrides()).map(|_| ()),
        Command::Compare(c) => cmd_compare(&c.config, &c.overrides()).map(|_| ()),
        Command::Validate { config } => cmd_validate(config).map(|report| print!("{report}")),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().lines().next().unwrap_or_default());
            ExitCode::FAILURE
        }
    }
}
