use clap::{Parser, Subcommand};
use pike::commands::{cmd_example1, cmd_run, cmd_sweep, cmd_verify};
use pike::verify::Suite;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pike", version, about = "Adaptive data mixing on synthetic quadratic tasks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train one configuration and write its per-step CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a verification suite; exit 2 if any check fails.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Static mixes on a simplex grid plus one adaptive run.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Two-task diagonal example: analytic and Monte Carlo loss curves.
    Example1 {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.cmd {
        Cmd::Run { config, out, seed } => cmd_run(&config, out.as_deref(), seed).map(|_| true),
        Cmd::Sweep { config, out, seed } => cmd_sweep(&config, out.as_deref(), seed).map(|_| true),
        Cmd::Example1 { out, seed } => cmd_example1(out.as_deref(), seed).map(|_| true),
        Cmd::Verify { suite, seed } => match suite.parse::<Suite>() {
            Ok(s) => cmd_verify(s, seed),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        },
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
