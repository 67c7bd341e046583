//! Command-line front end: train agents, evaluate checkpoints and baselines,
//! render comparison reports, and replay recorded traces.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (unreadable or invalid
//! config, trace, checkpoint, or report files).

mod commands;

use clap::{Parser, Subcommand};

use commands::CliError;

#[derive(Parser)]
#[command(name = "cloudward", version, about = "Cloud security posture simulator and RL agent trainer")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write a run directory with checkpoint and curve.
    Train(commands::train::TrainArgs),
    /// Evaluate a checkpoint or baseline over the held-out suites.
    Eval(commands::eval::EvalArgs),
    /// Render a comparison table from metric report files.
    Report(commands::report::ReportArgs),
    /// Step a quiet episode fed with a recorded event trace.
    Replay(commands::replay::ReplayArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version land here too; only real parse errors are
            // usage failures.
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.cmd {
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Report(args) => commands::report::run(args),
        Command::Replay(args) => commands::replay::run(args),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    }
}
