mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::{exit, Failure};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };

    let result = match &cli.command {
        Command::Info { manifest } => commands::info(manifest),
        Command::Compute(args) => commands::compute(args),
        Command::Cam2d { compute, frame_acts } => commands::cam2d(compute, frame_acts.as_deref()),
        Command::Render(args) => commands::render(args),
        Command::Selftest { fixture } => commands::run_selftest(fixture.as_deref()),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            if let Failure::Engine(saliency_tubes::Error::EmptySelection { .. }) = failure {
                eprintln!("hint: every weight of this class fell below the threshold; pass a looser --tau-policy");
            }
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
