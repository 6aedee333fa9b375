use std::process::ExitCode;

use clap::Parser;
use twistwalk::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            println!("{}", out.summary);
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("twistwalk {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
