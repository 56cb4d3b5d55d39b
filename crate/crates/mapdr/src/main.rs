use std::process::ExitCode;

use clap::Parser;
use mapdr::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli, &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mapdr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
