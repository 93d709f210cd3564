use std::process::ExitCode;

use clap::Parser;
use romforge::cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("romforge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
