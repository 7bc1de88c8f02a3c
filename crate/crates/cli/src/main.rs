use std::process::ExitCode;

use clap::Parser;
use goc_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            println!("{}", out.summary);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("goc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
