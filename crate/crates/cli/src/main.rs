use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use fovguard_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.stdout.as_bytes()).is_err() {
                return ExitCode::from(4);
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("fovguard: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
