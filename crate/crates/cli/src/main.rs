use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use genquorum_cli::{run, Cli, USAGE_EXIT};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = match run(&cli, &mut out) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            USAGE_EXIT
        }
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
