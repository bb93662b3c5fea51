use std::io;
use std::process::ExitCode;

use clap::Parser;
use kspec::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = run(cli, &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code as u8)
}
