use std::process::ExitCode;

use bundleforge::cli::{self, Cli, EXIT_INPUT};
use bundleforge::io::ErrorDoc;
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    if let Err(e) = cli::init_threads() {
        eprintln!("error: {}", ErrorDoc::from_error(&e).message);
        return ExitCode::from(EXIT_INPUT as u8);
    }
    let outcome = cli::run(&cli);
    print!("{}", outcome.render());
    ExitCode::from(outcome.code as u8)
}
