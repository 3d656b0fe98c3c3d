use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use mirrorforge_cli::{dispatch, Cli};

fn main() -> ExitCode {
    // clap exits with status 2 on malformed arguments
    let cli = Cli::parse();
    let (text, code) = dispatch(&cli);
    if text.starts_with("error:") {
        eprint!("{text}");
    } else {
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(text.as_bytes());
    }
    ExitCode::from(code as u8)
}
