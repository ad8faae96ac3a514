use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let (code, out) = symlog::cli::run(std::env::args_os());
    // A closed reader (e.g. `| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{out}");
    ExitCode::from(code as u8)
}
