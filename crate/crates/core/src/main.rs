use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(defcure::cli::run(std::env::args()) as u8)
}
