use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(gammaprime::cli::run() as u8)
}
