use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(noether_core::cli::main_with_args(std::env::args()) as u8)
}
