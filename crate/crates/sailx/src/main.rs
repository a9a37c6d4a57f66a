use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(sailx::cli::run(std::env::args_os()))
}
