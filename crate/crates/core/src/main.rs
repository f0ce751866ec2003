use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(liftree::cli::run(std::env::args_os()))
}
