use std::process::ExitCode;

fn main() -> ExitCode {
    skspline::cli::main_with_args(std::env::args_os())
}
