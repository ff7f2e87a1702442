use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(ionrotor::main_with_args(std::env::args_os()))
}
