use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(measolv_cli::run(std::env::args_os()))
}
