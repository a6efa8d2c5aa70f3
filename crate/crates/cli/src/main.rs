use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(raypet::run(std::env::args_os()))
}
