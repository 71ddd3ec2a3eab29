use std::process::ExitCode;

fn main() -> ExitCode {
    bullwhip::cli::main_with(std::env::args_os())
}
