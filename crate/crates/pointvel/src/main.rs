use std::process::ExitCode;

fn main() -> ExitCode {
    pointvel::cli::run_main(std::env::args_os())
}
