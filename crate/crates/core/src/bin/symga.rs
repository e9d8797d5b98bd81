use std::process::ExitCode;

fn main() -> ExitCode {
    symga::cli::main_with_args(std::env::args_os())
}
