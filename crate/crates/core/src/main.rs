use std::process::ExitCode;

fn main() -> ExitCode {
    rbc_stoplab::cli::main_with_args(std::env::args_os())
}
