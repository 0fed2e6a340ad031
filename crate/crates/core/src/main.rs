use std::process::ExitCode;

fn main() -> ExitCode {
    ou_offdiag::cli::main_with_args(std::env::args_os())
}
