use std::process::ExitCode;

fn main() -> ExitCode {
    hypstab::cli::main_with(std::env::args_os())
}
