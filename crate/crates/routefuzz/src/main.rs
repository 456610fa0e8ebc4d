use std::process::ExitCode;

fn main() -> ExitCode {
    routefuzz::cli::main_entry()
}
