use std::process::ExitCode;

fn main() -> ExitCode {
    cyclophobic::harness::cli::main_entry()
}
