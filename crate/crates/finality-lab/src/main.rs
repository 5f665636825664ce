use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(finality_lab::cli::main_entry() as u8)
}
