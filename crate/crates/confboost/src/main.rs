use std::process::ExitCode;

fn main() -> ExitCode {
    confboost::cli::main()
}
