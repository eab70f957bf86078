use std::process::ExitCode;

fn main() -> ExitCode {
    seqmt::cli::run()
}
