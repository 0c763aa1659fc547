//! Majority-class reference backend speaking the job protocol.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

#[derive(Parser)]
#[command(name = "rolebench-majority", version, about = "Majority-class backend")]
struct Args {
    /// Job manifest written by the harness.
    #[arg(long)]
    manifest: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match rolebench_core::bridge::run_majority_backend(&args.manifest) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
