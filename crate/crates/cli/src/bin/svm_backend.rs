//! The TF-IDF + linear SVM baseline as an external backend.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

#[derive(Parser)]
#[command(name = "rolebench-svm-backend", version, about = "Linear SVM backend")]
struct Args {
    /// Job manifest written by the harness.
    #[arg(long)]
    manifest: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match rolebench_core::bridge::run_svm_backend(&args.manifest) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
