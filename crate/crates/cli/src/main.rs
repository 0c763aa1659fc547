mod config;

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use config::{parse_dataset_list, Overrides, RunConfig, SNAPSHOT_FILE};
use rolebench_core::bridge::build_backends;
use rolebench_core::eval::{
    render_report, run_transfer_matrix, MatrixConfig, Pool, ReportFormat, TransferMatrix, METRICS_FILE,
};
use rolebench_core::ingest::ingest;
use rolebench_core::recast::{label_distribution, load_mapping, recast_corpus, LabelMapping};
use rolebench_core::split::{assign_all, SplitRatios, DEFAULT_SEED};
use rolebench_core::synth::{family_specs, generate_synthetic, FamilyConfig};
use rolebench_core::{Corpus, DatasetId};

type Result<T> = std::result::Result<T, Box<dyn Error + Send + Sync>>;

const EXIT_PARTIAL: u8 = 2;
const EXIT_FATAL: u8 = 1;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "rolebench",
    version,
    about = "Cross-domain transfer evaluation for rhetorical role classification"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a raw dataset and write it in the interchange format.
    Ingest {
        #[arg(long)]
        dataset: DatasetId,
        /// Dataset directory, or an interchange .jsonl file.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Map native labels onto Facts / NonFacts and print the distribution.
    Recast {
        /// Interchange files, one per dataset.
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        /// Mapping file; the shipped mapping when omitted.
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Directory for the recast `<DATASET>.jsonl` files.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Assign documents to train / validation / test folds.
    Split {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, env = "ROLEBENCH_SEED", default_value = DEFAULT_SEED)]
        seed: String,
        /// Split manifest to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on a single pool and score every target.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Datasets to train on, e.g. BVA+CB.
        #[arg(long)]
        pool: Pool,
    },
    /// Run the full pool x target x backend transfer matrix.
    Matrix {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Render the report of a finished run.
    Report {
        /// Run directory.
        #[arg(long)]
        run: PathBuf,
        /// table-text or csv.
        #[arg(long, default_value = "table-text")]
        format: ReportFormat,
    },
    /// Write synthetic sibling corpora with controllable signal overlap.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "BVA,CB,ISC")]
        datasets: String,
        #[arg(long, default_value_t = 1.0)]
        overlap: f64,
        #[arg(long, default_value = "synth")]
        seed: String,
        #[arg(long, default_value_t = 100)]
        n_documents: usize,
        #[arg(long, default_value_t = 0.35)]
        facts_ratio: f64,
        /// Also write a run config using the generated corpora.
        #[arg(long)]
        with_config: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long, env = "ROLEBENCH_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, env = "ROLEBENCH_SEED")]
    seed: Option<String>,
    /// Comma-separated dataset ids.
    #[arg(long, env = "ROLEBENCH_DATASETS")]
    datasets: Option<String>,
    /// Comma-separated backend ids.
    #[arg(long, env = "ROLEBENCH_BACKENDS")]
    backends: Option<String>,
    #[arg(long, env = "ROLEBENCH_PARALLELISM")]
    parallelism: Option<usize>,
    /// Run directory.
    #[arg(long, env = "ROLEBENCH_OUT")]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => {
                let mut c = RunConfig::default();
                c.resolve_paths(Path::new("."))?;
                c
            }
        };
        config.apply(&Overrides {
            seed: self.seed.clone(),
            datasets: self.datasets.clone(),
            backends: self.backends.clone(),
            parallelism: self.parallelism,
            out: self.out.clone(),
        })?;
        config.validate()?;
        Ok(config)
    }
}

fn read_mapping(path: Option<&Path>) -> Result<LabelMapping> {
    Ok(match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("cannot read mapping {}: {e}", p.display()))?;
            load_mapping(&text)?
        }
        None => LabelMapping::default(),
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()).into())
}

fn cmd_ingest(dataset: DatasetId, input: &Path, out: &Path) -> Result<u8> {
    let corpus = ingest(dataset, input)?;
    corpus.write_jsonl(out)?;
    println!(
        "{dataset}: {} documents, {} sentences -> {}",
        corpus.documents.len(),
        corpus.sentence_count(),
        out.display()
    );
    Ok(0)
}

fn read_corpora(inputs: &[PathBuf]) -> Result<Vec<Corpus>> {
    inputs
        .iter()
        .map(|p| Corpus::read_jsonl(p).map_err(Into::into))
        .collect()
}

fn cmd_recast(inputs: &[PathBuf], mapping: Option<&Path>, out_dir: Option<&Path>) -> Result<u8> {
    let mapping = read_mapping(mapping)?;
    let corpora = read_corpora(inputs)?
        .iter()
        .map(|c| recast_corpus(c, &mapping))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        for c in &corpora {
            c.write_jsonl(&dir.join(format!("{}.jsonl", c.dataset_id)))?;
        }
    }
    print!("{}", label_distribution(&corpora));
    Ok(0)
}

fn cmd_split(inputs: &[PathBuf], seed: &str, out: &Path) -> Result<u8> {
    let corpora = read_corpora(inputs)?;
    let assignment = assign_all(&corpora, SplitRatios::default(), seed)?;
    assignment.write_manifest(out)?;
    for c in &corpora {
        let (train, val, test) = assignment.counts(c.dataset_id);
        println!(
            "{}: train {train}, validation {val}, test {test} documents",
            c.dataset_id
        );
    }
    Ok(0)
}

/// Loads, recasts and splits the configured corpora, runs the matrix and
/// fills the run directory.
fn run_experiment(config: &RunConfig, pools: Option<Vec<Pool>>) -> Result<TransferMatrix> {
    let mapping = read_mapping(config.mapping.as_deref())?;
    let mut corpora = Vec::new();
    for (d, path) in config.dataset_paths()? {
        let corpus = recast_corpus(&ingest(d, &path)?, &mapping)?;
        info!(
            "{d}: {} documents, {} sentences",
            corpus.documents.len(),
            corpus.sentence_count()
        );
        corpora.push(corpus);
    }
    let assignment = assign_all(&corpora, config.ratios, &config.seed)?;
    let backends = build_backends(&config.backend_specs(), &config.svm)?;

    let run_dir = &config.out;
    fs::create_dir_all(run_dir).map_err(|e| format!("cannot create run directory {}: {e}", run_dir.display()))?;
    write_text(&run_dir.join(SNAPSHOT_FILE), &config.to_toml())?;
    assignment.write_manifest(&run_dir.join("splits.jsonl"))?;

    let matrix = run_transfer_matrix(
        &corpora,
        &assignment,
        &backends,
        &MatrixConfig {
            parallelism: config.parallelism,
            run_dir: run_dir.clone(),
            pools,
        },
    )?;
    let table = render_report(&matrix, ReportFormat::TableText);
    write_text(&run_dir.join("report.txt"), &table)?;
    write_text(&run_dir.join("report.csv"), &render_report(&matrix, ReportFormat::Csv))?;
    print!("{table}");
    println!("run directory: {}", run_dir.display());
    Ok(matrix)
}

fn exit_for(matrix: &TransferMatrix) -> u8 {
    let failed = matrix.failed_cells().count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed", matrix.cells.len());
        EXIT_PARTIAL
    } else {
        0
    }
}

fn cmd_report(run: &Path, format: ReportFormat) -> Result<u8> {
    let matrix = TransferMatrix::read(&run.join(METRICS_FILE))?;
    print!("{}", render_report(&matrix, format));
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    out: &Path,
    datasets: &str,
    overlap: f64,
    seed: &str,
    n_documents: usize,
    facts_ratio: f64,
    with_config: bool,
) -> Result<u8> {
    let family = FamilyConfig {
        n_documents,
        facts_ratio,
        overlap,
        seed: seed.to_string(),
        ..Default::default()
    };
    let datasets = parse_dataset_list(datasets)?;
    fs::create_dir_all(out)?;
    let mut config = RunConfig::default();
    for spec in family_specs(&family, &datasets)? {
        let corpus = generate_synthetic(&spec)?;
        let path = out.join(format!("{}.jsonl", spec.dataset_id));
        corpus.write_jsonl(&path)?;
        println!(
            "{}: {} sentences -> {}",
            spec.dataset_id,
            corpus.sentence_count(),
            path.display()
        );
        config.paths.insert(
            spec.dataset_id.to_string(),
            PathBuf::from(format!("{}.jsonl", spec.dataset_id)),
        );
    }
    if with_config {
        config.out = PathBuf::from("run");
        config.backends = vec![
            config::builtin_backend("svm").expect("built in"),
            config::builtin_backend("majority").expect("built in"),
        ];
        let path = out.join("run.toml");
        write_text(&path, &config.to_toml())?;
        println!("config -> {}", path.display());
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Ingest { dataset, input, out } => cmd_ingest(dataset, &input, &out),
        Command::Recast {
            inputs,
            mapping,
            out_dir,
        } => cmd_recast(&inputs, mapping.as_deref(), out_dir.as_deref()),
        Command::Split { inputs, seed, out } => cmd_split(&inputs, &seed, &out),
        Command::Train { run, pool } => {
            let config = run.resolve()?;
            Ok(exit_for(&run_experiment(&config, Some(vec![pool]))?))
        }
        Command::Matrix { run } => {
            let config = run.resolve()?;
            Ok(exit_for(&run_experiment(&config, None)?))
        }
        Command::Report { run, format } => cmd_report(&run, format),
        Command::Synth {
            out,
            datasets,
            overlap,
            seed,
            n_documents,
            facts_ratio,
            with_config,
        } => cmd_synth(&out, &datasets, overlap, &seed, n_documents, facts_ratio, with_config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FATAL)
        }
    }
}
