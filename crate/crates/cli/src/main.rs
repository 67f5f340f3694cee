//! `relevkit` command-line entry point.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 provider error.
//! Every subcommand streams its input except `evaluate`, which needs all
//! predictions in memory to rank them.

mod config;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use relevkit::augment::{AugmentOp, AugmentRun, HttpProvider, LlmProvider, MockProvider};
use relevkit::corpus::{DatasetReader, DatasetStats};
use relevkit::metrics::{self, GsbCounts};
use relevkit::scorer::{self, SyntheticSpec};
use relevkit::{AugmentError, LabeledPair};
use serde_json::{json, Value};

use config::{PipelineConfig, ProviderKind};

const CHUNK: usize = 1024;

#[derive(Parser, Debug)]
#[command(
    name = "relevkit",
    version = concat!(env!("CARGO_PKG_VERSION"), " (dataset schema 1)"),
    about = "Relevance data pipeline: summaries, augmentation, metrics"
)]
struct Cli {
    /// JSON config file (same schema as --print-config output).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the fully resolved config and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Default)]
struct BudgetArgs {
    #[arg(long)]
    qf_max: Option<usize>,
    #[arg(long)]
    doc_max: Option<usize>,
    #[arg(long)]
    total_max: Option<usize>,
    #[arg(long)]
    sep: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Add query-focused, document and mix summaries to each record.
    Summarize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long)]
        workers: Option<usize>,
        /// Also add heuristic scores and predicted labels.
        #[arg(long)]
        with_scores: bool,
    },
    /// Generate augmented samples with an LLM provider.
    Augment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum)]
        provider: Option<ProviderKind>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated subset of syn,ant,gen.
        #[arg(long, value_delimiter = ',')]
        ops: Option<Vec<AugmentOp>>,
        #[arg(long)]
        max_inflight: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Multiclass AUC of scored predictions.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, default_value = "score")]
        score_field: String,
    },
    /// Delta GSB from side-by-side judgment counts.
    Gsb {
        #[arg(long)]
        good: u64,
        #[arg(long)]
        same: u64,
        #[arg(long)]
        bad: u64,
    },
    /// Label counts of a dataset.
    Stats {
        #[arg(long)]
        input: PathBuf,
    },
    /// Synthetic comparison of mix vs query-focused-only scoring.
    Experiment {
        #[arg(long, default_value_t = 300)]
        n_docs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Also write the synthetic corpus as JSONL.
        #[arg(long)]
        write_corpus: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Provider(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Provider(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Provider(m) => m,
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).map_err(CliError::Usage)?,
        None => PipelineConfig::default(),
    };
    if cli.verbose > 0 {
        cfg.verbosity = cli.verbose;
    }
    if let Some(cmd) = &cli.command {
        apply_overrides(&mut cfg, cmd);
    }
    init_logging(cfg.verbosity);

    if cli.print_config {
        println!("{}", cfg.to_json_pretty());
        return Ok(());
    }
    let Some(cmd) = cli.command else {
        return Err(CliError::Usage("a subcommand is required (see --help)".into()));
    };
    match cmd {
        Command::Summarize { input, output, with_scores, .. } => summarize(&cfg, &input, &output, with_scores),
        Command::Augment { input, output, .. } => augment(&cfg, &input, &output),
        Command::Evaluate { predictions, score_field } => evaluate(&predictions, &score_field),
        Command::Gsb { good, same, bad } => {
            let d = metrics::delta_gsb(GsbCounts::new(good, same, bad)).map_err(data)?;
            println!("{}", json!({ "delta_gsb": d }));
            Ok(())
        }
        Command::Stats { input } => stats(&input),
        Command::Experiment { n_docs, seed, write_corpus, .. } => experiment(&cfg, n_docs, seed, write_corpus.as_deref()),
    }
}

fn apply_budget(cfg: &mut PipelineConfig, b: &BudgetArgs) {
    let budget = &mut cfg.budget;
    if let Some(v) = b.qf_max {
        budget.query_focused_max = v;
    }
    if let Some(v) = b.doc_max {
        budget.doc_summary_max = v;
    }
    match b.total_max {
        Some(v) => budget.total_max = v,
        // keep the total consistent when only the parts were given
        None if b.qf_max.is_some() || b.doc_max.is_some() => {
            budget.total_max = budget.total_max.max(budget.query_focused_max + budget.doc_summary_max)
        }
        None => {}
    }
    if let Some(s) = &b.sep {
        budget.separator = s.clone();
    }
}

fn apply_overrides(cfg: &mut PipelineConfig, cmd: &Command) {
    match cmd {
        Command::Summarize { budget, workers, .. } => {
            apply_budget(cfg, budget);
            if let Some(w) = workers {
                cfg.workers = *w;
            }
        }
        Command::Augment { provider, seed, ops, max_inflight, workers, .. } => {
            if let Some(p) = provider {
                cfg.provider.kind = *p;
            }
            if let Some(s) = seed {
                cfg.augment.seed = *s;
                cfg.provider.mock_seed = *s;
            }
            if let Some(o) = ops {
                let mut o = o.clone();
                o.sort();
                o.dedup();
                cfg.augment.ops = o;
            }
            if let Some(m) = max_inflight {
                cfg.augment.max_inflight = *m;
            }
            if let Some(w) = workers {
                cfg.workers = *w;
                if max_inflight.is_none() {
                    cfg.augment.max_inflight = *w;
                }
            }
        }
        Command::Experiment { budget, .. } => apply_budget(cfg, budget),
        _ => {}
    }
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>, CliError> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(io::stdin().lock()));
    }
    let f = File::open(path).map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    Ok(Box::new(BufReader::new(f)))
}

fn open_output(path: &Path) -> Result<Box<dyn Write>, CliError> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let f = File::create(path).map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))?;
    Ok(Box::new(BufWriter::new(f)))
}

/// Feeds the dataset to `f` in fixed-size chunks.
fn for_each_chunk(
    input: &Path,
    mut f: impl FnMut(&[LabeledPair]) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let mut chunk = Vec::with_capacity(CHUNK);
    for rec in DatasetReader::new(open_input(input)?) {
        chunk.push(rec.map_err(data)?);
        if chunk.len() == CHUNK {
            f(&chunk)?;
            chunk.clear();
        }
    }
    if !chunk.is_empty() {
        f(&chunk)?;
    }
    Ok(())
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
}

fn summarize_record(pair: &LabeledPair, cfg: &PipelineConfig, with_scores: bool) -> Result<String, CliError> {
    let s = scorer::score_pair(pair, &cfg.budget, &cfg.scorer)
        .map_err(|e| CliError::Data(format!("record {:?}: {e}", pair.id)))?;
    let mut rec = pair.to_json();
    rec.insert("query_focused".into(), Value::String(s.mix.query_focused));
    rec.insert("doc_summary".into(), Value::String(s.mix.doc_summary));
    rec.insert("mix_summary".into(), Value::String(s.mix.combined));
    if with_scores {
        rec.insert("score".into(), json!(s.score_mix));
        rec.insert("predicted".into(), json!(s.predicted_mix));
        rec.insert("score_qf_only".into(), json!(s.score_qf_only));
        rec.insert("predicted_qf_only".into(), json!(s.predicted_qf_only));
    }
    Ok(Value::Object(rec).to_string())
}

fn summarize(cfg: &PipelineConfig, input: &Path, output: &Path, with_scores: bool) -> Result<(), CliError> {
    cfg.budget.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let pool = thread_pool(cfg.workers)?;
    let mut out = open_output(output)?;
    for_each_chunk(input, |chunk| {
        let lines: Vec<String> = pool.install(|| {
            chunk
                .par_iter()
                .map(|p| summarize_record(p, cfg, with_scores))
                .collect::<Result<_, _>>()
        })?;
        for l in lines {
            writeln!(out, "{l}").map_err(data)?;
        }
        Ok(())
    })?;
    out.flush().map_err(data)
}

fn build_provider(cfg: &PipelineConfig) -> Result<Box<dyn LlmProvider>, CliError> {
    Ok(match cfg.provider.kind {
        ProviderKind::Mock => Box::new(MockProvider::new(cfg.provider.mock_seed)),
        ProviderKind::Http => Box::new(
            HttpProvider::from_env(&cfg.provider.http).map_err(|e| CliError::Provider(e.to_string()))?,
        ),
    })
}

fn augment_error(e: AugmentError) -> CliError {
    match &e {
        AugmentError::Provider(_) => CliError::Provider(e.to_string()),
        AugmentError::FailureRate { provider_failures, .. } if *provider_failures > 0 => {
            CliError::Provider(e.to_string())
        }
        AugmentError::Config(_) => CliError::Usage(e.to_string()),
        _ => CliError::Data(e.to_string()),
    }
}

fn augment(cfg: &PipelineConfig, input: &Path, output: &Path) -> Result<(), CliError> {
    let provider = build_provider(cfg)?;
    let mut run = AugmentRun::new(provider.as_ref(), &cfg.augment).map_err(augment_error)?;
    let mut out = open_output(output)?;
    let mut written = 0usize;
    for_each_chunk(input, |chunk| {
        for s in run.process(chunk) {
            writeln!(out, "{}", s.to_record().to_json_line()).map_err(data)?;
            written += 1;
        }
        run.check_failure_rate().map_err(augment_error)
    })?;
    out.flush().map_err(data)?;
    log::info!(
        "wrote {written} augmented samples ({} of {} op calls failed)",
        run.failures.len(),
        run.attempted
    );
    Ok(())
}

fn evaluate(path: &Path, score_field: &str) -> Result<(), CliError> {
    let preds = metrics::read_predictions(open_input(path)?, score_field).map_err(data)?;
    let auc = metrics::multiclass_auc(&preds).map_err(data)?;
    println!("{}", json!({ "auc": auc, "n": preds.len() }));
    Ok(())
}

fn stats(input: &Path) -> Result<(), CliError> {
    let mut st = DatasetStats::default();
    for rec in DatasetReader::new(open_input(input)?) {
        st.add(rec.map_err(data)?.label);
    }
    println!("{}", serde_json::to_string(&st).map_err(data)?);
    Ok(())
}

fn experiment(cfg: &PipelineConfig, n_docs: usize, seed: u64, corpus_path: Option<&Path>) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        n_docs,
        seed,
        ..SyntheticSpec::default()
    };
    cfg.budget.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(p) = corpus_path {
        let corpus = scorer::synthesize_corpus(&spec).map_err(CliError::Usage)?;
        let mut out = open_output(p)?;
        relevkit::corpus::write_records(&mut out, &corpus).map_err(data)?;
    }
    let report = scorer::run_experiment_with(&spec, &cfg.budget, &cfg.scorer).map_err(|e| match e {
        scorer::ExperimentError::Spec(m) => CliError::Usage(m),
        other => data(other),
    })?;
    println!("{}", serde_json::to_string(&report).map_err(data)?);
    Ok(())
}
