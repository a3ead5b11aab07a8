//! Command implementations behind the `sharetrail` binary.

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sharetrail_core::corpus::{load_denylist, load_labels, load_posts, load_ranks, write_posts};
use sharetrail_core::engine::Inputs;
use sharetrail_core::eval::{metrics_csv, metrics_from_records, plot_data, run_batch, BatchConfig, SeedSetType};
use sharetrail_core::ranking::CriterionKind;
use sharetrail_core::synth::{generate, EcosystemConfig};
use sharetrail_core::{
    run_auto_execution, AutoConfig, Corpus, Denylist, ExecutionRecord, LabelSet, LoadOptions, UrlNormalizer,
};
use sharetrail_service::{AppState, Dataset};

#[derive(Debug, Parser)]
#[command(name = "sharetrail", version, about = "Snowball discovery of fake-news websites from social-media shares")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic two-camp ecosystem (posts, labels, config).
    GenSynth(GenSynthArgs),
    /// Run one automatic execution and write its record.
    RunAuto(RunAutoArgs),
    /// Run the executions grid and write records plus metrics.
    RunBatch(RunBatchArgs),
    /// Recompute metrics from stored records.
    Eval(EvalArgs),
    /// Write plot-ready CSV tables from stored records.
    PlotData(PlotDataArgs),
    /// Serve interactive sessions over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Posts file, one JSON object per line.
    #[arg(long)]
    pub posts: PathBuf,
    /// `domain,fake|credible` lines.
    #[arg(long)]
    pub labels: PathBuf,
    /// One website per line; these are never ranked.
    #[arg(long)]
    pub denylist: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    #[arg(long)]
    pub rng_seed: u64,
    /// `key=value` config file; `--set` entries are applied on top.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `--set n_users=5000`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunAutoArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[arg(long)]
    pub initial_seed: String,
    #[arg(long, default_value = "hindex")]
    pub criterion: CriterionKind,
    #[arg(long, default_value_t = 30)]
    pub cycles: u32,
    /// Drives the random criterion; recorded either way.
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunBatchArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    /// Repeat to select several; all three when omitted.
    #[arg(long)]
    pub criterion: Vec<CriterionKind>,
    /// Repeat to select several; all three when omitted.
    #[arg(long)]
    pub seed_set: Vec<SeedSetType>,
    #[arg(long, default_value_t = 30)]
    pub cycles: u32,
    #[arg(long, default_value_t = 40)]
    pub executions: u32,
    #[arg(long)]
    pub rng_seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of execution-record JSON files.
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotDataArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// `domain,rank` lines for the popularity CDF.
    #[arg(long, requires = "total_indexed")]
    pub ranks: Option<PathBuf>,
    /// Size of the ranked universe the ranks come from.
    #[arg(long)]
    pub total_indexed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    /// Dataset id clients pass as `corpus`.
    #[arg(long, default_value = "default")]
    pub corpus_id: String,
    #[arg(long, default_value_t = sharetrail_core::engine::DEFAULT_TOP_K)]
    pub top_k: usize,
    /// Write-through directory for session records.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub const METRICS_FILE: &str = "metrics.csv";
pub const RECORDS_DIR: &str = "records";
pub const RECORD_FILE: &str = "record.json";

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSynth(a) => gen_synth(&a),
        Command::RunAuto(a) => run_auto(&a),
        Command::RunBatch(a) => run_batch_cmd(&a),
        Command::Eval(a) => eval(&a),
        Command::PlotData(a) => plot(&a),
        Command::Serve(a) => serve(a),
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

struct Loaded {
    corpus: Corpus,
    labels: LabelSet,
    denylist: Denylist,
}

impl Loaded {
    fn inputs(&self) -> Inputs<'_> {
        Inputs {
            corpus: &self.corpus,
            labels: &self.labels,
            denylist: &self.denylist,
        }
    }
}

fn load(args: &InputArgs) -> Result<Loaded> {
    let corpus = load_posts(&args.posts, &UrlNormalizer::default(), LoadOptions::default())
        .context("loading posts")?;
    let labels = load_labels(&args.labels).context("loading labels")?;
    let denylist = match &args.denylist {
        Some(p) => load_denylist(p).context("loading denylist")?,
        None => Denylist::default(),
    };
    Ok(Loaded { corpus, labels, denylist })
}

fn gen_synth(a: &GenSynthArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            EcosystemConfig::parse(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => EcosystemConfig::default(),
    };
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.rng_seed = a.rng_seed;
    let eco = generate(&cfg)?;

    let mut posts = Vec::new();
    write_posts(&mut posts, &eco.posts)?;
    let mut labels = Vec::new();
    eco.truth.labels.write(&mut labels)?;
    let mut camps = String::from("user_id,camp\n");
    for (user, camp) in &eco.truth.user_camps {
        camps.push_str(&format!("{user},{camp}\n"));
    }
    write_atomic(&a.out_dir.join("posts.jsonl"), &posts)?;
    write_atomic(&a.out_dir.join("labels.csv"), &labels)?;
    write_atomic(&a.out_dir.join("user_camps.csv"), camps.as_bytes())?;
    write_atomic(&a.out_dir.join("ecosystem.conf"), cfg.to_text().as_bytes())?;
    Ok(())
}

fn run_auto(a: &RunAutoArgs) -> Result<()> {
    if a.cycles == 0 {
        bail!("--cycles must be at least 1");
    }
    let data = load(&a.inputs)?;
    let record = run_auto_execution(
        data.inputs(),
        &AutoConfig::new(a.initial_seed.clone(), a.criterion, a.cycles, a.rng_seed),
    )?;
    write_atomic(&a.out_dir.join(RECORD_FILE), record.to_json().as_bytes())
}

/// File name of a batch record, unique within one batch.
pub fn record_file_name(record: &ExecutionRecord) -> String {
    let set = record.config.seed_set.map_or("none", SeedSetType::as_str);
    let index = record.config.execution_index.unwrap_or(0);
    format!("{set}_{}_{index:03}.json", record.config.criterion)
}

fn run_batch_cmd(a: &RunBatchArgs) -> Result<()> {
    let Some(seed) = a.rng_seed else {
        bail!("--rng-seed is required for run-batch");
    };
    let mut cfg = BatchConfig::new(seed);
    cfg.n_executions = a.executions;
    cfg.max_cycles = a.cycles;
    cfg.parallel = a.parallel;
    if !a.criterion.is_empty() {
        cfg.criteria = a.criterion.clone();
    }
    if !a.seed_set.is_empty() {
        cfg.seed_sets = a.seed_set.clone();
    }
    let data = load(&a.inputs)?;
    let result = run_batch(&cfg, data.inputs()).map_err(|e| anyhow::anyhow!(e.source))?;
    let records = a.out_dir.join(RECORDS_DIR);
    for r in &result.records {
        write_atomic(&records.join(record_file_name(r)), r.to_json().as_bytes())?;
    }
    write_atomic(&a.out_dir.join(METRICS_FILE), metrics_csv(&result.metrics).as_bytes())
}

/// Reads every `*.json` record in `dir`, in file-name order.
pub fn read_records(dir: &Path) -> Result<Vec<ExecutionRecord>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    if paths.is_empty() {
        bail!("no record files in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExecutionRecord::from_json(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect()
}

fn eval(a: &EvalArgs) -> Result<()> {
    let records = read_records(&a.records)?;
    write_atomic(&a.out_dir.join(METRICS_FILE), metrics_csv(&metrics_from_records(&records)).as_bytes())
}

fn plot(a: &PlotDataArgs) -> Result<()> {
    let records = read_records(&a.records)?;
    let labels = load_labels(&a.labels).context("loading labels")?;
    let ranks = match (&a.ranks, a.total_indexed) {
        (Some(p), Some(total)) => Some(load_ranks(p, total).context("loading ranks")?),
        _ => None,
    };
    let data = plot_data(&records, ranks.as_ref(), &labels);
    let out = &a.out_dir;
    write_atomic(&out.join("incidence_by_seed_set.csv"), data.incidence_by_seed_set.as_bytes())?;
    write_atomic(&out.join("criteria_comparison.csv"), data.criteria_comparison.as_bytes())?;
    write_atomic(&out.join("per_cycle_density.csv"), data.density.as_bytes())?;
    write_atomic(&out.join("recall_vs_optimal.csv"), data.recall.as_bytes())?;
    if let Some(cdf) = data.popularity_cdf {
        write_atomic(&out.join("popularity_cdf.csv"), cdf.as_bytes())?;
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    if a.top_k == 0 {
        bail!("--top-k must be at least 1");
    }
    let data = load(&a.inputs)?;
    let dataset = Dataset {
        corpus: data.corpus,
        labels: data.labels,
        denylist: data.denylist,
    };
    let mut state = AppState::new([(a.corpus_id.clone(), dataset)]).with_default_top_k(a.top_k);
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        state = state.with_records_dir(dir);
    }
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(a.listen)
            .await
            .with_context(|| format!("binding {}", a.listen))?;
        eprintln!("listening on {}", listener.local_addr()?);
        sharetrail_service::serve(listener, Arc::new(state)).await?;
        Ok(())
    })
}
