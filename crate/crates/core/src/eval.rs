//! Batch experiments and metrics.
//!
//! A batch runs `n_executions` automated executions for every
//! (seed set, criterion) pair. Execution `i` of a seed set starts from the
//! same initial seed under every criterion, so criteria are compared on
//! identical starting points. Metrics are computed from execution records
//! alone, which lets stored records be re-evaluated later with
//! byte-identical output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Label, LabelSet, PopularityRanks, UrlRef};
use crate::engine::{run_auto_execution, AutoConfig, EngineError, ExecutionRecord, Inputs};
use crate::ranking::CriterionKind;
use crate::rng::{self, StreamRng};
use crate::urlnorm::NormalizedUrl;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("no {0} URLs in the corpus to draw seeds from")]
    InsufficientSeeds(Label),
    #[error("invalid batch config: {0}")]
    Config(String),
    #[error("execution {index} ({seed_set}/{criterion}) failed: {source}")]
    Execution {
        seed_set: SeedSetType,
        criterion: CriterionKind,
        index: u32,
        #[source]
        source: EngineError,
    },
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

/// Credibility mix of the initial seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedSetType {
    /// Seeds only from credible websites.
    Fake0,
    /// Each seed is fake or credible with equal probability.
    Fake50,
    /// Seeds only from fake websites.
    Fake100,
}

impl SeedSetType {
    pub const ALL: [SeedSetType; 3] = [SeedSetType::Fake0, SeedSetType::Fake50, SeedSetType::Fake100];

    pub fn as_str(self) -> &'static str {
        match self {
            SeedSetType::Fake0 => "fake0",
            SeedSetType::Fake50 => "fake50",
            SeedSetType::Fake100 => "fake100",
        }
    }

    fn tag(self) -> u64 {
        match self {
            SeedSetType::Fake0 => 0,
            SeedSetType::Fake50 => 50,
            SeedSetType::Fake100 => 100,
        }
    }
}

impl fmt::Display for SeedSetType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeedSetType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fake0" => Ok(SeedSetType::Fake0),
            "fake50" => Ok(SeedSetType::Fake50),
            "fake100" => Ok(SeedSetType::Fake100),
            other => Err(format!(
                "unknown seed set {other:?} (expected fake0, fake50 or fake100)"
            )),
        }
    }
}

/// Share occurrences whose website carries `label`. Drawing uniformly from
/// this list picks URLs in proportion to how often they were posted.
fn occurrences(corpus: &Corpus, labels: &LabelSet, label: Label) -> Vec<UrlRef> {
    let site_label: Vec<Label> = (0..corpus.site_count() as u32)
        .map(|s| labels.lookup(corpus.site(crate::corpus::SiteRef(s))))
        .collect();
    let mut out = Vec::new();
    for post in 0..corpus.len() as u32 {
        for &url in corpus.post_urls(post) {
            if site_label[corpus.url_site(url).index()] == label {
                out.push(url);
            }
        }
    }
    out
}

/// Draws `n` initial seeds matching `kind`.
pub fn build_seed_pool(
    corpus: &Corpus,
    labels: &LabelSet,
    kind: SeedSetType,
    n: usize,
    rng: &mut StreamRng,
) -> Result<Vec<NormalizedUrl>, EvalError> {
    let fake = occurrences(corpus, labels, Label::Fake);
    let credible = occurrences(corpus, labels, Label::Credible);
    let need_fake = kind != SeedSetType::Fake0;
    let need_credible = kind != SeedSetType::Fake100;
    if need_fake && fake.is_empty() {
        return Err(EvalError::InsufficientSeeds(Label::Fake));
    }
    if need_credible && credible.is_empty() {
        return Err(EvalError::InsufficientSeeds(Label::Credible));
    }
    Ok((0..n)
        .map(|_| {
            let pick_fake = match kind {
                SeedSetType::Fake0 => false,
                SeedSetType::Fake100 => true,
                SeedSetType::Fake50 => rng.random_bool(0.5),
            };
            let pool = if pick_fake { &fake } else { &credible };
            corpus.normalized(pool[rng.random_range(0..pool.len())])
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchConfig {
    pub n_executions: u32,
    pub max_cycles: u32,
    pub criteria: Vec<CriterionKind>,
    pub seed_sets: Vec<SeedSetType>,
    pub master_rng_seed: u64,
    pub ranking_depth: usize,
    /// Worker threads; results do not depend on it.
    pub parallel: usize,
}

impl BatchConfig {
    pub fn new(master_rng_seed: u64) -> Self {
        BatchConfig {
            n_executions: 40,
            max_cycles: 30,
            criteria: CriterionKind::ALL.to_vec(),
            seed_sets: SeedSetType::ALL.to_vec(),
            master_rng_seed,
            ranking_depth: crate::engine::DEFAULT_RANKING_DEPTH,
            parallel: 1,
        }
    }

    fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::Config(m.to_string()));
        if self.n_executions == 0 {
            return bad("n_executions must be at least 1");
        }
        if self.max_cycles == 0 {
            return bad("max_cycles must be at least 1");
        }
        if self.criteria.is_empty() {
            return bad("at least one criterion is required");
        }
        if self.seed_sets.is_empty() {
            return bad("at least one seed set is required");
        }
        if self.parallel == 0 {
            return bad("parallel must be at least 1");
        }
        Ok(())
    }
}

const SEED_DRAW_TAG: u64 = 1;
const EXECUTION_TAG: u64 = 2;

/// Initial seed of execution `index` under `kind`, shared by all criteria.
pub fn initial_seed_for(
    corpus: &Corpus,
    labels: &LabelSet,
    master: u64,
    kind: SeedSetType,
    index: u32,
) -> Result<NormalizedUrl, EvalError> {
    let mut r = rng::stream(rng::derive(master, &[SEED_DRAW_TAG, kind.tag()]), index as u64);
    Ok(build_seed_pool(corpus, labels, kind, 1, &mut r)?.remove(0))
}

fn criterion_tag(c: CriterionKind) -> u64 {
    match c {
        CriterionKind::HIndex => 1,
        CriterionKind::MostPop => 2,
        CriterionKind::Random => 3,
    }
}

/// Per-cycle metrics averaged over the executions of one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSeries {
    pub executions: usize,
    /// Mean count of fake top-1 websites in cycles `1..=x`.
    pub cumulative_rank1_fake: Vec<f64>,
    pub cumulative_rank1_fake_min: Vec<u32>,
    pub cumulative_rank1_fake_max: Vec<u32>,
    /// Fraction of executions whose cycle-`x` top-1 website is fake.
    pub per_cycle_density: Vec<f64>,
    /// Mean of `cumulative / x` per execution.
    pub recall_vs_optimal: Vec<f64>,
}

/// Metric series of a single execution.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionSeries {
    pub cumulative: Vec<u32>,
    pub density: Vec<f64>,
    pub recall: Vec<f64>,
}

/// Cycles that did not run (the execution was exhausted) count as
/// non-fake. Unknown-labeled top-1 websites count as non-fake.
pub fn execution_series(record: &ExecutionRecord, cycles: usize) -> ExecutionSeries {
    let mut cumulative = Vec::with_capacity(cycles);
    let mut density = Vec::with_capacity(cycles);
    let mut recall = Vec::with_capacity(cycles);
    let mut hits = 0u32;
    for (i, label) in record.top1_labels(cycles).into_iter().enumerate() {
        let fake = label.is_some_and(Label::is_fake);
        hits += fake as u32;
        cumulative.push(hits);
        density.push(if fake { 1.0 } else { 0.0 });
        recall.push(hits as f64 / (i + 1) as f64);
    }
    ExecutionSeries {
        cumulative,
        density,
        recall,
    }
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

pub fn aggregate(records: &[&ExecutionRecord], cycles: usize) -> MetricSeries {
    let series: Vec<ExecutionSeries> = records.iter().map(|r| execution_series(r, cycles)).collect();
    let n = series.len();
    let col = |f: &dyn Fn(&ExecutionSeries) -> f64| mean(series.iter().map(f), n);
    MetricSeries {
        executions: n,
        cumulative_rank1_fake: (0..cycles).map(|x| col(&|s| s.cumulative[x] as f64)).collect(),
        cumulative_rank1_fake_min: (0..cycles)
            .map(|x| series.iter().map(|s| s.cumulative[x]).min().unwrap_or(0))
            .collect(),
        cumulative_rank1_fake_max: (0..cycles)
            .map(|x| series.iter().map(|s| s.cumulative[x]).max().unwrap_or(0))
            .collect(),
        per_cycle_density: (0..cycles).map(|x| col(&|s| s.density[x])).collect(),
        recall_vs_optimal: (0..cycles).map(|x| col(&|s| s.recall[x])).collect(),
    }
}

/// Grouping key of a record in metric tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    pub seed_set: Option<SeedSetType>,
    pub criterion: CriterionKind,
}

impl GroupKey {
    pub fn of(record: &ExecutionRecord) -> Self {
        GroupKey {
            seed_set: record.config.seed_set,
            criterion: record.config.criterion,
        }
    }

    pub fn seed_set_name(&self) -> &'static str {
        self.seed_set.map_or("none", SeedSetType::as_str)
    }
}

/// Metrics for every (seed set, criterion) group found in `records`.
/// Within a group records are taken in execution-index order, so the
/// result does not depend on the order of `records`.
pub fn metrics_from_records(records: &[ExecutionRecord]) -> BTreeMap<GroupKey, MetricSeries> {
    let mut groups: BTreeMap<GroupKey, Vec<&ExecutionRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(GroupKey::of(r)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(key, mut recs)| {
            recs.sort_by_key(|r| r.config.execution_index);
            let cycles = recs.iter().map(|r| r.config.max_cycles).max().unwrap_or(0) as usize;
            (key, aggregate(&recs, cycles))
        })
        .collect()
}

/// `seed_set,criterion,cycle,metric,value` rows, one per metric per cycle.
pub fn metrics_csv(metrics: &BTreeMap<GroupKey, MetricSeries>) -> String {
    let mut out = String::from("seed_set,criterion,cycle,metric,value\n");
    for (key, m) in metrics {
        for x in 0..m.per_cycle_density.len() {
            let rows: [(&str, String); 5] = [
                ("cumulative_rank1_fake", m.cumulative_rank1_fake[x].to_string()),
                ("cumulative_rank1_fake_min", m.cumulative_rank1_fake_min[x].to_string()),
                ("cumulative_rank1_fake_max", m.cumulative_rank1_fake_max[x].to_string()),
                ("per_cycle_density", m.per_cycle_density[x].to_string()),
                ("recall_vs_optimal", m.recall_vs_optimal[x].to_string()),
            ];
            for (metric, value) in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    key.seed_set_name(),
                    key.criterion,
                    x + 1,
                    metric,
                    value
                );
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    /// Ordered by seed set, criterion, then execution index.
    pub records: Vec<ExecutionRecord>,
    pub metrics: BTreeMap<GroupKey, MetricSeries>,
}

/// A failed batch keeps the executions that did finish; their metrics are
/// not meaningful as a batch.
#[derive(Debug, Error)]
#[error("batch aborted: {source}")]
pub struct BatchError {
    #[source]
    pub source: EvalError,
    pub partial_records: Vec<ExecutionRecord>,
}

pub fn run_batch(config: &BatchConfig, inputs: Inputs<'_>) -> Result<BatchResult, BatchError> {
    let fail = |source| BatchError {
        source,
        partial_records: Vec::new(),
    };
    config.validate().map_err(fail)?;

    let mut seeds: BTreeMap<(SeedSetType, u32), NormalizedUrl> = BTreeMap::new();
    let seed_sets: BTreeSet<SeedSetType> = config.seed_sets.iter().copied().collect();
    let criteria: BTreeSet<CriterionKind> = config.criteria.iter().copied().collect();
    for &kind in &seed_sets {
        for i in 0..config.n_executions {
            let seed = initial_seed_for(inputs.corpus, inputs.labels, config.master_rng_seed, kind, i)
                .map_err(fail)?;
            seeds.insert((kind, i), seed);
        }
    }

    let tasks: Vec<(SeedSetType, CriterionKind, u32)> = seed_sets
        .iter()
        .flat_map(|&s| {
            criteria
                .iter()
                .flat_map(move |&c| (0..config.n_executions).map(move |i| (s, c, i)))
        })
        .collect();

    let run = |&(seed_set, criterion, index): &(SeedSetType, CriterionKind, u32)| {
        let auto = AutoConfig {
            initial_seed: seeds[&(seed_set, index)].canonical.clone(),
            criterion,
            max_cycles: config.max_cycles,
            rng_seed: rng::derive(
                config.master_rng_seed,
                &[EXECUTION_TAG, seed_set.tag(), criterion_tag(criterion), index as u64],
            ),
            ranking_depth: config.ranking_depth,
            seed_set: Some(seed_set),
            execution_index: Some(index),
        };
        run_auto_execution(inputs, &auto).map_err(|source| EvalError::Execution {
            seed_set,
            criterion,
            index,
            source,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallel)
        .build()
        .map_err(|e| fail(EvalError::Pool(e.to_string())))?;
    let outcomes: Vec<Result<ExecutionRecord, EvalError>> =
        pool.install(|| tasks.par_iter().map(run).collect());

    let mut records = Vec::with_capacity(outcomes.len());
    let mut first_error = None;
    for outcome in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(source) = first_error {
        return Err(BatchError {
            source,
            partial_records: records,
        });
    }
    let metrics = metrics_from_records(&records);
    Ok(BatchResult { records, metrics })
}

/// One step of a popularity CDF. `percentile` is `None` for the bucket of
/// websites missing from the rank list, which always comes last.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfPoint {
    pub percentile: Option<f64>,
    pub cumulative_fraction: f64,
}

/// CDF of popularity percentiles (`rank / total_indexed`) over the distinct
/// fake-labeled websites in `discovered`.
pub fn popularity_cdf(
    discovered: &[String],
    ranks: &PopularityRanks,
    labels: &LabelSet,
) -> Vec<CdfPoint> {
    let sites: BTreeSet<&str> = discovered
        .iter()
        .map(String::as_str)
        .filter(|w| labels.lookup(w).is_fake())
        .collect();
    let n = sites.len();
    let mut ranked: Vec<u64> = Vec::new();
    let mut unranked = 0usize;
    for w in &sites {
        match ranks.rank(w) {
            Some(r) => ranked.push(r),
            None => unranked += 1,
        }
    }
    ranked.sort_unstable();
    let total = ranks.total_indexed() as f64;
    let mut out: Vec<CdfPoint> = Vec::new();
    for (i, &r) in ranked.iter().enumerate() {
        let fraction = (i + 1) as f64 / n as f64;
        let percentile = r as f64 / total;
        match out.last_mut() {
            Some(last) if last.percentile == Some(percentile) => last.cumulative_fraction = fraction,
            _ => out.push(CdfPoint {
                percentile: Some(percentile),
                cumulative_fraction: fraction,
            }),
        }
    }
    if unranked > 0 {
        out.push(CdfPoint {
            percentile: None,
            cumulative_fraction: 1.0,
        });
    }
    out
}

pub fn cdf_csv(points: &[CdfPoint]) -> String {
    let mut out = String::from("percentile,cumulative_fraction\n");
    for p in points {
        let x = p.percentile.map_or_else(|| "unranked".to_string(), |v| v.to_string());
        let _ = writeln!(out, "{x},{}", p.cumulative_fraction);
    }
    out
}

/// Plot-ready CSV tables derived from batch records.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    /// Cumulative top-1 fake incidence (mean, min, max) for every group.
    pub incidence_by_seed_set: String,
    /// Cumulative incidence per criterion under fake-only seeds.
    pub criteria_comparison: String,
    /// Per-cycle density per criterion under fake-only seeds.
    pub density: String,
    /// Recall against the optimum per criterion under fake-only seeds.
    pub recall: String,
    /// Popularity CDF of websites discovered by H-index executions with
    /// fake-only seeds, when ranks are provided.
    pub popularity_cdf: Option<String>,
}

pub fn plot_data(
    records: &[ExecutionRecord],
    ranks: Option<&PopularityRanks>,
    labels: &LabelSet,
) -> PlotData {
    let metrics = metrics_from_records(records);
    let mut incidence = String::from("seed_set,criterion,cycle,mean,min,max\n");
    for (key, m) in &metrics {
        for x in 0..m.cumulative_rank1_fake.len() {
            let _ = writeln!(
                incidence,
                "{},{},{},{},{},{}",
                key.seed_set_name(),
                key.criterion,
                x + 1,
                m.cumulative_rank1_fake[x],
                m.cumulative_rank1_fake_min[x],
                m.cumulative_rank1_fake_max[x]
            );
        }
    }
    let per_criterion = |pick: &dyn Fn(&MetricSeries) -> &Vec<f64>| {
        let mut out = String::from("criterion,cycle,value\n");
        for (key, m) in &metrics {
            if key.seed_set != Some(SeedSetType::Fake100) {
                continue;
            }
            for (x, v) in pick(m).iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", key.criterion, x + 1, v);
            }
        }
        out
    };
    let popularity_cdf = ranks.map(|ranks| {
        let discovered: Vec<String> = records
            .iter()
            .filter(|r| {
                r.config.criterion == CriterionKind::HIndex
                    && r.config.seed_set == Some(SeedSetType::Fake100)
            })
            .flat_map(|r| r.discovered_websites.iter().map(|d| d.website.clone()))
            .collect();
        cdf_csv(&popularity_cdf(&discovered, ranks, labels))
    });
    PlotData {
        incidence_by_seed_set: incidence,
        criteria_comparison: per_criterion(&|m| &m.cumulative_rank1_fake),
        density: per_criterion(&|m| &m.per_cycle_density),
        recall: per_criterion(&|m| &m.recall_vs_optimal),
        popularity_cdf,
    }
}
