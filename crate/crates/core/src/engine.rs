//! Discovery cycles.
//!
//! A cycle identifies the users who shared the newest seed, adds them to
//! the cumulative user set, ranks the websites they shared and picks the
//! next seed. In automated mode the pick is the most-shared URL of the
//! top-ranked website; in interactive mode the cycle stops with a
//! candidate list and waits for [`InteractiveSession::choose_seed`].
//!
//! Every website that contributed a seed (the initial one included) is
//! removed from all later rankings, so an execution never holds two seeds
//! from the same website.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Denylist, Label, LabelSet, UrlRef, UserRef};
use crate::eval::SeedSetType;
use crate::ranking::{
    candidates, rank_urls, rank_websites, Candidate, CriterionKind, ShareAccumulator,
    ShareIndex, WebsiteScore,
};
use crate::urlnorm::{NormalizedUrl, UrlError, UrlNormalizer};

pub const RECORD_VERSION: u32 = 1;
pub const DEFAULT_RANKING_DEPTH: usize = 10;
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("seed URL rejected: {0}")]
    InvalidSeed(#[from] UrlError),
    #[error("seed {0:?} was not shared by anyone in the corpus")]
    UnresolvableSeed(String),
    #[error("{0:?} is not among the pending candidates")]
    NotACandidate(String),
    #[error("session is finished")]
    Finished,
    #[error("max_cycles must be at least 1")]
    ZeroCycles,
}

/// The read-only inputs of an execution.
#[derive(Debug, Clone, Copy)]
pub struct Inputs<'a> {
    pub corpus: &'a Corpus,
    pub labels: &'a LabelSet,
    pub denylist: &'a Denylist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedOrigin {
    Initial,
    Auto,
    Human,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub url: NormalizedUrl,
    /// 0 for the initial seed.
    pub cycle_added: u32,
    pub origin: SeedOrigin,
    pub label_at_selection: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle_no: u32,
    pub new_users_found: u64,
    pub cumulative_users: u64,
    /// Websites eligible for ranking this cycle.
    pub ranked_websites: u64,
    /// Leading entries of the ranking; depth set by the execution config.
    pub ranking: Vec<WebsiteScore>,
    pub top1_website: String,
    pub top1_label: Label,
    pub selected_seed: SeedRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionMode {
    Auto,
    Interactive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordConfig {
    pub mode: ExecutionMode,
    pub criterion: CriterionKind,
    pub seed_set: Option<SeedSetType>,
    pub execution_index: Option<u32>,
    pub rng_seed: u64,
    pub max_cycles: u32,
    pub ranking_depth: usize,
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionStatus {
    Running,
    /// Ran `max_cycles` cycles.
    Completed,
    /// Stopped early because no eligible website was left to rank.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscoveredWebsite {
    pub website: String,
    pub label: Label,
    pub cycle: u32,
}

/// Complete audit trail of one execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub record_version: u32,
    pub config: RecordConfig,
    pub initial_seed: SeedRecord,
    pub cycles: Vec<CycleRecord>,
    /// Websites of the selected seeds, in cycle order.
    pub discovered_websites: Vec<DiscoveredWebsite>,
    pub status: ExecutionStatus,
    /// Cycle whose ranking came back empty, when exhausted.
    pub exhausted_at_cycle: Option<u32>,
    /// Candidate lists that fell back to one URL for an `h = 0` website.
    pub zero_h_fallbacks: u32,
}

impl ExecutionRecord {
    /// Stable JSON form with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Label of the top-ranked website for cycles `1..=n`; cycles that
    /// did not run are `None`.
    pub fn top1_labels(&self, n: usize) -> Vec<Option<Label>> {
        (0..n)
            .map(|i| self.cycles.get(i).map(|c| c.top1_label))
            .collect()
    }

    pub fn seeds(&self) -> impl Iterator<Item = &SeedRecord> {
        std::iter::once(&self.initial_seed).chain(self.cycles.iter().map(|c| &c.selected_seed))
    }
}

/// Ranking state of a cycle that has been computed but not yet resolved
/// by a seed choice.
#[derive(Debug, Clone)]
pub struct OpenCycle {
    pub cycle_no: u32,
    pub new_users_found: u64,
    pub cumulative_users: u64,
    pub index: ShareIndex,
    pub ranking: Vec<WebsiteScore>,
}

/// Mutable state of one execution, independent of how seeds get chosen.
#[derive(Debug, Clone)]
struct Execution {
    record: ExecutionRecord,
    acc: ShareAccumulator,
    excluded: Vec<bool>,
    newest_seed: UrlRef,
}

impl Execution {
    fn start(inputs: Inputs<'_>, config: RecordConfig, initial_seed: &str) -> Result<Self, EngineError> {
        if config.max_cycles == 0 {
            return Err(EngineError::ZeroCycles);
        }
        let corpus = inputs.corpus;
        let seed = resolve_seed(corpus, initial_seed)?;
        let url = corpus.normalized(seed);
        let mut excluded = vec![false; corpus.site_count()];
        excluded[corpus.url_site(seed).index()] = true;
        let initial_seed = SeedRecord {
            label_at_selection: inputs.labels.lookup(&url.website),
            url,
            cycle_added: 0,
            origin: SeedOrigin::Initial,
        };
        Ok(Execution {
            record: ExecutionRecord {
                record_version: RECORD_VERSION,
                config,
                initial_seed,
                cycles: Vec::new(),
                discovered_websites: Vec::new(),
                status: ExecutionStatus::Running,
                exhausted_at_cycle: None,
                zero_h_fallbacks: 0,
            },
            acc: ShareAccumulator::new(corpus),
            excluded,
            newest_seed: seed,
        })
    }

    fn done(&self) -> bool {
        self.record.status != ExecutionStatus::Running
    }

    /// Sharer identification, index build and ranking for the next cycle.
    /// `None` when the ranking is empty,
    /// which ends the execution.
    fn open_cycle(&mut self, inputs: Inputs<'_>) -> Option<OpenCycle> {
        let corpus = inputs.corpus;
        let cycle_no = self.record.cycles.len() as u32 + 1;
        let mut new_users = 0u64;
        for &user in corpus.sharers(self.newest_seed) {
            if self.acc.add_user(corpus, user) {
                new_users += 1;
            }
        }
        let excluded = &self.excluded;
        let index = self.acc.snapshot(corpus, |site| {
            !excluded[site.index()] && !inputs.denylist.contains(corpus.site(site))
        });
        let criterion = self
            .record
            .config
            .criterion
            .with_stream(self.record.config.rng_seed, cycle_no as u64);
        let ranking = rank_websites(&index, criterion);
        if ranking.is_empty() {
            self.record.status = ExecutionStatus::Exhausted;
            self.record.exhausted_at_cycle = Some(cycle_no);
            return None;
        }
        Some(OpenCycle {
            cycle_no,
            new_users_found: new_users,
            cumulative_users: self.acc.user_count() as u64,
            index,
            ranking,
        })
    }

    /// Records the open cycle with `chosen` as its new seed.
    fn close_cycle(
        &mut self,
        inputs: Inputs<'_>,
        open: OpenCycle,
        chosen: UrlRef,
        origin: SeedOrigin,
    ) -> &CycleRecord {
        let corpus = inputs.corpus;
        let url = corpus.normalized(chosen);
        let label = inputs.labels.lookup(&url.website);
        self.excluded[corpus.url_site(chosen).index()] = true;
        self.newest_seed = chosen;
        self.record.discovered_websites.push(DiscoveredWebsite {
            website: url.website.clone(),
            label,
            cycle: open.cycle_no,
        });
        let top1 = &open.ranking[0];
        let depth = self.record.config.ranking_depth;
        let cycle = CycleRecord {
            cycle_no: open.cycle_no,
            new_users_found: open.new_users_found,
            cumulative_users: open.cumulative_users,
            ranked_websites: open.ranking.len() as u64,
            top1_label: inputs.labels.lookup(&top1.website),
            top1_website: top1.website.clone(),
            ranking: open.ranking.into_iter().take(depth).collect(),
            selected_seed: SeedRecord {
                url,
                cycle_added: open.cycle_no,
                origin,
                label_at_selection: label,
            },
        };
        self.record.cycles.push(cycle);
        if self.record.cycles.len() as u32 >= self.record.config.max_cycles {
            self.record.status = ExecutionStatus::Completed;
        }
        self.record.cycles.last().expect("just pushed")
    }
}

fn resolve_seed(corpus: &Corpus, raw: &str) -> Result<UrlRef, EngineError> {
    let n = UrlNormalizer::default().normalize_lenient(raw)?;
    corpus
        .url_ref(&n.canonical)
        .filter(|&u| !corpus.sharers(u).is_empty())
        .ok_or(EngineError::UnresolvableSeed(n.canonical))
}

/// Users with at least one post containing `seed`.
pub fn find_sharers(corpus: &Corpus, seed: &NormalizedUrl) -> BTreeSet<String> {
    corpus
        .url_ref(&seed.canonical)
        .map(|u| {
            corpus
                .sharers(u)
                .iter()
                .map(|&s| corpus.user_id(s).to_string())
                .collect()
        })
        .unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutoConfig {
    pub initial_seed: String,
    pub criterion: CriterionKind,
    pub max_cycles: u32,
    pub rng_seed: u64,
    pub ranking_depth: usize,
    pub seed_set: Option<SeedSetType>,
    pub execution_index: Option<u32>,
}

impl AutoConfig {
    pub fn new(initial_seed: impl Into<String>, criterion: CriterionKind, max_cycles: u32, rng_seed: u64) -> Self {
        AutoConfig {
            initial_seed: initial_seed.into(),
            criterion,
            max_cycles,
            rng_seed,
            ranking_depth: DEFAULT_RANKING_DEPTH,
            seed_set: None,
            execution_index: None,
        }
    }
}

/// Automated execution: each cycle's new seed is the most-shared URL of
/// the top-ranked website.
pub fn run_auto_execution(inputs: Inputs<'_>, config: &AutoConfig) -> Result<ExecutionRecord, EngineError> {
    let mut exec = Execution::start(
        inputs,
        RecordConfig {
            mode: ExecutionMode::Auto,
            criterion: config.criterion,
            seed_set: config.seed_set,
            execution_index: config.execution_index,
            rng_seed: config.rng_seed,
            max_cycles: config.max_cycles,
            ranking_depth: config.ranking_depth,
            top_k: None,
        },
        &config.initial_seed,
    )?;
    while !exec.done() {
        let Some(open) = exec.open_cycle(inputs) else {
            break;
        };
        let top = &open.ranking[0].website;
        let chosen = rank_urls(&open.index, top)
            .expect("top website is in the index")
            .first()
            .and_then(|u| u.url_ref)
            .expect("indexed website has a URL");
        exec.close_cycle(inputs, open, chosen, SeedOrigin::Auto);
    }
    Ok(exec.record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    AwaitingChoice,
    Running,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionConfig {
    pub initial_seed: String,
    pub criterion: CriterionKind,
    pub max_cycles: u32,
    pub rng_seed: u64,
    pub top_k: usize,
    pub ranking_depth: usize,
}

impl SessionConfig {
    pub fn new(initial_seed: impl Into<String>, criterion: CriterionKind) -> Self {
        SessionConfig {
            initial_seed: initial_seed.into(),
            criterion,
            max_cycles: 30,
            rng_seed: 0,
            top_k: DEFAULT_TOP_K,
            ranking_depth: DEFAULT_RANKING_DEPTH,
        }
    }
}

#[derive(Debug, Clone)]
struct Pending {
    open: OpenCycle,
    candidates: Vec<Candidate>,
}

/// Human-in-the-loop execution. After creation and after every accepted
/// choice the session either waits on a candidate list or is finished.
///
/// The session does not own its inputs; every call must be given the same
/// [`Inputs`] it was created with.
#[derive(Debug, Clone)]
pub struct InteractiveSession {
    exec: Execution,
    pending: Option<Pending>,
    status: SessionStatus,
}

impl InteractiveSession {
    pub fn start(inputs: Inputs<'_>, config: &SessionConfig) -> Result<Self, EngineError> {
        let exec = Execution::start(
            inputs,
            RecordConfig {
                mode: ExecutionMode::Interactive,
                criterion: config.criterion,
                seed_set: None,
                execution_index: None,
                rng_seed: config.rng_seed,
                max_cycles: config.max_cycles,
                ranking_depth: config.ranking_depth,
                top_k: Some(config.top_k.max(1)),
            },
            &config.initial_seed,
        )?;
        let mut session = InteractiveSession {
            exec,
            pending: None,
            status: SessionStatus::Running,
        };
        session.advance(inputs);
        Ok(session)
    }

    fn advance(&mut self, inputs: Inputs<'_>) {
        self.status = SessionStatus::Running;
        if self.exec.done() {
            self.status = SessionStatus::Finished;
            return;
        }
        match self.exec.open_cycle(inputs) {
            Some(open) => {
                let top_k = self.exec.record.config.top_k.unwrap_or(DEFAULT_TOP_K);
                let candidates = candidates(&open.ranking, &open.index, top_k);
                self.exec.record.zero_h_fallbacks +=
                    candidates.iter().filter(|c| c.fallback).count() as u32;
                self.pending = Some(Pending { open, candidates });
                self.status = SessionStatus::AwaitingChoice;
            }
            None => self.status = SessionStatus::Finished,
        }
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    /// Cycle the session is currently describing: the open cycle while
    /// awaiting a choice, otherwise the last completed one.
    pub fn current_cycle(&self) -> u32 {
        match &self.pending {
            Some(p) => p.open.cycle_no,
            None => self.exec.record.cycles.len() as u32,
        }
    }

    pub fn candidates(&self) -> Option<&[Candidate]> {
        self.pending.as_ref().map(|p| p.candidates.as_slice())
    }

    pub fn open_cycle(&self) -> Option<&OpenCycle> {
        self.pending.as_ref().map(|p| &p.open)
    }

    pub fn record(&self) -> &ExecutionRecord {
        &self.exec.record
    }

    pub fn is_identified(&self, user: UserRef) -> bool {
        self.exec.acc.contains(user)
    }

    /// Accepts `url` (raw or canonical) as the new seed if it is one of the
    /// pending candidates. On error the session is unchanged.
    pub fn choose_seed(&mut self, inputs: Inputs<'_>, url: &str) -> Result<&CycleRecord, EngineError> {
        let pending = match (&self.pending, self.status) {
            (Some(p), SessionStatus::AwaitingChoice) => p,
            _ => return Err(EngineError::Finished),
        };
        let canonical = UrlNormalizer::default()
            .normalize_lenient(url)
            .map(|n| n.canonical)
            .unwrap_or_else(|_| url.to_string());
        let chosen = pending
            .candidates
            .iter()
            .flat_map(|c| &c.urls)
            .find(|u| *u.url == *canonical)
            .and_then(|u| u.url_ref)
            .ok_or_else(|| EngineError::NotACandidate(url.to_string()))?;
        let pending = self.pending.take().expect("checked above");
        self.exec.close_cycle(inputs, pending.open, chosen, SeedOrigin::Human);
        self.advance(inputs);
        Ok(self.exec.record.cycles.last().expect("cycle closed"))
    }
}

/// Replays an interactive session with a fixed list of choices, picking
/// by canonical URL. Stops early if the session finishes.
pub fn replay_choices<'a>(
    inputs: Inputs<'_>,
    config: &SessionConfig,
    choices: impl IntoIterator<Item = &'a str>,
) -> Result<ExecutionRecord, EngineError> {
    let mut session = InteractiveSession::start(inputs, config)?;
    for choice in choices {
        if session.status() == SessionStatus::Finished {
            break;
        }
        session.choose_seed(inputs, choice)?;
    }
    Ok(session.exec.record)
}
