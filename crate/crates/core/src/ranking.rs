//! Share index and website ranking.
//!
//! Websites play the role of authors, their URLs the role of publications
//! and every distinct identified user who shared a URL counts as one
//! citation of it. URL popularity inside a website is the raw number of
//! share occurrences.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Denylist, SiteRef, UrlRef, UserRef};
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RankingError {
    #[error("website {0:?} is not in the share index")]
    UnknownWebsite(String),
}

/// Largest `h` such that at least `h` of the counts are `>= h`.
pub fn hindex(citations: &[u32]) -> u32 {
    let n = citations.len();
    // bucket[c] = number of counts equal to c, with counts above n clamped to n
    let mut buckets = vec![0usize; n + 1];
    for &c in citations {
        buckets[(c as usize).min(n)] += 1;
    }
    let mut at_least = 0;
    for h in (0..=n).rev() {
        at_least += buckets[h];
        if at_least >= h {
            return h as u32;
        }
    }
    0
}

/// Share counts of one URL among the identified users.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlStat {
    pub url: Arc<str>,
    #[serde(skip)]
    pub url_ref: Option<UrlRef>,
    pub distinct_sharers: u32,
    pub total_shares: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteShares {
    pub website: Arc<str>,
    /// Sorted by canonical URL.
    pub urls: Vec<UrlStat>,
}

/// Per-website, per-URL share counts restricted to an identified user set,
/// with denylisted and excluded websites left out.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ShareIndex {
    /// Sorted by website.
    sites: Vec<SiteShares>,
}

impl ShareIndex {
    pub fn sites(&self) -> &[SiteShares] {
        &self.sites
    }

    pub fn site(&self, website: &str) -> Option<&SiteShares> {
        self.sites
            .binary_search_by(|s| (*s.website).cmp(website))
            .ok()
            .map(|i| &self.sites[i])
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    distinct: u32,
    total: u32,
}

/// Running share counts over a growing user set.
///
/// Users are only ever added, so each cycle pays for the posts of its new
/// users instead of recounting the whole cumulative set.
#[derive(Debug, Clone)]
pub struct ShareAccumulator {
    counts: Vec<Counts>,
    touched: Vec<UrlRef>,
    members: Vec<bool>,
    member_count: usize,
}

impl ShareAccumulator {
    pub fn new(corpus: &Corpus) -> Self {
        Self {
            counts: vec![Counts::default(); corpus.url_count()],
            touched: Vec::new(),
            members: vec![false; corpus.user_count()],
            member_count: 0,
        }
    }

    pub fn contains(&self, user: UserRef) -> bool {
        self.members[user.index()]
    }

    pub fn user_count(&self) -> usize {
        self.member_count
    }

    /// Adds `user`'s posts; returns false if the user was already counted.
    pub fn add_user(&mut self, corpus: &Corpus, user: UserRef) -> bool {
        if std::mem::replace(&mut self.members[user.index()], true) {
            return false;
        }
        self.member_count += 1;
        let mut seen: Vec<UrlRef> = Vec::new();
        for &post in corpus.posts_by(user) {
            for &url in corpus.post_urls(post) {
                let c = &mut self.counts[url.index()];
                if c.total == 0 {
                    self.touched.push(url);
                }
                c.total += 1;
                if !seen.contains(&url) {
                    seen.push(url);
                }
            }
        }
        for url in seen {
            self.counts[url.index()].distinct += 1;
        }
        true
    }

    /// Groups the counted URLs by website, keeping only websites for which
    /// `eligible` holds.
    pub fn snapshot(&self, corpus: &Corpus, eligible: impl Fn(SiteRef) -> bool) -> ShareIndex {
        let mut by_site: HashMap<SiteRef, Vec<UrlStat>> = HashMap::new();
        let mut verdicts: HashMap<SiteRef, bool> = HashMap::new();
        for &url in &self.touched {
            let site = corpus.url_site(url);
            if !*verdicts.entry(site).or_insert_with(|| eligible(site)) {
                continue;
            }
            let c = self.counts[url.index()];
            by_site.entry(site).or_default().push(UrlStat {
                url: corpus.url(url).clone(),
                url_ref: Some(url),
                distinct_sharers: c.distinct,
                total_shares: c.total,
            });
        }
        let mut sites: Vec<SiteShares> = by_site
            .into_iter()
            .map(|(site, mut urls)| {
                urls.sort_by(|a, b| a.url.cmp(&b.url));
                SiteShares {
                    website: corpus.site(site).clone(),
                    urls,
                }
            })
            .collect();
        sites.sort_by(|a, b| a.website.cmp(&b.website));
        ShareIndex { sites }
    }
}

/// Index over the posts of `users`, skipping denylisted and excluded
/// websites. Unknown user ids are ignored.
pub fn build_index<'a>(
    corpus: &Corpus,
    users: impl IntoIterator<Item = &'a str>,
    denylist: &Denylist,
    excluded: &BTreeSet<String>,
) -> ShareIndex {
    let mut acc = ShareAccumulator::new(corpus);
    for id in users {
        if let Some(u) = corpus.user_ref(id) {
            acc.add_user(corpus, u);
        }
    }
    acc.snapshot(corpus, |site| {
        let w = corpus.site(site);
        !denylist.contains(w) && !excluded.contains(&**w)
    })
}

/// Website ranking criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    HIndex,
    MostPop,
    /// Uniform permutation drawn from stream `stream` of `seed`.
    Random { seed: u64, stream: u64 },
}

impl Criterion {
    pub fn kind(self) -> CriterionKind {
        match self {
            Criterion::HIndex => CriterionKind::HIndex,
            Criterion::MostPop => CriterionKind::MostPop,
            Criterion::Random { .. } => CriterionKind::Random,
        }
    }
}

/// Criterion without its random stream, as named on the command line and
/// in records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionKind {
    HIndex,
    MostPop,
    Random,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 3] =
        [CriterionKind::HIndex, CriterionKind::MostPop, CriterionKind::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            CriterionKind::HIndex => "hindex",
            CriterionKind::MostPop => "mostpop",
            CriterionKind::Random => "random",
        }
    }

    /// Attaches a random stream where the kind needs one.
    pub fn with_stream(self, seed: u64, stream: u64) -> Criterion {
        match self {
            CriterionKind::HIndex => Criterion::HIndex,
            CriterionKind::MostPop => Criterion::MostPop,
            CriterionKind::Random => Criterion::Random { seed, stream },
        }
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CriterionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hindex" | "h-index" => Ok(CriterionKind::HIndex),
            "mostpop" => Ok(CriterionKind::MostPop),
            "random" => Ok(CriterionKind::Random),
            other => Err(format!(
                "unknown criterion {other:?} (expected hindex, mostpop or random)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebsiteScore {
    pub website: String,
    pub h_index: u32,
    /// Share count of the website's most-shared URL.
    pub most_pop_share_count: u32,
    pub total_shares: u64,
    /// Sum over URLs of their distinct sharers.
    pub total_distinct_sharers: u64,
}

impl WebsiteScore {
    pub fn of(site: &SiteShares) -> Self {
        let citations: Vec<u32> = site.urls.iter().map(|u| u.distinct_sharers).collect();
        WebsiteScore {
            website: site.website.to_string(),
            h_index: hindex(&citations),
            most_pop_share_count: site.urls.iter().map(|u| u.total_shares).max().unwrap_or(0),
            total_shares: site.urls.iter().map(|u| u.total_shares as u64).sum(),
            total_distinct_sharers: citations.iter().map(|&c| c as u64).sum(),
        }
    }
}

fn hindex_order(a: &WebsiteScore, b: &WebsiteScore) -> Ordering {
    b.h_index
        .cmp(&a.h_index)
        .then(b.total_distinct_sharers.cmp(&a.total_distinct_sharers))
        .then(b.total_shares.cmp(&a.total_shares))
        .then(a.website.cmp(&b.website))
}

fn mostpop_order(a: &WebsiteScore, b: &WebsiteScore) -> Ordering {
    b.most_pop_share_count
        .cmp(&a.most_pop_share_count)
        .then(b.total_shares.cmp(&a.total_shares))
        .then(a.website.cmp(&b.website))
}

/// Total order of the index's websites under `criterion`.
pub fn rank_websites(index: &ShareIndex, criterion: Criterion) -> Vec<WebsiteScore> {
    // index sites are already in domain order, which Random shuffles from
    let mut scores: Vec<WebsiteScore> = index.sites.iter().map(WebsiteScore::of).collect();
    match criterion {
        Criterion::HIndex => scores.sort_by(hindex_order),
        Criterion::MostPop => scores.sort_by(mostpop_order),
        Criterion::Random { seed, stream } => {
            let mut r = rng::stream(seed, stream);
            scores.shuffle(&mut r);
        }
    }
    scores
}

fn url_order(a: &UrlStat, b: &UrlStat) -> Ordering {
    b.total_shares
        .cmp(&a.total_shares)
        .then(b.distinct_sharers.cmp(&a.distinct_sharers))
        .then(a.url.cmp(&b.url))
}

/// URLs of `website` by total shares, then distinct sharers, then URL.
pub fn rank_urls(index: &ShareIndex, website: &str) -> Result<Vec<UrlStat>, RankingError> {
    let site = index
        .site(website)
        .ok_or_else(|| RankingError::UnknownWebsite(website.to_string()))?;
    let mut urls = site.urls.clone();
    urls.sort_by(url_order);
    Ok(urls)
}

/// Candidate seeds offered for one website.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Candidate {
    pub rank: usize,
    pub score: WebsiteScore,
    pub urls: Vec<UrlStat>,
    /// The site has `h = 0`, so its single most-shared URL is offered.
    pub fallback: bool,
}

/// Top-h URLs of each of the first `top_k_websites` ranked websites.
pub fn candidates(
    ranking: &[WebsiteScore],
    index: &ShareIndex,
    top_k_websites: usize,
) -> Vec<Candidate> {
    ranking
        .iter()
        .take(top_k_websites.max(1))
        .enumerate()
        .filter_map(|(i, score)| {
            let urls = rank_urls(index, &score.website).ok()?;
            if urls.is_empty() {
                return None;
            }
            let fallback = score.h_index == 0;
            let take = (score.h_index as usize).max(1);
            Some(Candidate {
                rank: i + 1,
                score: score.clone(),
                urls: urls.into_iter().take(take).collect(),
                fallback,
            })
        })
        .collect()
}
