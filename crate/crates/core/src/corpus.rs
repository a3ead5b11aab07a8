//! Input artifacts: post corpora, credibility labels, denylists and
//! popularity ranks.
//!
//! A [`Corpus`] is immutable once built. Users, normalized URLs and websites
//! are interned in first-appearance order so every derived index is a pure
//! function of the post sequence.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::urlnorm::{normalize_domain, NormalizedUrl, UrlNormalizer};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate post_id {0:?}")]
    DuplicatePost(String),
    #[error("line {line}: unknown label {token:?} (expected fake or credible)")]
    UnknownLabel { line: usize, token: String },
    #[error("line {line}: empty domain")]
    EmptyDomain { line: usize },
    #[error("conflicting labels for domain {0:?}")]
    ConflictingLabel(String),
    #[error("duplicate domain {0:?}")]
    DuplicateDomain(String),
    #[error("line {line}: invalid rank {value:?}")]
    InvalidRank { line: usize, value: String },
    #[error("rank {rank} of {domain:?} exceeds total_indexed {total}")]
    RankExceedsTotal { domain: String, rank: u64, total: u64 },
    #[error("total_indexed must be a positive integer")]
    InvalidTotal,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One social-media publication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub user_id: String,
    pub timestamp: i64,
    pub urls: Vec<String>,
}

impl Post {
    fn validate(&self) -> Result<(), String> {
        if self.post_id.is_empty() {
            return Err("empty post_id".into());
        }
        if self.user_id.is_empty() {
            return Err("empty user_id".into());
        }
        if self.timestamp < 0 {
            return Err(format!("negative timestamp {}", self.timestamp));
        }
        if self.urls.iter().any(|u| u.is_empty()) {
            return Err("empty URL string".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Keep only posts with `start <= timestamp < end`.
    pub time_window: Option<(i64, i64)>,
}

macro_rules! interned_id {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

interned_id!(UserRef);
interned_id!(UrlRef);
interned_id!(SiteRef);

#[derive(Debug, Clone)]
struct UrlEntry {
    canonical: Arc<str>,
    site: SiteRef,
}

/// Load-time counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LoadStats {
    /// URLs that failed normalization and were dropped.
    pub dropped_urls: usize,
    /// Posts outside the configured time window.
    pub filtered_posts: usize,
}

/// An immutable snapshot of posts plus derived indices.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    posts: Vec<Post>,
    post_author: Vec<UserRef>,
    post_urls: Vec<Vec<UrlRef>>,
    users: Vec<Arc<str>>,
    user_lookup: HashMap<Arc<str>, UserRef>,
    user_posts: Vec<Vec<u32>>,
    urls: Vec<UrlEntry>,
    url_lookup: HashMap<Arc<str>, UrlRef>,
    url_sharers: Vec<Vec<UserRef>>,
    url_posts: Vec<Vec<u32>>,
    sites: Vec<Arc<str>>,
    site_lookup: HashMap<Arc<str>, SiteRef>,
    stats: LoadStats,
}

impl Corpus {
    /// Builds a corpus from posts in order. URLs that fail normalization are
    /// dropped and counted in [`LoadStats::dropped_urls`].
    pub fn from_posts(
        posts: impl IntoIterator<Item = Post>,
        normalizer: &UrlNormalizer<'_>,
        options: LoadOptions,
    ) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::default();
        let mut seen_ids: HashMap<String, ()> = HashMap::new();
        for post in posts {
            if seen_ids.insert(post.post_id.clone(), ()).is_some() {
                return Err(CorpusError::DuplicatePost(post.post_id));
            }
            corpus.push(post, normalizer, options);
        }
        Ok(corpus)
    }

    fn push(&mut self, post: Post, normalizer: &UrlNormalizer<'_>, options: LoadOptions) {
        if let Some((start, end)) = options.time_window {
            if post.timestamp < start || post.timestamp >= end {
                self.stats.filtered_posts += 1;
                return;
            }
        }
        let post_idx = self.posts.len() as u32;
        let author = self.intern_user(&post.user_id);
        self.user_posts[author.index()].push(post_idx);

        let mut refs: Vec<UrlRef> = Vec::with_capacity(post.urls.len());
        for raw in &post.urls {
            match normalizer.normalize(raw) {
                Ok(n) => {
                    let url = self.intern_url(n);
                    // a URL repeated inside one post is a single share
                    if !refs.contains(&url) {
                        refs.push(url);
                    }
                }
                Err(_) => self.stats.dropped_urls += 1,
            }
        }
        for &url in &refs {
            let sharers = &mut self.url_sharers[url.index()];
            if let Err(pos) = sharers.binary_search(&author) {
                sharers.insert(pos, author);
            }
            self.url_posts[url.index()].push(post_idx);
        }
        self.post_author.push(author);
        self.post_urls.push(refs);
        self.posts.push(post);
    }

    fn intern_user(&mut self, user_id: &str) -> UserRef {
        if let Some(&u) = self.user_lookup.get(user_id) {
            return u;
        }
        let u = UserRef(self.users.len() as u32);
        let key: Arc<str> = Arc::from(user_id);
        self.users.push(key.clone());
        self.user_lookup.insert(key, u);
        self.user_posts.push(Vec::new());
        u
    }

    fn intern_url(&mut self, n: NormalizedUrl) -> UrlRef {
        if let Some(&u) = self.url_lookup.get(n.canonical.as_str()) {
            return u;
        }
        let site = match self.site_lookup.get(n.website.as_str()) {
            Some(&s) => s,
            None => {
                let s = SiteRef(self.sites.len() as u32);
                let key: Arc<str> = Arc::from(n.website);
                self.sites.push(key.clone());
                self.site_lookup.insert(key, s);
                s
            }
        };
        let u = UrlRef(self.urls.len() as u32);
        let key: Arc<str> = Arc::from(n.canonical);
        self.urls.push(UrlEntry {
            canonical: key.clone(),
            site,
        });
        self.url_lookup.insert(key, u);
        self.url_sharers.push(Vec::new());
        self.url_posts.push(Vec::new());
        u
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn stats(&self) -> LoadStats {
        self.stats
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn url_count(&self) -> usize {
        self.urls.len()
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    pub fn user_ref(&self, user_id: &str) -> Option<UserRef> {
        self.user_lookup.get(user_id).copied()
    }

    pub fn user_id(&self, user: UserRef) -> &str {
        &self.users[user.index()]
    }

    pub fn url_ref(&self, canonical: &str) -> Option<UrlRef> {
        self.url_lookup.get(canonical).copied()
    }

    pub fn url(&self, url: UrlRef) -> &Arc<str> {
        &self.urls[url.index()].canonical
    }

    pub fn url_site(&self, url: UrlRef) -> SiteRef {
        self.urls[url.index()].site
    }

    pub fn normalized(&self, url: UrlRef) -> NormalizedUrl {
        NormalizedUrl {
            canonical: self.url(url).to_string(),
            website: self.site(self.url_site(url)).to_string(),
        }
    }

    pub fn site_ref(&self, website: &str) -> Option<SiteRef> {
        self.site_lookup.get(website).copied()
    }

    pub fn site(&self, site: SiteRef) -> &Arc<str> {
        &self.sites[site.index()]
    }

    /// Distinct users with at least one post containing `url`, ascending.
    pub fn sharers(&self, url: UrlRef) -> &[UserRef] {
        &self.url_sharers[url.index()]
    }

    /// Indices into [`posts`](Self::posts) of posts containing `url`.
    pub fn posts_with_url(&self, url: UrlRef) -> &[u32] {
        &self.url_posts[url.index()]
    }

    /// Indices into [`posts`](Self::posts) authored by `user`.
    pub fn posts_by(&self, user: UserRef) -> &[u32] {
        &self.user_posts[user.index()]
    }

    pub fn post_author(&self, post: u32) -> UserRef {
        self.post_author[post as usize]
    }

    /// Normalized URLs of a post, deduplicated, in post order.
    pub fn post_urls(&self, post: u32) -> &[UrlRef] {
        &self.post_urls[post as usize]
    }

    pub fn all_urls(&self) -> impl Iterator<Item = UrlRef> + '_ {
        (0..self.urls.len() as u32).map(UrlRef)
    }

    /// user_id → post_ids, in post order.
    pub fn user_index(&self) -> BTreeMap<&str, Vec<&str>> {
        self.users
            .iter()
            .zip(&self.user_posts)
            .map(|(u, posts)| {
                let ids = posts
                    .iter()
                    .map(|&p| self.posts[p as usize].post_id.as_str())
                    .collect();
                (&**u, ids)
            })
            .collect()
    }

    /// normalized URL → user_ids that shared it.
    pub fn url_index(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        self.urls
            .iter()
            .zip(&self.url_sharers)
            .map(|(entry, sharers)| {
                let users = sharers.iter().map(|&u| self.user_id(u)).collect();
                (&*entry.canonical, users)
            })
            .collect()
    }
}

/// Reads a line-delimited posts file (one JSON object per line).
pub fn load_posts(
    path: impl AsRef<Path>,
    normalizer: &UrlNormalizer<'_>,
    options: LoadOptions,
) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    read_posts(BufReader::new(file), normalizer, options).map_err(|e| match e {
        CorpusError::Io { source, .. } => io_err(path)(source),
        other => other,
    })
}

pub fn read_posts(
    reader: impl BufRead,
    normalizer: &UrlNormalizer<'_>,
    options: LoadOptions,
) -> Result<Corpus, CorpusError> {
    let mut posts = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: "<posts>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let post: Post = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: n + 1,
            message: e.to_string(),
        })?;
        post.validate().map_err(|message| CorpusError::Malformed {
            line: n + 1,
            message,
        })?;
        posts.push(post);
    }
    Corpus::from_posts(posts, normalizer, options)
}

/// Writes posts in the line-delimited format read by [`load_posts`].
pub fn write_posts<'a>(
    mut out: impl Write,
    posts: impl IntoIterator<Item = &'a Post>,
) -> io::Result<()> {
    for post in posts {
        serde_json::to_writer(&mut out, post)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Credibility label of a website.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Fake,
    Credible,
    Unknown,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Fake => "fake",
            Label::Credible => "credible",
            Label::Unknown => "unknown",
        }
    }

    pub fn is_fake(self) -> bool {
        self == Label::Fake
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ground-truth labels keyed by registrable domain.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSet {
    labels: BTreeMap<String, Label>,
}

impl LabelSet {
    pub fn insert(&mut self, domain: &str, label: Label) {
        self.labels.insert(normalize_domain(domain), label);
    }

    /// Never fails; unlisted domains are [`Label::Unknown`].
    pub fn lookup(&self, domain: &str) -> Label {
        if let Some(&l) = self.labels.get(domain) {
            return l;
        }
        self.labels
            .get(&normalize_domain(domain))
            .copied()
            .unwrap_or(Label::Unknown)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Label)> {
        self.labels.iter().map(|(d, &l)| (d.as_str(), l))
    }

    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut set = LabelSet::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (domain, token) = line.rsplit_once(',').ok_or(CorpusError::Malformed {
                line: n + 1,
                message: "expected domain,label".into(),
            })?;
            let domain = normalize_domain(domain);
            if domain.is_empty() {
                return Err(CorpusError::EmptyDomain { line: n + 1 });
            }
            let label = match token.trim().to_ascii_lowercase().as_str() {
                "fake" => Label::Fake,
                "credible" => Label::Credible,
                _ => {
                    return Err(CorpusError::UnknownLabel {
                        line: n + 1,
                        token: token.trim().to_string(),
                    })
                }
            };
            match set.labels.insert(domain.clone(), label) {
                Some(prev) if prev != label => return Err(CorpusError::ConflictingLabel(domain)),
                _ => {}
            }
        }
        Ok(set)
    }

    /// Header-less `domain,label` CSV, sorted by domain. Unknown labels
    /// are not written.
    pub fn write(&self, mut out: impl Write) -> io::Result<()> {
        for (domain, label) in self.iter() {
            if label != Label::Unknown {
                writeln!(out, "{domain},{label}")?;
            }
        }
        Ok(())
    }
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelSet, CorpusError> {
    let path = path.as_ref();
    LabelSet::parse(&std::fs::read_to_string(path).map_err(io_err(path))?)
}

/// Domains that never host third-party news articles.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Denylist {
    domains: BTreeSet<String>,
}

impl Denylist {
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut domains = BTreeSet::new();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            domains.insert(normalize_domain(line));
        }
        Ok(Denylist { domains })
    }

    pub fn from_domains<'a>(domains: impl IntoIterator<Item = &'a str>) -> Self {
        Denylist {
            domains: domains.into_iter().map(normalize_domain).collect(),
        }
    }

    /// Exact match on the registrable domain.
    pub fn contains(&self, website: &str) -> bool {
        self.domains.contains(website)
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }
}

pub fn load_denylist(path: impl AsRef<Path>) -> Result<Denylist, CorpusError> {
    let path = path.as_ref();
    Denylist::parse(&std::fs::read_to_string(path).map_err(io_err(path))?)
}

/// Website popularity ranks (1 = most popular) out of `total_indexed`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopularityRanks {
    ranks: BTreeMap<String, u64>,
    total_indexed: u64,
}

impl PopularityRanks {
    pub fn parse(text: &str, total_indexed: u64) -> Result<Self, CorpusError> {
        if total_indexed == 0 {
            return Err(CorpusError::InvalidTotal);
        }
        let mut ranks = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (domain, value) = line.rsplit_once(',').ok_or(CorpusError::Malformed {
                line: n + 1,
                message: "expected domain,rank".into(),
            })?;
            let domain = normalize_domain(domain);
            if domain.is_empty() {
                return Err(CorpusError::EmptyDomain { line: n + 1 });
            }
            let rank: u64 = match value.trim().parse() {
                Ok(r) if r >= 1 => r,
                _ => {
                    return Err(CorpusError::InvalidRank {
                        line: n + 1,
                        value: value.trim().to_string(),
                    })
                }
            };
            if rank > total_indexed {
                return Err(CorpusError::RankExceedsTotal {
                    domain,
                    rank,
                    total: total_indexed,
                });
            }
            if ranks.insert(domain.clone(), rank).is_some() {
                return Err(CorpusError::DuplicateDomain(domain));
            }
        }
        Ok(PopularityRanks {
            ranks,
            total_indexed,
        })
    }

    pub fn rank(&self, domain: &str) -> Option<u64> {
        self.ranks.get(domain).copied()
    }

    pub fn total_indexed(&self) -> u64 {
        self.total_indexed
    }

    /// `rank / total_indexed`, or `None` for unranked domains.
    pub fn percentile(&self, domain: &str) -> Option<f64> {
        self.rank(domain)
            .map(|r| r as f64 / self.total_indexed as f64)
    }
}

pub fn load_ranks(path: impl AsRef<Path>, total_indexed: u64) -> Result<PopularityRanks, CorpusError> {
    let path = path.as_ref();
    PopularityRanks::parse(&std::fs::read_to_string(path).map_err(io_err(path))?, total_indexed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(id: &str, user: &str, urls: &[&str]) -> Post {
        Post {
            post_id: id.into(),
            user_id: user.into(),
            timestamp: 1_650_000_000,
            urls: urls.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn read(text: &str) -> Result<Corpus, CorpusError> {
        read_posts(text.as_bytes(), &UrlNormalizer::default(), LoadOptions::default())
    }

    #[test]
    fn empty_file() {
        let c = read("").unwrap();
        assert!(c.is_empty());
        assert!(c.user_index().is_empty());
        assert!(c.url_index().is_empty());
    }

    #[test]
    fn three_posts_two_users() {
        let posts = [
            post("p1", "alice", &["https://a.example/x"]),
            post("p2", "bob", &["https://www.a.example/x?utm=2"]),
            post("p3", "alice", &["https://b.example/y"]),
        ];
        let mut buf = Vec::new();
        write_posts(&mut buf, &posts).unwrap();
        let c = read(std::str::from_utf8(&buf).unwrap()).unwrap();
        let users = c.user_index();
        assert_eq!(users.len(), 2);
        assert_eq!(users["alice"], vec!["p1", "p3"]);
        let urls = c.url_index();
        assert_eq!(urls.keys().copied().collect::<Vec<_>>(), vec!["a.example/x", "b.example/y"]);
        assert_eq!(urls["a.example/x"].len(), 2);
        assert_eq!(c.site_count(), 2);
    }

    #[test]
    fn malformed_line_is_named() {
        let text = "{\"post_id\":\"p1\",\"user_id\":\"u\",\"timestamp\":1,\"urls\":[]}\n{oops}\n";
        match read(text) {
            Err(CorpusError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let negative = "{\"post_id\":\"p1\",\"user_id\":\"u\",\"timestamp\":-5,\"urls\":[]}\n";
        assert!(matches!(read(negative), Err(CorpusError::Malformed { line: 1, .. })));
    }

    #[test]
    fn duplicate_post_id_is_named() {
        let text = "{\"post_id\":\"dup\",\"user_id\":\"u\",\"timestamp\":1,\"urls\":[]}\n\
                    {\"post_id\":\"dup\",\"user_id\":\"v\",\"timestamp\":2,\"urls\":[]}\n";
        match read(text) {
            Err(CorpusError::DuplicatePost(id)) => assert_eq!(id, "dup"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn junk_urls_are_dropped_and_counted() {
        let c = Corpus::from_posts(
            [post("p1", "u", &["not a url", "ftp://x.example/a", "https://ok.example/a"])],
            &UrlNormalizer::default(),
            LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(c.stats().dropped_urls, 2);
        assert_eq!(c.url_count(), 1);
    }

    #[test]
    fn repeated_url_in_one_post_is_one_share() {
        let c = Corpus::from_posts(
            [post("p1", "u", &["https://a.example/x", "http://a.example/x/"])],
            &UrlNormalizer::default(),
            LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(c.post_urls(0).len(), 1);
    }

    #[test]
    fn time_window_filters_at_load() {
        let mut early = post("p0", "u", &["https://a.example/x"]);
        early.timestamp = 10;
        let late = post("p1", "u", &["https://a.example/y"]);
        let c = Corpus::from_posts(
            [early, late],
            &UrlNormalizer::default(),
            LoadOptions {
                time_window: Some((1_000, i64::MAX)),
            },
        )
        .unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.stats().filtered_posts, 1);
    }

    #[test]
    fn labels() {
        let set = LabelSet::parse("badnews.example,fake\nWWW.GoodNews.example,credible\n").unwrap();
        assert_eq!(set.lookup("badnews.example"), Label::Fake);
        assert_eq!(set.lookup("neutral.example"), Label::Unknown);
        assert_eq!(set.lookup("goodnews.example"), Label::Credible);
        assert_eq!(set.iter().map(|(d, _)| d).collect::<Vec<_>>(), ["badnews.example", "goodnews.example"]);
        assert!(matches!(
            LabelSet::parse("x.example,dubious"),
            Err(CorpusError::UnknownLabel { line: 1, .. })
        ));
        assert!(matches!(
            LabelSet::parse("ok.example,fake\n ,fake"),
            Err(CorpusError::EmptyDomain { line: 2 })
        ));
        assert!(matches!(
            LabelSet::parse("a.example,fake\na.example,credible"),
            Err(CorpusError::ConflictingLabel(_))
        ));
    }

    #[test]
    fn denylist() {
        let d = Denylist::parse("# social\ntwitter.com\nwww.Facebook.com # fb\n\n").unwrap();
        assert!(d.contains("twitter.com"));
        assert!(d.contains("facebook.com"));
        assert!(!d.contains("news.twitter.com"));
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn ranks() {
        let r = PopularityRanks::parse("a.example,5\n", 100).unwrap();
        assert_eq!(r.percentile("a.example"), Some(0.05));
        assert_eq!(r.percentile("b.example"), None);
        match PopularityRanks::parse("a.example,5\nb.example,6\na.example,7\n", 100) {
            Err(CorpusError::DuplicateDomain(d)) => assert_eq!(d, "a.example"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            PopularityRanks::parse("a.example,0", 100),
            Err(CorpusError::InvalidRank { .. })
        ));
        assert!(matches!(
            PopularityRanks::parse("a.example,101", 100),
            Err(CorpusError::RankExceedsTotal { .. })
        ));
        assert!(matches!(PopularityRanks::parse("", 0), Err(CorpusError::InvalidTotal)));
    }
}
