//! URL canonicalization and website extraction.
//!
//! A website is the registrable domain (public suffix plus one label) of a
//! URL's host. The canonical form of a URL drops the scheme, credentials,
//! port, query and fragment, folds the host to lowercase, strips a leading
//! `www.` and removes trailing slashes from the path. Path case is kept.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::{Host, Url};

/// Public-suffix snapshot shipped with the crate.
pub const BUNDLED_SUFFIX_LIST: &str = include_str!("../data/public_suffix_list.dat");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UrlError {
    #[error("unparsable URL {0:?}")]
    Unparsable(String),
    #[error("unsupported scheme {scheme:?} in {raw:?}")]
    Scheme { scheme: String, raw: String },
    #[error("URL has no host: {0:?}")]
    NoHost(String),
    #[error("IP-literal host rejected: {0:?}")]
    IpHost(String),
    #[error("host {0:?} is not under a known public suffix")]
    UnknownSuffix(String),
}

#[derive(Debug, Error)]
pub enum SuffixListError {
    #[error("reading suffix list {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("suffix list line {line}: invalid rule {rule:?}")]
    Rule { line: usize, rule: String },
}

/// A canonicalized URL together with the website hosting it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NormalizedUrl {
    pub canonical: String,
    pub website: String,
}

impl fmt::Display for NormalizedUrl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

/// Rules of the public-suffix list, in ASCII (punycode) form.
#[derive(Debug, Clone, Default)]
pub struct PublicSuffixList {
    normal: HashSet<String>,
    // "*.ck" is stored as "ck"
    wildcard: HashSet<String>,
    // "!www.ck" is stored as "www.ck"
    exception: HashSet<String>,
}

impl PublicSuffixList {
    /// Parses the standard public-suffix-list text format.
    pub fn parse(text: &str) -> Result<Self, SuffixListError> {
        let mut list = Self::default();
        for (n, line) in text.lines().enumerate() {
            let rule = line.split_whitespace().next().unwrap_or("");
            if rule.is_empty() || rule.starts_with("//") {
                continue;
            }
            let bad = || SuffixListError::Rule {
                line: n + 1,
                rule: rule.to_string(),
            };
            if let Some(rest) = rule.strip_prefix('!') {
                list.exception.insert(to_ascii(rest).ok_or_else(bad)?);
            } else if let Some(rest) = rule.strip_prefix("*.") {
                list.wildcard.insert(to_ascii(rest).ok_or_else(bad)?);
            } else {
                list.normal.insert(to_ascii(rule).ok_or_else(bad)?);
            }
        }
        Ok(list)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, SuffixListError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SuffixListError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// The snapshot compiled into the crate.
    pub fn bundled() -> &'static PublicSuffixList {
        static LIST: OnceLock<PublicSuffixList> = OnceLock::new();
        LIST.get_or_init(|| {
            PublicSuffixList::parse(BUNDLED_SUFFIX_LIST).expect("bundled suffix list is valid")
        })
    }

    pub fn len(&self) -> usize {
        self.normal.len() + self.wildcard.len() + self.exception.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Byte offset where the public suffix of `host` starts, or `None` when
    /// no rule covers the host. Unlisted TLDs are not treated as implicit
    /// suffixes.
    fn suffix_start(&self, host: &str) -> Option<usize> {
        let mut offsets = vec![0];
        offsets.extend(host.match_indices('.').map(|(i, _)| i + 1));
        for (k, &start) in offsets.iter().enumerate() {
            let candidate = &host[start..];
            if self.exception.contains(candidate) {
                return offsets.get(k + 1).copied();
            }
            if self.normal.contains(candidate) {
                return Some(start);
            }
            if let Some(&next) = offsets.get(k + 1) {
                if self.wildcard.contains(&host[next..]) {
                    return Some(start);
                }
            }
        }
        None
    }

    /// Registrable domain of an ASCII, lowercase host name.
    pub fn registrable_domain<'h>(&self, host: &'h str) -> Option<&'h str> {
        let start = self.suffix_start(host)?;
        if start == 0 {
            return None;
        }
        let head = &host[..start - 1];
        let label_start = head.rfind('.').map_or(0, |i| i + 1);
        Some(&host[label_start..])
    }
}

fn to_ascii(rule: &str) -> Option<String> {
    let ascii = idna::domain_to_ascii(rule).ok()?;
    if ascii.is_empty() {
        None
    } else {
        Some(ascii)
    }
}

/// Canonicalizes URLs against a public-suffix list.
#[derive(Debug, Clone, Copy)]
pub struct UrlNormalizer<'a> {
    suffixes: &'a PublicSuffixList,
}

impl Default for UrlNormalizer<'static> {
    fn default() -> Self {
        Self::new(PublicSuffixList::bundled())
    }
}

impl<'a> UrlNormalizer<'a> {
    pub fn new(suffixes: &'a PublicSuffixList) -> Self {
        Self { suffixes }
    }

    pub fn normalize(&self, raw: &str) -> Result<NormalizedUrl, UrlError> {
        let trimmed = raw.trim();
        let url = Url::parse(trimmed).map_err(|_| UrlError::Unparsable(raw.to_string()))?;
        match url.scheme() {
            "http" | "https" => {}
            other => {
                return Err(UrlError::Scheme {
                    scheme: other.to_string(),
                    raw: raw.to_string(),
                })
            }
        }
        let host = match url.host() {
            Some(Host::Domain(d)) => d.trim_end_matches('.').to_ascii_lowercase(),
            Some(Host::Ipv4(_)) | Some(Host::Ipv6(_)) => {
                return Err(UrlError::IpHost(raw.to_string()))
            }
            None => return Err(UrlError::NoHost(raw.to_string())),
        };
        let website = self
            .suffixes
            .registrable_domain(&host)
            .ok_or_else(|| UrlError::UnknownSuffix(host.clone()))?
            .to_string();

        let host = match host.strip_prefix("www.") {
            Some(rest) if rest.len() >= website.len() => rest.to_string(),
            _ => host,
        };
        let path = url.path().trim_end_matches('/');
        let mut canonical = String::with_capacity(host.len() + path.len());
        canonical.push_str(&host);
        canonical.push_str(path);
        Ok(NormalizedUrl { canonical, website })
    }

    pub fn website_of(&self, raw: &str) -> Result<String, UrlError> {
        self.normalize(raw).map(|n| n.website)
    }

    /// Like [`normalize`](Self::normalize) but accepts scheme-less input
    /// such as a canonical URL, which is read as `https://`.
    pub fn normalize_lenient(&self, raw: &str) -> Result<NormalizedUrl, UrlError> {
        let raw = raw.trim();
        if raw.contains("://") || has_opaque_scheme(raw) {
            self.normalize(raw)
        } else {
            self.normalize(&format!("https://{raw}"))
        }
    }
}

/// `mailto:x@y` style input: a scheme followed by something other than a
/// port number.
fn has_opaque_scheme(raw: &str) -> bool {
    let Some((scheme, rest)) = raw.split_once(':') else {
        return false;
    };
    let scheme_ok = scheme.starts_with(|c: char| c.is_ascii_alphabetic())
        && scheme.chars().all(|c| c.is_ascii_alphanumeric() || "+-.".contains(c))
        && !scheme.contains('.');
    scheme_ok && !rest.starts_with(|c: char| c.is_ascii_digit())
}

/// Normalizes against the bundled suffix list.
pub fn normalize_url(raw: &str) -> Result<NormalizedUrl, UrlError> {
    UrlNormalizer::default().normalize(raw)
}

/// Registrable domain of `raw` under the bundled suffix list.
pub fn website_of(raw: &str) -> Result<String, UrlError> {
    UrlNormalizer::default().website_of(raw)
}

/// Normalizes a bare domain the way label, denylist and rank files store it:
/// trimmed, lowercase, no scheme, no leading `www.`, no trailing dot.
pub fn normalize_domain(raw: &str) -> String {
    let mut d = raw.trim();
    if let Some(idx) = d.find("://") {
        d = &d[idx + 3..];
    }
    let d = d.split('/').next().unwrap_or("").trim_end_matches('.');
    let lower = d.to_ascii_lowercase();
    match lower.strip_prefix("www.") {
        Some(rest) if !rest.is_empty() => rest.to_string(),
        _ => lower,
    }
}
