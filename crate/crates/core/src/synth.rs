//! Synthetic two-camp sharing ecosystems with known ground truth.
//!
//! Websites and users are split into a fake-leaning and a credible-leaning
//! camp. Every post carries one URL: the author picks their own camp with
//! probability `homophily` (the other camp otherwise), a website uniformly
//! within that camp, and an article within the website from a Zipf law.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, Label, LabelSet, LoadOptions, Post};
use crate::rng;
use crate::urlnorm::UrlNormalizer;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid {field}: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcosystemConfig {
    pub rng_seed: u64,
    pub n_websites: u32,
    pub fake_fraction: f64,
    pub urls_per_website: u32,
    pub zipf_exponent_urls: f64,
    pub n_users: u32,
    /// Probability that a post links to the author's own camp.
    pub homophily: f64,
    pub fake_user_fraction: f64,
    pub posts_per_user: u32,
}

impl Default for EcosystemConfig {
    fn default() -> Self {
        EcosystemConfig {
            rng_seed: 0,
            n_websites: 60,
            fake_fraction: 0.3,
            urls_per_website: 200,
            zipf_exponent_urls: 1.0,
            n_users: 2000,
            homophily: 0.9,
            fake_user_fraction: 0.3,
            posts_per_user: 20,
        }
    }
}

impl EcosystemConfig {
    pub const KEYS: [&'static str; 9] = [
        "rng_seed",
        "n_websites",
        "fake_fraction",
        "urls_per_website",
        "zipf_exponent_urls",
        "n_users",
        "homophily",
        "fake_user_fraction",
        "posts_per_user",
    ];

    pub fn validate(&self) -> Result<(), SynthError> {
        fn bad(field: &'static str, reason: impl Into<String>) -> Result<(), SynthError> {
            Err(SynthError::InvalidField {
                field,
                reason: reason.into(),
            })
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.n_websites < 1 {
            return bad("n_websites", "must be at least 1");
        }
        if self.urls_per_website < 1 {
            return bad("urls_per_website", "must be at least 1");
        }
        if self.n_users < 1 {
            return bad("n_users", "must be at least 1");
        }
        if self.posts_per_user < 1 {
            return bad("posts_per_user", "must be at least 1");
        }
        if !unit(self.fake_fraction) {
            return bad("fake_fraction", format!("{} not in [0, 1]", self.fake_fraction));
        }
        if !unit(self.fake_user_fraction) {
            return bad("fake_user_fraction", format!("{} not in [0, 1]", self.fake_user_fraction));
        }
        if !(0.5..=1.0).contains(&self.homophily) {
            return bad("homophily", format!("{} not in [0.5, 1]", self.homophily));
        }
        if !(self.zipf_exponent_urls > 0.0 && self.zipf_exponent_urls.is_finite()) {
            return bad("zipf_exponent_urls", format!("{} is not > 0", self.zipf_exponent_urls));
        }
        Ok(())
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SynthError> {
        fn num<T: std::str::FromStr>(field: &'static str, v: &str) -> Result<T, SynthError> {
            v.trim().parse().map_err(|_| SynthError::InvalidField {
                field,
                reason: format!("cannot parse {v:?}"),
            })
        }
        match key.trim() {
            "rng_seed" => self.rng_seed = num("rng_seed", value)?,
            "n_websites" => self.n_websites = num("n_websites", value)?,
            "fake_fraction" => self.fake_fraction = num("fake_fraction", value)?,
            "urls_per_website" => self.urls_per_website = num("urls_per_website", value)?,
            "zipf_exponent_urls" => self.zipf_exponent_urls = num("zipf_exponent_urls", value)?,
            "n_users" => self.n_users = num("n_users", value)?,
            "homophily" => self.homophily = num("homophily", value)?,
            "fake_user_fraction" => self.fake_user_fraction = num("fake_user_fraction", value)?,
            "posts_per_user" => self.posts_per_user = num("posts_per_user", value)?,
            other => {
                return Err(SynthError::UnknownKey {
                    line: 0,
                    key: other.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Reads flat `key=value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let mut cfg = EcosystemConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(SynthError::Syntax {
                line: n + 1,
                message: "expected key=value".into(),
            })?;
            cfg.set(k, v).map_err(|e| match e {
                SynthError::UnknownKey { key, .. } => SynthError::UnknownKey { line: n + 1, key },
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        format!(
            "rng_seed={}\nn_websites={}\nfake_fraction={}\nurls_per_website={}\n\
             zipf_exponent_urls={}\nn_users={}\nhomophily={}\nfake_user_fraction={}\n\
             posts_per_user={}\n",
            self.rng_seed,
            self.n_websites,
            self.fake_fraction,
            self.urls_per_website,
            self.zipf_exponent_urls,
            self.n_users,
            self.homophily,
            self.fake_user_fraction,
            self.posts_per_user
        )
    }

    pub fn n_fake_websites(&self) -> u32 {
        (self.fake_fraction * self.n_websites as f64).round() as u32
    }

    pub fn n_fake_users(&self) -> u32 {
        (self.fake_user_fraction * self.n_users as f64).round() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Camp {
    Fake,
    Credible,
}

impl Camp {
    fn other(self) -> Camp {
        match self {
            Camp::Fake => Camp::Credible,
            Camp::Credible => Camp::Fake,
        }
    }
}

impl fmt::Display for Camp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Camp::Fake => "fake",
            Camp::Credible => "credible",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub labels: LabelSet,
    pub user_camps: BTreeMap<String, Camp>,
}

/// A generated ecosystem: raw posts in canonical order plus ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecosystem {
    pub posts: Vec<Post>,
    pub truth: GroundTruth,
    pub websites: Vec<String>,
}

impl Ecosystem {
    pub fn corpus(&self) -> Result<Corpus, CorpusError> {
        Corpus::from_posts(self.posts.iter().cloned(), &UrlNormalizer::default(), LoadOptions::default())
    }
}

const WEBSITE_TAG: u64 = 1;
const USER_CAMP_TAG: u64 = 2;
const POSTS_TAG: u64 = 3;

/// 2022-01-01T00:00:00Z
const YEAR_START: i64 = 1_640_995_200;
const YEAR_SECONDS: i64 = 365 * 24 * 3600;

pub fn website_name(i: u32) -> String {
    format!("site{i:04}.example")
}

pub fn article_url(website: &str, k: u32) -> String {
    format!("https://{website}/article/{k:04}")
}

/// Cumulative Zipf weights over ranks `1..=n`, normalized to end at 1.
pub fn zipf_cdf(n: u32, exponent: f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = (1..=n)
        .map(|k| {
            acc += (k as f64).powf(-exponent);
            acc
        })
        .collect();
    for c in &mut cdf {
        *c /= acc;
    }
    cdf
}

fn sample_cdf(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

pub fn generate(config: &EcosystemConfig) -> Result<Ecosystem, SynthError> {
    config.validate()?;
    let seed = config.rng_seed;

    let websites: Vec<String> = (0..config.n_websites).map(website_name).collect();
    let mut order: Vec<u32> = (0..config.n_websites).collect();
    order.shuffle(&mut rng::stream(seed, WEBSITE_TAG));
    let n_fake = config.n_fake_websites() as usize;
    let mut site_camp = vec![Camp::Credible; websites.len()];
    for &i in &order[..n_fake] {
        site_camp[i as usize] = Camp::Fake;
    }
    let camp_sites = |camp: Camp| -> Vec<u32> {
        (0..config.n_websites)
            .filter(|&i| site_camp[i as usize] == camp)
            .collect()
    };
    let fake_sites = camp_sites(Camp::Fake);
    let credible_sites = camp_sites(Camp::Credible);

    let mut users: Vec<u32> = (0..config.n_users).collect();
    users.shuffle(&mut rng::stream(seed, USER_CAMP_TAG));
    let mut user_camp = vec![Camp::Credible; config.n_users as usize];
    for &u in &users[..config.n_fake_users() as usize] {
        user_camp[u as usize] = Camp::Fake;
    }

    let cdf = zipf_cdf(config.urls_per_website, config.zipf_exponent_urls);
    let posts_seed = rng::derive(seed, &[POSTS_TAG]);
    let per_user: Vec<Vec<Post>> = (0..config.n_users)
        .into_par_iter()
        .map(|u| {
            let mut r = rng::stream(posts_seed, u as u64);
            let own = user_camp[u as usize];
            (0..config.posts_per_user)
                .map(|j| {
                    let mut camp = if r.random_bool(config.homophily) { own } else { own.other() };
                    let mut pool = if camp == Camp::Fake { &fake_sites } else { &credible_sites };
                    if pool.is_empty() {
                        camp = camp.other();
                        pool = if camp == Camp::Fake { &fake_sites } else { &credible_sites };
                    }
                    let site = pool[r.random_range(0..pool.len())];
                    let article = sample_cdf(&cdf, r.random::<f64>()) as u32 + 1;
                    Post {
                        post_id: format!("p{u:06}-{j:04}"),
                        user_id: format!("u{u:06}"),
                        timestamp: YEAR_START + r.random_range(0..YEAR_SECONDS),
                        urls: vec![article_url(&websites[site as usize], article)],
                    }
                })
                .collect()
        })
        .collect();

    let mut labels = LabelSet::default();
    for (w, camp) in websites.iter().zip(&site_camp) {
        labels.insert(
            w,
            match camp {
                Camp::Fake => Label::Fake,
                Camp::Credible => Label::Credible,
            },
        );
    }
    let user_camps = (0..config.n_users)
        .map(|u| (format!("u{u:06}"), user_camp[u as usize]))
        .collect();
    Ok(Ecosystem {
        posts: per_user.into_iter().flatten().collect(),
        truth: GroundTruth { labels, user_camps },
        websites,
    })
}
