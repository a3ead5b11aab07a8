//! Discovery of low-credibility websites by snowballing through the users
//! who shared a known fake-news article.
//!
//! The pipeline is split into small, mostly pure stages:
//!
//! - [`corpus`]: loading and indexing posts, credibility labels, denylists
//!   and popularity ranks.
//! - [`urlnorm`]: URL canonicalization and registrable-domain extraction.
//! - [`synth`]: synthetic two-camp sharing ecosystems with ground truth.
//! - [`ranking`]: share index, H-index and website/URL rankings.
//! - [`engine`]: automated and interactive execution of discovery cycles.
//! - [`eval`]: batch runner and the incidence/density/recall/popularity metrics.

pub mod corpus;
pub mod engine;
pub mod eval;
pub mod ranking;
pub mod rng;
pub mod synth;
pub mod urlnorm;

pub use corpus::{Corpus, Denylist, Label, LabelSet, LoadOptions, PopularityRanks, Post};
pub use engine::{
    run_auto_execution, AutoConfig, CycleRecord, ExecutionRecord, InteractiveSession, SeedOrigin,
    SeedRecord, SessionStatus,
};
pub use ranking::{hindex, Criterion, ShareIndex, WebsiteScore};
pub use urlnorm::{normalize_url, website_of, NormalizedUrl, UrlNormalizer};
