use std::path::PathBuf;

use sharetrail_core::corpus::{load_labels, load_posts};
use sharetrail_core::engine::{ExecutionStatus, Inputs};
use sharetrail_core::ranking::CriterionKind;
use sharetrail_core::{run_auto_execution, AutoConfig, Denylist, Label, LoadOptions, UrlNormalizer};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden").join(name)
}

fn run(criterion: CriterionKind) -> sharetrail_core::ExecutionRecord {
    let corpus = load_posts(fixture("posts.jsonl"), &UrlNormalizer::default(), LoadOptions::default()).unwrap();
    let labels = load_labels(fixture("labels.csv")).unwrap();
    let deny = Denylist::default();
    let inputs = Inputs { corpus: &corpus, labels: &labels, denylist: &deny };
    run_auto_execution(inputs, &AutoConfig::new("https://a.example/seed", criterion, 5, 0)).unwrap()
}

#[test]
fn hindex_matches_hand_trace() {
    let rec = run(CriterionKind::HIndex);
    assert_eq!(rec.initial_seed.url.canonical, "a.example/seed");
    assert_eq!(rec.cycles.len(), 2);

    let c1 = &rec.cycles[0];
    assert_eq!((c1.new_users_found, c1.cumulative_users, c1.ranked_websites), (2, 2, 2));
    let r: Vec<_> = c1
        .ranking
        .iter()
        .map(|s| (s.website.as_str(), s.h_index, s.total_distinct_sharers, s.total_shares, s.most_pop_share_count))
        .collect();
    assert_eq!(r, vec![("b.example", 1, 3, 3, 2), ("c.example", 1, 1, 3, 3)]);
    assert_eq!(c1.top1_label, Label::Fake);
    assert_eq!(c1.selected_seed.url.canonical, "b.example/one");

    let c2 = &rec.cycles[1];
    assert_eq!((c2.new_users_found, c2.cumulative_users, c2.ranked_websites), (0, 2, 1));
    assert_eq!(c2.top1_website, "c.example");
    assert_eq!(c2.top1_label, Label::Credible);
    assert_eq!(c2.selected_seed.url.canonical, "c.example/big");

    assert_eq!(rec.status, ExecutionStatus::Exhausted);
    assert_eq!(rec.exhausted_at_cycle, Some(3));
    let found: Vec<_> = rec.discovered_websites.iter().map(|d| d.website.as_str()).collect();
    assert_eq!(found, ["b.example", "c.example"]);
}

#[test]
fn mostpop_diverges_at_cycle_one() {
    let rec = run(CriterionKind::MostPop);
    assert_eq!(rec.cycles[0].top1_website, "c.example");
    assert_eq!(rec.cycles[0].selected_seed.url.canonical, "c.example/big");
}

#[test]
fn hindex_record_is_byte_identical_to_golden() {
    let json = run(CriterionKind::HIndex).to_json();
    let path = fixture("record_hindex_5.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &json).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap();
    assert_eq!(json, golden);
}

#[test]
fn choosing_the_second_site_keeps_the_first_eligible() {
    use sharetrail_core::engine::SessionConfig;
    use sharetrail_core::InteractiveSession;

    let corpus = load_posts(fixture("posts.jsonl"), &UrlNormalizer::default(), LoadOptions::default()).unwrap();
    let labels = load_labels(fixture("labels.csv")).unwrap();
    let deny = Denylist::default();
    let inputs = Inputs { corpus: &corpus, labels: &labels, denylist: &deny };
    let mut s = InteractiveSession::start(inputs, &SessionConfig::new("https://a.example/seed", CriterionKind::HIndex)).unwrap();
    let first: Vec<_> = s.candidates().unwrap().iter().map(|c| c.score.website.clone()).collect();
    assert_eq!(first, ["b.example", "c.example"]);
    s.choose_seed(inputs, "c.example/big").unwrap();
    // u3 joins through c.example/big; b.example is still rankable
    let next: Vec<_> = s.candidates().unwrap().iter().map(|c| c.score.website.clone()).collect();
    assert_eq!(next, ["b.example"]);
    assert_eq!(s.open_cycle().unwrap().cumulative_users, 3);
    let b = &s.candidates().unwrap()[0];
    assert_eq!((b.score.h_index, b.score.total_distinct_sharers), (2, 4));
}
