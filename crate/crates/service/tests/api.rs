use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use sharetrail_core::corpus::{load_labels, load_posts};
use sharetrail_core::engine::{replay_choices, SessionConfig};
use sharetrail_core::ranking::CriterionKind;
use sharetrail_core::{Denylist, ExecutionRecord, LoadOptions, UrlNormalizer};
use sharetrail_service::{
    router, AppState, CandidatesResponse, Dataset, ErrorBody, ExportResponse, HistoryResponse, SeedResponse,
    SessionDescriptor,
};
use tower::ServiceExt;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures/golden")
        .join(name)
}

fn dataset() -> Dataset {
    Dataset {
        corpus: load_posts(golden("posts.jsonl"), &UrlNormalizer::default(), LoadOptions::default()).unwrap(),
        labels: load_labels(golden("labels.csv")).unwrap(),
        denylist: Denylist::default(),
    }
}

fn app_with(state: AppState) -> Router {
    router(Arc::new(state))
}

fn app() -> Router {
    app_with(AppState::new([("toy".to_string(), dataset())]))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn create(app: &Router, criterion: &str) -> SessionDescriptor {
    let (status, body) = call(
        app,
        "POST",
        "/sessions",
        Some(json!({ "initial_seed": "https://a.example/seed", "criterion": criterion })),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    serde_json::from_value(body).unwrap()
}

async fn history(app: &Router, id: &str) -> HistoryResponse {
    let (status, body) = call(app, "GET", &format!("/sessions/{id}/history"), None).await;
    assert_eq!(status, StatusCode::OK);
    serde_json::from_value(body).unwrap()
}

fn error(body: Value) -> ErrorBody {
    serde_json::from_value(body).unwrap()
}

#[tokio::test]
async fn healthz_is_ok() {
    let (status, body) = call(&app(), "GET", "/healthz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "status": "ok" }));
}

#[tokio::test]
async fn create_then_candidates() {
    let app = app();
    let s = create(&app, "hindex").await;
    assert_eq!(s.corpus, "toy");
    assert_eq!(s.current_cycle, 1);
    let (status, body) = call(&app, "GET", &format!("/sessions/{}/candidates", s.session_id), None).await;
    assert_eq!(status, StatusCode::OK);
    let c: CandidatesResponse = serde_json::from_value(body).unwrap();
    assert_eq!(c.cycle, 1);
    let sites: Vec<_> = c.candidates.iter().map(|c| c.website.as_str()).collect();
    assert_eq!(sites, ["b.example", "c.example"]);
    let b = &c.candidates[0];
    assert_eq!((b.h_index, b.total_distinct_sharers, b.urls.len()), (1, 3, 1));
    assert_eq!(b.urls[0].url, "b.example/one");
    // p05 is u2's share of b.example/one; both u1 and u2 are identified.
    assert_eq!(b.urls[0].sample_post_ids, ["p03", "p05"]);
    // u3 is not identified yet, so p09 is not context for c.example/big.
    assert_eq!(c.candidates[1].urls[0].sample_post_ids, ["p06", "p07", "p08"]);
}

#[tokio::test]
async fn top_k_limits_the_candidate_list() {
    let app = app();
    let (_, body) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({ "initial_seed": "a.example/seed", "criterion": "mostpop", "top_k": 1 })),
    )
    .await;
    let s: SessionDescriptor = serde_json::from_value(body).unwrap();
    let (_, body) = call(&app, "GET", &format!("/sessions/{}/candidates", s.session_id), None).await;
    let c: CandidatesResponse = serde_json::from_value(body).unwrap();
    assert_eq!(c.candidates.len(), 1);
    assert_eq!(c.candidates[0].website, "c.example");
}

#[tokio::test]
async fn valid_choice_adds_exactly_one_cycle() {
    let app = app();
    let s = create(&app, "hindex").await;
    let before = history(&app, &s.session_id).await;
    assert_eq!(before.record.cycles.len(), 0);
    let (status, body) = call(
        &app,
        "POST",
        &format!("/sessions/{}/seed", s.session_id),
        Some(json!({ "url": "https://b.example/one" })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let r: SeedResponse = serde_json::from_value(body).unwrap();
    assert_eq!((r.cycle, r.current_cycle), (1, 2));
    let after = history(&app, &s.session_id).await;
    assert_eq!(after.cycle, 1);
    assert_eq!(after.record.cycles.len(), 1);
    assert_eq!(after.record.cycles[0], r.cycle_record);
}

#[tokio::test]
async fn rejected_requests_change_nothing() {
    let app = app();
    let s = create(&app, "hindex").await;
    let id = &s.session_id;
    let before = history(&app, id).await;
    let (_, cands_before) = call(&app, "GET", &format!("/sessions/{id}/candidates"), None).await;

    let cases = [
        (json!({ "url": "https://c.example/other" }), StatusCode::UNPROCESSABLE_ENTITY, "not_a_candidate"),
        (json!({ "url": "https://a.example/seed" }), StatusCode::UNPROCESSABLE_ENTITY, "not_a_candidate"),
        (json!({ "url": "ftp://b.example/one" }), StatusCode::UNPROCESSABLE_ENTITY, "not_a_candidate"),
        (json!({ "link": "https://b.example/one" }), StatusCode::BAD_REQUEST, "bad_request"),
    ];
    for (body, want_status, want_code) in cases {
        let (status, resp) = call(&app, "POST", &format!("/sessions/{id}/seed"), Some(body)).await;
        assert_eq!(status, want_status);
        let e = error(resp);
        assert_eq!(e.code, want_code);
        if status == StatusCode::UNPROCESSABLE_ENTITY {
            assert_eq!(e.cycle, Some(1));
        }
    }
    assert_eq!(history(&app, id).await, before);
    let (_, cands_after) = call(&app, "GET", &format!("/sessions/{id}/candidates"), None).await;
    assert_eq!(cands_after, cands_before);
}

#[tokio::test]
async fn bad_create_requests() {
    let app = app();
    let cases = [
        (json!({ "initial_seed": "https://nowhere.example/x", "criterion": "hindex" }), StatusCode::UNPROCESSABLE_ENTITY, "unresolvable_seed"),
        (json!({ "initial_seed": "mailto:x@y.example", "criterion": "hindex" }), StatusCode::BAD_REQUEST, "invalid_url"),
        (json!({ "initial_seed": "a.example/seed", "criterion": "pagerank" }), StatusCode::BAD_REQUEST, "bad_request"),
        (json!({ "initial_seed": "a.example/seed", "criterion": "hindex", "top_k": 0 }), StatusCode::BAD_REQUEST, "bad_request"),
        (json!({ "initial_seed": "a.example/seed", "criterion": "hindex", "corpus": "other" }), StatusCode::NOT_FOUND, "corpus_not_found"),
    ];
    for (body, want_status, want_code) in cases {
        let (status, resp) = call(&app, "POST", "/sessions", Some(body.clone())).await;
        assert_eq!(status, want_status, "{body}");
        assert_eq!(error(resp).code, want_code);
    }
}

#[tokio::test]
async fn unknown_session_is_not_found() {
    let app = app();
    for (method, path) in [("GET", "candidates"), ("GET", "history"), ("GET", "export"), ("POST", "seed")] {
        let body = (method == "POST").then(|| json!({ "url": "b.example/one" }));
        let (status, resp) = call(&app, method, &format!("/sessions/nope/{path}"), body).await;
        assert_eq!(status, StatusCode::NOT_FOUND);
        assert_eq!(error(resp).code, "session_not_found");
    }
}

#[tokio::test]
async fn finished_session_conflicts_but_stays_readable() {
    let app = app();
    let s = create(&app, "hindex").await;
    let id = &s.session_id;
    for url in ["b.example/one", "c.example/big"] {
        let (status, _) = call(&app, "POST", &format!("/sessions/{id}/seed"), Some(json!({ "url": url }))).await;
        assert_eq!(status, StatusCode::OK);
    }
    let (status, resp) = call(&app, "GET", &format!("/sessions/{id}/candidates"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(error(resp), ErrorBody { code: "session_finished".into(), message: "session is finished".into(), cycle: Some(2) });
    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/seed"), Some(json!({ "url": "c.example/other" }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let h = history(&app, id).await;
    assert_eq!(h.status, sharetrail_core::SessionStatus::Finished);
    assert_eq!(h.record.exhausted_at_cycle, Some(3));
}

async fn scripted(app: &Router, criterion: &str, choices: &[&str]) -> (ExportResponse, HistoryResponse) {
    let s = create(app, criterion).await;
    let id = &s.session_id;
    for url in choices {
        let (status, body) = call(app, "POST", &format!("/sessions/{id}/seed"), Some(json!({ "url": url }))).await;
        assert_eq!(status, StatusCode::OK, "{body}");
    }
    let (status, body) = call(app, "GET", &format!("/sessions/{id}/export"), None).await;
    assert_eq!(status, StatusCode::OK);
    (serde_json::from_value(body).unwrap(), history(app, id).await)
}

#[tokio::test]
async fn service_matches_in_process_engine() {
    let app = app();
    let ds = dataset();
    let scripts: [(&str, CriterionKind, &[&str]); 4] = [
        ("hindex", CriterionKind::HIndex, &["b.example/one", "c.example/big"]),
        ("hindex", CriterionKind::HIndex, &["https://c.example/big", "b.example/two"]),
        ("mostpop", CriterionKind::MostPop, &["c.example/big"]),
        ("random", CriterionKind::Random, &["http://www.b.example/one/"]),
    ];
    for (name, criterion, choices) in scripts {
        let (export, hist) = scripted(&app, name, choices).await;
        let engine = replay_choices(ds.inputs(), &SessionConfig::new("https://a.example/seed", criterion), choices.iter().copied()).unwrap();
        assert_eq!(export.discovered_websites, engine.discovered_websites);
        assert_eq!(hist.record, engine);
    }
}

#[tokio::test]
async fn golden_script_exports_the_golden_discovered_list() {
    let golden_record = ExecutionRecord::from_json(&std::fs::read_to_string(golden("record_hindex_5.json")).unwrap()).unwrap();
    let choices: Vec<String> = golden_record.cycles.iter().map(|c| c.selected_seed.url.canonical.clone()).collect();
    let choices: Vec<&str> = choices.iter().map(String::as_str).collect();
    let (export, hist) = scripted(&app(), "hindex", &choices).await;
    assert_eq!(export.discovered_websites, golden_record.discovered_websites);
    assert_eq!(export.cycle, 2);
    assert_eq!(hist.record.exhausted_at_cycle, golden_record.exhausted_at_cycle);
}

#[tokio::test]
async fn records_are_written_through() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(AppState::new([("toy".to_string(), dataset())]).with_records_dir(dir.path()));
    let s = create(&app, "hindex").await;
    let path = dir.path().join(format!("{}.json", s.session_id));
    let initial = ExecutionRecord::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(initial.cycles.is_empty());
    call(&app, "POST", &format!("/sessions/{}/seed", s.session_id), Some(json!({ "url": "b.example/one" }))).await;
    let on_disk = std::fs::read_to_string(&path).unwrap();
    assert_eq!(on_disk, history(&app, &s.session_id).await.record.to_json());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_choices_are_serialized() {
    let app = app();
    let s = create(&app, "hindex").await;
    let mut tasks = Vec::new();
    for _ in 0..8 {
        let app = app.clone();
        let uri = format!("/sessions/{}/seed", s.session_id);
        tasks.push(tokio::spawn(async move {
            call(&app, "POST", &uri, Some(json!({ "url": "b.example/one" }))).await.0
        }));
    }
    let mut ok = 0;
    for t in tasks {
        match t.await.unwrap() {
            StatusCode::OK => ok += 1,
            other => assert_eq!(other, StatusCode::UNPROCESSABLE_ENTITY),
        }
    }
    assert_eq!(ok, 1);
    assert_eq!(history(&app, &s.session_id).await.record.cycles.len(), 1);
}

#[tokio::test]
async fn session_ids_are_unique() {
    let app = app();
    let mut ids = std::collections::BTreeSet::new();
    for _ in 0..20 {
        assert!(ids.insert(create(&app, "random").await.session_id));
    }
}
