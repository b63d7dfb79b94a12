use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use kgbench_core::graph::{parse_alignment, Alignment, Correspondence, Iri, Task};
use kgbench_core::sampling::{sample, SampleItem};
use kgbench_service::{router, Service, SessionConfig, JUDGMENT_LOG};
use serde_json::{json, Value};
use tower::ServiceExt;

fn mini() -> PathBuf {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/mini")).to_path_buf()
}

fn synthetic_sample(matcher: &str, cells: usize, n: usize) -> Vec<SampleItem> {
    let iri = |s: String| Iri::new(format!("http://x/{s}")).unwrap();
    let cells = (0..cells).map(|i| Correspondence::exact(iri(format!("s{i}")), iri(format!("t{i}"))));
    let (al, _) = Alignment::from_cells(Task::new("src", "tgt").unwrap(), cells);
    sample(&al, matcher, n, 11).unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    items: BTreeMap<&'static str, Vec<SampleItem>>,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let mut items = BTreeMap::new();
        for (id, matcher) in [("alpha", "m1"), ("beta", "m2")] {
            let s = synthetic_sample(matcher, 80, 50);
            Service::create_session(&root, id, &s, &SessionConfig::default()).unwrap();
            items.insert(id, s);
        }
        let task = Task::new("memoryalpha", "memorybeta").unwrap();
        let al = parse_alignment(&mini().join("alignments/handTuned/memoryalpha-memorybeta.tsv"), &task).unwrap().alignment;
        let s = sample(&al, "handTuned", 50, 3).unwrap();
        let config = SessionConfig {
            source_graph: Some(mini().join("graphs/memoryalpha.nt")),
            target_graph: Some(mini().join("graphs/memorybeta.nt")),
            report: Some(mini().join("reference")),
        };
        Service::create_session(&root, "cards", &s, &config).unwrap();
        items.insert("cards", s);
        Fixture { _dir: dir, root, items }
    }

    fn app(&self) -> Router {
        router(Arc::new(Service::open(&self.root).unwrap()))
    }
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post(app: &Router, session: &str, body: Value) -> (StatusCode, Value) {
    let req = Request::post(format!("/sessions/{session}/judgments"))
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    call(app, req).await
}

fn judgment(item: &SampleItem, verdict: &str, annotator: &str) -> Value {
    json!({ "item_id": item.id, "verdict": verdict, "annotator": annotator, "timestamp": 1_700_000_000_000u64 })
}

#[tokio::test]
async fn fresh_session_starts_at_index_zero() {
    let f = Fixture::new();
    let app = f.app();
    let (status, body) = get(&app, "/sessions/alpha/next?annotator=ann").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["done"], false);
    assert_eq!(body["index"], 0);
    assert_eq!(body["item"]["id"], f.items["alpha"][0].id);
    assert_eq!(body["progress"], json!({ "judged": 0, "total": 50 }));
}

#[tokio::test]
async fn unknown_session_is_not_found() {
    let f = Fixture::new();
    let app = f.app();
    for uri in ["/sessions/nope/next?annotator=a", "/sessions/nope/summary", "/sessions/nope/dashboard"] {
        assert_eq!(get(&app, uri).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
    assert_eq!(post(&app, "nope", judgment(&f.items["alpha"][0], "same", "a")).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn remainder_after_49_judged() {
    let f = Fixture::new();
    let app = f.app();
    let items = &f.items["alpha"];
    for (i, item) in items.iter().enumerate().filter(|(i, _)| *i != 17) {
        let (status, _) = post(&app, "alpha", judgment(item, if i % 2 == 0 { "same" } else { "different" }, "ann")).await;
        assert_eq!(status, StatusCode::OK);
    }
    let (_, body) = get(&app, "/sessions/alpha/next?annotator=ann").await;
    assert_eq!(body["index"], 17);
    assert_eq!(body["progress"]["judged"], 49);
    post(&app, "alpha", judgment(&items[17], "unsure", "ann")).await;
    let (_, body) = get(&app, "/sessions/alpha/next?annotator=ann").await;
    assert_eq!(body["done"], true);
    assert!(body.get("item").is_none());
}

#[tokio::test]
async fn interleaved_annotators_follow_the_cursor_rule() {
    let f = Fixture::new();
    let app = f.app();
    let items = &f.items["alpha"];
    // scripted interleaving; some judgments skip ahead of the cursor
    let script: Vec<(&str, usize)> = vec![
        ("a", 0), ("b", 3), ("a", 1), ("b", 0), ("a", 2), ("a", 4), ("b", 1), ("c", 49), ("b", 2), ("a", 3), ("c", 0), ("b", 4),
    ];
    let mut judged: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (annotator, i) in script {
        post(&app, "alpha", judgment(&items[i], "same", annotator)).await;
        judged.entry(annotator).or_default().insert(i);
        for who in ["a", "b", "c", "d"] {
            let expected = (0..items.len()).find(|k| !judged.get(who).is_some_and(|s| s.contains(k)));
            let (_, body) = get(&app, &format!("/sessions/alpha/next?annotator={who}")).await;
            assert_eq!(body["index"].as_u64().map(|v| v as usize), expected, "annotator {who}");
        }
    }
}

#[tokio::test]
async fn revisions_move_tallies() {
    let f = Fixture::new();
    let app = f.app();
    let item = &f.items["alpha"][5];
    let (status, ack) = post(&app, "alpha", judgment(item, "same", "ann")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ack["tally"], json!({ "same": 1, "different": 0, "unsure": 0 }));
    assert_eq!(ack["revision"], false);
    let (_, ack) = post(&app, "alpha", judgment(item, "different", "ann")).await;
    assert_eq!(ack["tally"], json!({ "same": 0, "different": 1, "unsure": 0 }));
    assert_eq!(ack["revision"], true);
    assert_eq!(ack["revisions"], 1);
    let (_, summary) = get(&app, "/sessions/alpha/summary").await;
    assert_eq!(summary["revisions"], 1);
    assert_eq!(summary["items"][5]["verdicts"], json!({ "ann": "different" }));
}

#[tokio::test]
async fn foreign_item_is_rejected_by_id() {
    let f = Fixture::new();
    let app = f.app();
    let foreign = &f.items["beta"][0];
    let (status, body) = post(&app, "alpha", judgment(foreign, "same", "ann")).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains(&foreign.id));
    let log = std::fs::read_to_string(f.root.join("alpha").join(JUDGMENT_LOG)).unwrap();
    assert!(log.is_empty());
}

#[tokio::test]
async fn malformed_judgment_is_a_bad_request() {
    let f = Fixture::new();
    let app = f.app();
    let bad = json!({ "item_id": f.items["alpha"][0].id, "verdict": "maybe", "annotator": "ann" });
    assert_eq!(post(&app, "alpha", bad).await.0, StatusCode::BAD_REQUEST);
    let unstamped = json!({ "item_id": f.items["alpha"][0].id, "verdict": "same", "annotator": "ann" });
    assert_eq!(post(&app, "alpha", unstamped).await.0, StatusCode::OK);
}

#[tokio::test]
async fn empty_summary_has_no_estimate() {
    let f = Fixture::new();
    let app = f.app();
    let (status, body) = get(&app, "/sessions/alpha/summary").await;
    assert_eq!(status, StatusCode::OK);
    assert!(body["estimate"].is_null());
    assert_eq!(body["message"], "no decisive judgments");
    post(&app, "alpha", judgment(&f.items["alpha"][0], "unsure", "ann")).await;
    let (_, body) = get(&app, "/sessions/alpha/summary").await;
    assert!(body["estimate"].is_null());
    assert_eq!(body["tally"]["unsure"], 1);
}

#[tokio::test]
async fn one_same_in_fifty_gives_two_percent() {
    let f = Fixture::new();
    let app = f.app();
    for (i, item) in f.items["alpha"].iter().enumerate() {
        post(&app, "alpha", judgment(item, if i == 0 { "same" } else { "different" }, "ann")).await;
    }
    let (_, body) = get(&app, "/sessions/alpha/summary").await;
    assert!((body["estimate"]["point"].as_f64().unwrap() - 0.02).abs() < 1e-12);
    assert_eq!(body["estimate"]["n_judged"], 50);
}

#[tokio::test]
async fn even_split_matches_wilson() {
    let f = Fixture::new();
    let app = f.app();
    for (i, item) in f.items["alpha"].iter().enumerate() {
        post(&app, "alpha", judgment(item, if i < 25 { "same" } else { "different" }, "ann")).await;
    }
    // second annotator only on a few items; reported separately
    for item in &f.items["alpha"][..4] {
        post(&app, "alpha", judgment(item, "same", "other")).await;
    }
    let (_, body) = get(&app, "/sessions/alpha/summary").await;
    let ann = &body["per_annotator"]["ann"]["estimate"];
    assert!((ann["point"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let (lo, hi) = (ann["interval"][0].as_f64().unwrap(), ann["interval"][1].as_f64().unwrap());
    assert!((lo - 0.366).abs() < 1e-3 && (hi - 0.634).abs() < 1e-3, "({lo}, {hi})");
    assert_eq!(body["per_annotator"]["other"]["tally"]["same"], 4);
    assert_eq!(body["estimate"]["n_judged"], 54);
}

#[tokio::test]
async fn restart_replays_the_log() {
    let f = Fixture::new();
    let before = {
        let app = f.app();
        for (i, item) in f.items["alpha"].iter().take(20).enumerate() {
            let verdict = ["same", "different", "unsure"][i % 3];
            post(&app, "alpha", judgment(item, verdict, "ann")).await;
        }
        post(&app, "alpha", judgment(&f.items["alpha"][0], "different", "ann")).await;
        get(&app, "/sessions/alpha/summary").await.1
    };
    let app = f.app();
    let after = get(&app, "/sessions/alpha/summary").await.1;
    assert_eq!(before, after);
    assert_eq!(after["tally"], json!({ "same": 6, "different": 8, "unsure": 6 }));
    let (_, next) = get(&app, "/sessions/alpha/next?annotator=ann").await;
    assert_eq!(next["index"], 20);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_writes_are_all_recorded_once() {
    let f = Fixture::new();
    let app = f.app();
    let mut handles = Vec::new();
    for (k, item) in f.items["alpha"].iter().enumerate() {
        for annotator in ["a", "b"] {
            let app = app.clone();
            let body = judgment(item, if k % 2 == 0 { "same" } else { "different" }, annotator);
            handles.push(tokio::spawn(async move { post(&app, "alpha", body).await.0 }));
        }
    }
    for h in handles {
        assert_eq!(h.await.unwrap(), StatusCode::OK);
    }
    let log = std::fs::read_to_string(f.root.join("alpha").join(JUDGMENT_LOG)).unwrap();
    assert_eq!(log.lines().count(), 100);
    let (_, body) = get(&app, "/sessions/alpha/summary").await;
    assert_eq!(body["tally"], json!({ "same": 50, "different": 50, "unsure": 0 }));
    assert_eq!(body["revisions"], 0);
}

async fn next_after_judging_prefix(app: &Router, items: &[SampleItem], annotator: &str, upto: usize) -> Value {
    for item in &items[..upto] {
        post(app, "cards", judgment(item, "same", annotator)).await;
    }
    let (_, body) = get(app, &format!("/sessions/cards/next?annotator={annotator}")).await;
    assert_eq!(body["index"], upto);
    body
}

#[tokio::test]
async fn cards_come_from_the_graphs() {
    let f = Fixture::new();
    let app = f.app();
    let items = &f.items["cards"];
    let find = |suffix: &str| items.iter().position(|i| i.correspondence.target.as_str().ends_with(suffix)).unwrap();

    let body = next_after_judging_prefix(&app, items, "ann", find("/resource/Data_(computing)")).await;
    let source = &body["source"];
    assert_eq!(source["found"], true);
    assert_eq!(source["kind"], "instance");
    assert_eq!(source["labels"], json!(["Data"]));
    assert_eq!(source["alt_labels"], json!(["Data (android)"]));
    let facts = source["facts"].as_array().unwrap();
    assert!(facts.len() <= 25);
    assert!(facts.iter().any(|f| f["value"].as_str().unwrap().ends_with("/memoryalpha/class/Character")));
    assert_eq!(body["target"]["labels"], json!(["DATA"]));

    let body = next_after_judging_prefix(&app, items, "other", find("/resource/Borg_Collective")).await;
    assert_eq!(body["source"]["labels"], json!(["The \"Borg\""]));
    assert_eq!(body["target"]["found"], false);
    assert!(body["target"].get("kind").is_none());
}

#[tokio::test]
async fn dashboard_serves_the_bundle() {
    let f = Fixture::new();
    let app = f.app();
    let (status, body) = get(&app, "/sessions/cards/dashboard").await;
    assert_eq!(status, StatusCode::OK);
    let csv = std::fs::read_to_string(mini().join("reference/cells.csv")).unwrap();
    assert_eq!(body["cells"].as_array().unwrap().len(), csv.lines().count() - 1);
    assert_eq!(body["aggregates"]["semantics"], "2019");
    assert_eq!(get(&app, "/sessions/alpha/dashboard").await.0, StatusCode::NOT_FOUND);
}
