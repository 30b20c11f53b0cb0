mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use common::{fixture, stderr, Fixture};
use narrative_atlas::mapgraph::to_json;
use narrative_atlas_cli::service::{router, ServiceConfig};
use narrative_atlas_cli::{ExtractResponse, Store};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(f: &Fixture) -> Router {
    router(Store::new(f.store()), ServiceConfig::default())
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or(Body::empty(), |b| Body::from(b.to_string())))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = to_bytes(response.into_body(), usize::MAX).await.unwrap();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

/// Every file under `root` with its contents.
fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.display().to_string(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[tokio::test]
async fn health_and_corpus_listing() {
    let f = fixture();
    let app = app(&f);
    let (status, body) = call(&app, "GET", "/healthz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        serde_json::from_str::<Value>(&body).unwrap()["status"],
        "ok"
    );

    let (status, body) = call(&app, "GET", "/api/corpora", None).await;
    assert_eq!(status, StatusCode::OK);
    let list: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0]["id"], f.corpus_id.as_str());
    assert_eq!(list[0]["has_embeddings"], true);
    assert_eq!(list[0]["communities"][0]["count"], f.planted.corpus.len());
}

#[tokio::test]
async fn service_and_cli_documents_are_identical() {
    let f = fixture();
    let out_dir = f.path("cli");
    let out = f.run(&[
        "extract",
        &f.corpus_id,
        "--output",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let cli_doc = fs::read_to_string(out_dir.join("map.json")).unwrap();

    // a fresh store without the CLI's saved map, so nothing is replayed
    let (status, body) = call(
        &app(&f),
        "POST",
        "/api/extract",
        Some(json!({ "corpus": f.corpus_id })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let response: ExtractResponse = serde_json::from_str(&body).unwrap();
    assert_eq!(to_json(&response.map).unwrap(), cli_doc);
    assert_eq!(
        response.config,
        narrative_atlas::ExtractionConfig::default()
    );
    assert_eq!(response.corpus, f.corpus_id);
    assert!(response.telemetry.events > 0);
}

#[tokio::test]
async fn infeasible_request_is_422_with_constraint_class() {
    let f = fixture();
    let body = json!({ "corpus": f.corpus_id, "minscore": 0.99 });
    let (status, text) = call(&app(&f), "POST", "/api/extract", Some(body)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let err: Value = serde_json::from_str(&text).unwrap();
    assert!(err["message"]
        .as_str()
        .unwrap()
        .contains("acceptance constraint infeasible"));
    assert_eq!(err["constraint_class"], "acceptance");
}

#[tokio::test]
async fn bad_requests_are_400_and_unknown_ids_404() {
    let f = fixture();
    let app = app(&f);
    let post = |body: Value| call(&app, "POST", "/api/extract", Some(body));
    let bad = [
        json!({ "corpus": f.corpus_id, "minscore": 1.5 }),
        json!({ "corpus": f.corpus_id, "k": 1 }),
        json!({ "corpus": f.corpus_id, "bogus": 1 }),
        json!({ "minscore": 0.5 }),
        json!({ "corpus": "../../etc" }),
        json!([1, 2]),
    ];
    for body in bad {
        let (status, text) = post(body.clone()).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}: {text}");
    }
    let (status, _) = post(json!({ "corpus": "0123456789abcdef" })).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = post(json!({ "corpus": f.corpus_id, "community": "nowhere" })).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "GET", "/api/map/0123456789abcdef", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn map_replay_returns_the_cached_response() {
    let f = fixture();
    let app = app(&f);
    let (status, body) = call(
        &app,
        "POST",
        "/api/extract",
        Some(json!({ "corpus": f.corpus_id, "seed": 4, "minscore": 0.5 })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let id = serde_json::from_str::<Value>(&body).unwrap()["map_id"]
        .as_str()
        .unwrap()
        .to_string();
    let (status, replay) = call(&app, "GET", &format!("/api/map/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(replay, body);
}

#[tokio::test]
async fn requests_do_not_mutate_the_store() {
    let f = fixture();
    let before = snapshot(&f.store());
    let app = app(&f);
    for body in [
        json!({ "corpus": f.corpus_id }),
        json!({ "corpus": f.corpus_id, "minscore": 0.99 }),
        json!({ "corpus": f.corpus_id, "k": 4, "mincover": 0.0 }),
    ] {
        call(&app, "POST", "/api/extract", Some(body)).await;
    }
    call(&app, "GET", "/api/corpora", None).await;
    assert_eq!(snapshot(&f.store()), before);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_match_sequential_ones() {
    let f = fixture();
    let app = app(&f);
    let bodies: Vec<Value> = (0..6u64)
        .map(|seed| json!({ "corpus": f.corpus_id, "seed": seed, "minscore": 0.5 }))
        .collect();
    let handles: Vec<_> = bodies
        .iter()
        .cloned()
        .map(|b| {
            let app = app.clone();
            tokio::spawn(async move { call(&app, "POST", "/api/extract", Some(b)).await })
        })
        .collect();
    for (handle, body) in handles.into_iter().zip(&bodies) {
        let (status, concurrent) = handle.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        let fresh = router(Store::new(f.store()), ServiceConfig::default());
        let (_, sequential) = call(&fresh, "POST", "/api/extract", Some(body.clone())).await;
        let map = |s: &str| serde_json::from_str::<ExtractResponse>(s).unwrap().map;
        assert_eq!(map(&concurrent), map(&sequential));
    }
}

#[tokio::test]
async fn slow_extraction_times_out() {
    let f = fixture();
    let config = ServiceConfig {
        timeout: Duration::from_nanos(1),
        ..ServiceConfig::default()
    };
    let app = router(Store::new(f.store()), config);
    let (status, body) = call(
        &app,
        "POST",
        "/api/extract",
        Some(json!({ "corpus": f.corpus_id })),
    )
    .await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE, "{body}");
}
