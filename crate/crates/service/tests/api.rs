use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use hetmatch::eval::{synth_corpus, SynthParams};
use hetmatch::index::{DocType, Index};
use hetmatch::textpipe::Pipeline;
use hetmatch_service::{router, AppState, ServiceOptions};

fn fixture(dir: &Path) -> ServiceOptions {
    let corpus = synth_corpus(&SynthParams {
        n_a: 6,
        n_b: 8,
        planted_pairs: 4,
        ..SynthParams::default()
    })
    .unwrap();
    Index::from_documents(DocType::A, Pipeline::default(), corpus.articles)
        .unwrap()
        .save(&dir.join("index/a"))
        .unwrap();
    Index::from_documents(DocType::B, Pipeline::default(), corpus.videos)
        .unwrap()
        .save(&dir.join("index/b"))
        .unwrap();
    ServiceOptions {
        index_a: dir.join("index"),
        index_b: dir.join("index"),
        weights: dir.join("weights.json"),
        labels: dir.join("labels.jsonl"),
        static_dir: None,
        judging_seed: 0,
    }
}

async fn call(
    state: &Arc<AppState>,
    method: &str,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = router(Arc::clone(state)).oneshot(req).await.unwrap();
    let status = resp.status();
    (
        status,
        resp.into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec(),
    )
}

fn json_of(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

#[tokio::test]
async fn match_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let state = Arc::new(AppState::open(&fixture(dir.path())).unwrap());
    let (status, body) = call(&state, "GET", "/api/match/a000", None).await;
    assert_eq!(status, StatusCode::OK);
    let list = json_of(&body);
    let list = list.as_array().unwrap();
    assert_eq!(list.len(), 3);
    let scores: Vec<f64> = list.iter().map(|r| r["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));

    let (status, body) = call(&state, "GET", "/api/match/a000?k=5", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json_of(&body).as_array().unwrap().len(), 5);
    assert_eq!(
        call(&state, "GET", "/api/match/zzz", None).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        call(&state, "GET", "/api/match/a000?k=0", None).await.0,
        StatusCode::BAD_REQUEST
    );
    // read-only: repeated calls agree
    assert_eq!(
        call(&state, "GET", "/api/match/a001", None).await,
        call(&state, "GET", "/api/match/a001", None).await
    );
}

#[tokio::test]
async fn docs_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let opts = fixture(dir.path());
    let state = Arc::new(AppState::open(&opts).unwrap());
    let (status, body) = call(&state, "GET", "/api/docs/b002", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json_of(&body)["doctype"], "video");
    assert_eq!(
        call(&state, "GET", "/api/docs/nope", None).await.0,
        StatusCode::NOT_FOUND
    );
    let (status, body) = call(&state, "GET", "/api/config", None).await;
    assert_eq!(status, StatusCode::OK);
    let on_disk: Value =
        serde_json::from_str(&std::fs::read_to_string(&opts.weights).unwrap()).unwrap();
    assert_eq!(json_of(&body), on_disk);
    assert_eq!(call(&state, "GET", "/", None).await.0, StatusCode::OK);
}

#[tokio::test]
async fn judging_queue_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let opts = fixture(dir.path());
    let state = Arc::new(AppState::open(&opts).unwrap());
    assert_eq!(
        call(&state, "GET", "/api/pairs/next", None).await.0,
        StatusCode::BAD_REQUEST
    );

    let mut labeled = 0;
    loop {
        let (status, body) = call(&state, "GET", "/api/pairs/next?judge=ann", None).await;
        if status == StatusCode::NO_CONTENT {
            break;
        }
        assert_eq!(status, StatusCode::OK);
        let p = json_of(&body);
        assert!(p["a_components"]["title"].is_string());
        let submit =
            json!({"judge": "ann", "a_id": p["a_id"], "b_id": p["b_id"], "rating": labeled % 2});
        let (status, _) = call(&state, "POST", "/api/labels", Some(submit)).await;
        assert_eq!(status, StatusCode::CREATED);
        labeled += 1;
        assert!(labeled <= 6 * 4);
    }
    // three recommendations and one control per article
    assert_eq!(labeled, 6 * 4);

    // a second judge starts from the head of the queue
    let (status, body) = call(&state, "GET", "/api/pairs/next?judge=bob", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json_of(&body)["a_id"], "a000");

    let bad = json!({"judge": "bob", "a_id": "a000", "b_id": "b000", "rating": 2});
    assert_eq!(
        call(&state, "POST", "/api/labels", Some(bad)).await.0,
        StatusCode::BAD_REQUEST
    );
    let unknown = json!({"judge": "bob", "a_id": "a000", "b_id": "b999", "rating": 1});
    assert_eq!(
        call(&state, "POST", "/api/labels", Some(unknown)).await.0,
        StatusCode::NOT_FOUND
    );

    let (status, body) = call(&state, "GET", "/api/labels", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, std::fs::read(&opts.labels).unwrap());
    let lines: Vec<Value> = body
        .split(|&c| c == b'\n')
        .filter(|l| !l.is_empty())
        .map(json_of)
        .collect();
    assert_eq!(lines.len(), labeled);
    let stamps: Vec<i64> = lines.iter().map(|l| l["ts"].as_i64().unwrap()).collect();
    assert!(stamps.windows(2).all(|w| w[0] < w[1]));

    // ratings survive a restart
    drop(state);
    let reopened = Arc::new(AppState::open(&opts).unwrap());
    assert_eq!(
        call(&reopened, "GET", "/api/pairs/next?judge=ann", None)
            .await
            .0,
        StatusCode::NO_CONTENT
    );
}

#[tokio::test]
async fn training_activates_config() {
    let dir = tempfile::tempdir().unwrap();
    let opts = fixture(dir.path());
    let state = Arc::new(AppState::open(&opts).unwrap());
    let grid = json!({"mode": "grid", "params": {"title>title": [0, 5], "*": [1]}});
    assert_eq!(
        call(&state, "POST", "/api/train", Some(grid.clone()))
            .await
            .0,
        StatusCode::UNPROCESSABLE_ENTITY
    );

    for (a, b, r) in [
        ("a000", "b000", 1),
        ("a000", "b001", 0),
        ("a001", "b002", 0),
    ] {
        let body = json!({"judge": "ann", "a_id": a, "b_id": b, "rating": r});
        assert_eq!(
            call(&state, "POST", "/api/labels", Some(body)).await.0,
            StatusCode::CREATED
        );
    }
    let (status, body) = call(&state, "POST", "/api/train", Some(grid)).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let report = json_of(&body);
    let (_, cfg) = call(&state, "GET", "/api/config", None).await;
    assert_eq!(json_of(&cfg), report["best"]);
    let on_disk: Value =
        serde_json::from_str(&std::fs::read_to_string(&opts.weights).unwrap()).unwrap();
    assert_eq!(on_disk, report["best"]);
    assert_eq!(
        std::fs::read_dir(dir.path().join("weights.history"))
            .unwrap()
            .count(),
        1
    );

    let sgd = json!({"mode": "sgd", "params": {"lr": 0.1, "iters": 5}});
    assert_eq!(
        call(&state, "POST", "/api/train", Some(sgd)).await.0,
        StatusCode::OK
    );
    let bad = json!({"mode": "sgd", "params": {"lr": "fast"}});
    assert_eq!(
        call(&state, "POST", "/api/train", Some(bad)).await.0,
        StatusCode::BAD_REQUEST
    );
}
