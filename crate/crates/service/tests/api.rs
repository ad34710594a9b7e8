use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use preflearn::experiment::{ExperimentConfig, ModelFile, NoObserver, ProgressEvent};
use preflearn::monitor::CancelFlag;
use preflearn::synthetic::{gen_dataset, SynthFunction, SynthSpec};
use preflearn_service::{router, AppState, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(dir: &tempfile::TempDir, workers: usize) -> Router {
    let config = ServiceConfig {
        data_dir: dir.path().to_path_buf(),
        workers,
        max_upload: 64 << 20,
    };
    router(AppState::new(&config).unwrap(), config.max_upload)
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post_json(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let req = Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (s, b) = send(app, req).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

const BOUNDARY: &str = "XplTboundary";

fn multipart(parts: &[(&str, &[u8])]) -> Request<Body> {
    let mut body = Vec::new();
    for (name, bytes) in parts {
        body.extend_from_slice(format!("--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"{name}\"; filename=\"{name}\"\r\n\r\n").as_bytes());
        body.extend_from_slice(bytes);
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    Request::post("/datasets")
        .header("content-type", format!("multipart/form-data; boundary={BOUNDARY}"))
        .body(Body::from(body))
        .unwrap()
}

fn synthetic(n_pairs: usize) -> (String, String, String) {
    let spec = SynthSpec {
        n_pairs,
        n_features: 10,
        function: SynthFunction::Linear { weights: None },
        noise: 0.0,
        seed: 1,
    };
    let (objects, orders, opts) = gen_dataset(&spec).unwrap().to_dual_file();
    (objects, orders, serde_json::to_string(&opts).unwrap())
}

async fn upload(app: &Router, n_pairs: usize) -> Value {
    let (objects, orders, opts) = synthetic(n_pairs);
    let (status, body) = send(
        app,
        multipart(&[("objects", objects.as_bytes()), ("orders", orders.as_bytes()), ("options", opts.as_bytes())]),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    serde_json::from_slice(&body).unwrap()
}

async fn wait_terminal(app: &Router, id: &str) -> Value {
    for _ in 0..600 {
        let (_, body) = get(app, &format!("/experiments/{id}")).await;
        let v: Value = serde_json::from_slice(&body).unwrap();
        if ["done", "failed", "cancelled"].contains(&v["state"].as_str().unwrap()) {
            return v;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    panic!("job {id} did not finish");
}

#[tokio::test]
async fn upload_reports_schema_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir, 1);
    let first = upload(&app, 50).await;
    assert_eq!(first["schema"].as_array().unwrap().len(), 10);
    assert_eq!(first["pairs"], 50);
    let second = upload(&app, 50).await;
    assert_eq!(first["dataset_id"], second["dataset_id"]);

    let id = first["dataset_id"].as_str().unwrap();
    let (status, body) = get(&app, &format!("/datasets/{id}/stats")).await;
    assert_eq!(status, StatusCode::OK);
    let stats: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(stats["rows"], 100);
    assert_eq!(get(&app, "/datasets/nope/stats").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn bad_upload_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir, 1);
    let (status, body) = send(&app, multipart(&[("file", b"1,2,3\n4,five,6\n")])).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert!(v["error"].as_str().unwrap().contains("line 2"), "{v}");
    let (status, _) = send(&app, multipart(&[("objects", b"id,a\nx,1\n")])).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn experiment_lifecycle_matches_library_run() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir, 2);
    let ds = upload(&app, 120).await;
    let config = json!({
        "dataset_id": ds["dataset_id"],
        "preprocess": [{"min_max": "x0"}],
        "learner": {"type": "rank_svm", "c": 1.0},
        "validation": {"mode": {"type": "k_fold", "k": 3}},
        "seed": 4
    });
    let (status, created) = post_json(&app, "/experiments", config.clone()).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let id = created["job_id"].as_str().unwrap().to_string();

    let view = wait_terminal(&app, &id).await;
    assert_eq!(view["state"], "done", "{view}");
    let (status, body) = get(&app, &format!("/experiments/{id}/report")).await;
    assert_eq!(status, StatusCode::OK);
    let report: Value = serde_json::from_slice(&body).unwrap();

    // Same config run directly through the library.
    let stored = ExperimentConfig::from_json(&serde_json::to_vec(&report["config"]).unwrap()).unwrap();
    let direct = preflearn::experiment::run_experiment(&stored, &NoObserver, &CancelFlag::new());
    assert_eq!(report["average"], json!(direct.report.average.unwrap()));
    assert_eq!(report["validation"]["values"], json!(direct.report.validation.unwrap().values));

    let (status, body) = get(&app, &format!("/experiments/{id}/model")).await;
    assert_eq!(status, StatusCode::OK);
    let model = ModelFile::from_json(&body).unwrap();
    assert_eq!(model.model, direct.model.unwrap().model);

    // Events: monotone, and the fold lines reconstruct the report values.
    let (status, body) = get(&app, &format!("/experiments/{id}/events")).await;
    assert_eq!(status, StatusCode::OK);
    let lines: Vec<Value> = String::from_utf8(body)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let last = lines.last().unwrap();
    assert_eq!(last["kind"], "state");
    assert_eq!(last["state"], "done");
    let events: Vec<ProgressEvent> = lines[..lines.len() - 1]
        .iter()
        .map(|v| serde_json::from_value(v.clone()).unwrap())
        .collect();
    for w in events.windows(2) {
        assert!((w[0].phase_index, w[0].percent) <= (w[1].phase_index, w[1].percent));
    }
    let folds: Vec<f64> = events
        .iter()
        .filter_map(|e| e.message.as_deref()?.strip_prefix("fold ")?.split(' ').nth(1)?.parse().ok())
        .collect();
    let reported: Vec<f64> = serde_json::from_value(report["validation"]["values"].clone()).unwrap();
    assert_eq!(folds.len(), reported.len());
    for (a, b) in folds.iter().zip(&reported) {
        assert!((a - b).abs() < 1e-6);
    }

    let (status, _) = send(&app, Request::post(format!("/experiments/{id}/cancel")).body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, body) = get(&app, &format!("/experiments/{id}/events?since=1000000")).await;
    assert_eq!(String::from_utf8(body).unwrap().lines().count(), 1);
}

#[tokio::test]
async fn report_is_404_until_finished_and_cancel_stops_the_job() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir, 1);
    let slow = json!({
        "dataset": {"type": "synthetic", "n_pairs": 400, "n_features": 5},
        "learner": {"type": "neuro", "config": {"generations": 100000, "population": 20}},
        "seed": 1
    });
    let (_, a) = post_json(&app, "/experiments", slow.clone()).await;
    let (_, b) = post_json(&app, "/experiments", slow).await;
    let (a, b) = (a["job_id"].as_str().unwrap().to_string(), b["job_id"].as_str().unwrap().to_string());

    // One worker: the second job waits in the queue.
    let (_, body) = get(&app, &format!("/experiments/{b}")).await;
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["state"], "queued");
    assert_eq!(get(&app, &format!("/experiments/{a}/report")).await.0, StatusCode::NOT_FOUND);

    for id in [&b, &a] {
        let (status, _) = send(&app, Request::post(format!("/experiments/{id}/cancel")).body(Body::empty()).unwrap()).await;
        assert_eq!(status, StatusCode::ACCEPTED);
    }
    for id in [&a, &b] {
        let view = wait_terminal(&app, id).await;
        assert_eq!(view["state"], "cancelled", "{view}");
        assert_eq!(get(&app, &format!("/experiments/{id}/model")).await.0, StatusCode::NOT_FOUND);
    }
}

#[tokio::test]
async fn malformed_configs_are_rejected_with_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir, 1);
    let (status, body) = post_json(
        &app,
        "/experiments",
        json!({"dataset": {"type": "synthetic"}, "learner": {"type": "rank_svm"}, "validation": 3}),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["field"], "validation");
    let (status, _) = post_json(&app, "/experiments", json!({"dataset_id": "missing", "learner": {"type": "rank_svm"}})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/experiments/job-99").await.0, StatusCode::NOT_FOUND);
    let (status, body) = get(&app, "/params").await;
    assert_eq!(status, StatusCode::OK);
    let params: Value = serde_json::from_slice(&body).unwrap();
    assert!(params["learners"]["rank_svm"].is_array());
}
