use std::path::{Path, PathBuf};
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use normplan_service::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn state() -> AppState {
    let root = repo_root();
    AppState::load(
        &root.join("scenarios/mining"),
        &root.join("policies/mining"),
    )
    .unwrap()
}

async fn send(app: Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (
        status,
        serde_json::from_slice(&bytes).unwrap_or(Value::Null),
    )
}

async fn get(app: Router, uri: &str) -> (StatusCode, Value) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post(app: Router, body: Value) -> (StatusCode, Value) {
    let req = Request::post("/api/solve")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    send(app, req).await
}

fn codes(body: &Value) -> Vec<&str> {
    body["errors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["code"].as_str().unwrap())
        .collect()
}

fn non_waits(body: &Value) -> usize {
    body["plan"]["steps"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["action"] != "wait")
        .count()
}

#[tokio::test]
async fn solves_three_segment_schedule() {
    let (status, body) = post(
        router(state()),
        json!({
            "scenario_id": "s1",
            "initial_mode": "safe",
            "changes": [{"step": 3, "mode": "normal"}, {"step": 7, "mode": "risky"}]
        }),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(non_waits(&body), 10);
    assert_eq!(body["plan"]["steps"][2]["action"], "collect(gold)");
    assert_eq!(body["metrics"].as_array().unwrap().len(), 3);
    assert_eq!(body["metrics"][2]["wait_count"], 4);
    assert!(body["errors"].as_array().unwrap().is_empty());
    assert!(body["solve_time_ms"].is_u64());
}

#[tokio::test]
async fn risky_single_mode() {
    let (status, body) = post(
        router(state()),
        json!({"scenario_id": "s1", "initial_mode": "risky"}),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(non_waits(&body), 7);
    assert_eq!(body["metrics"][0]["subgoal_count"], 3);
}

#[tokio::test]
async fn incomplete_change_is_rejected() {
    let (status, body) = post(
        router(state()),
        json!({"scenario_id": "s1", "initial_mode": "safe", "changes": [{"step": 3}]}),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(codes(&body), ["mode_and_step_required"]);
    assert!(body["plan"].is_null());
}

#[tokio::test]
async fn every_issue_is_listed() {
    let (status, body) = post(
        router(state()),
        json!({
            "scenario_id": "s1",
            "changes": [
                {"step": 5, "mode": "normal"},
                {"step": 4, "mode": "turbo"},
                {"step": 20, "mode": "risky"}
            ]
        }),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let got = codes(&body);
    for want in [
        "initial_mode_required",
        "too_many_changes",
        "unknown_mode",
        "steps_not_increasing",
        "step_out_of_range",
    ] {
        assert!(got.contains(&want), "{want} missing from {got:?}");
    }
    assert_eq!(got.iter().filter(|c| **c == "unknown_mode").count(), 1);
}

#[tokio::test]
async fn unknown_scenario_and_bad_horizon() {
    let (status, body) = post(
        router(state()),
        json!({"scenario_id": "nope", "initial_mode": "safe"}),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(codes(&body), ["unknown_scenario"]);

    let (status, body) = post(
        router(state()),
        json!({"scenario_id": "s1", "initial_mode": "safe", "horizon_override": 0}),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(codes(&body), ["invalid_horizon"]);
}

#[tokio::test]
async fn horizon_override_shortens_plan() {
    let (status, body) = post(
        router(state()),
        json!({"scenario_id": "s1", "initial_mode": "safe", "horizon_override": 4}),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["plan"]["steps"].as_array().unwrap().len(), 4);
    assert_eq!(body["plan"]["horizon"], 4);
}

#[tokio::test]
async fn malformed_body_is_a_bad_request() {
    let req = Request::post("/api/solve")
        .header("content-type", "application/json")
        .body(Body::from("{not json"))
        .unwrap();
    let (status, body) = send(router(state()), req).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(codes(&body), ["malformed_request"]);
}

#[tokio::test]
async fn slow_solve_times_out() {
    let mut st = state();
    st.solve_timeout = Duration::ZERO;
    let (status, body) = post(
        router(st),
        json!({"scenario_id": "s1", "initial_mode": "risky"}),
    )
    .await;
    assert_eq!(status, StatusCode::GATEWAY_TIMEOUT);
    assert_eq!(codes(&body), ["solve_timeout"]);
}

#[tokio::test]
async fn lists_scenarios_in_order() {
    let (status, body) = get(router(state()), "/api/scenarios").await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = body
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["id"].as_str().unwrap())
        .collect();
    let want: Vec<String> = (1..=10).map(|i| format!("s{i}")).collect();
    assert_eq!(ids, want);
    assert_eq!(body[0]["horizon"], 14);
    assert!(body[0]["name"].is_string());
}

#[tokio::test]
async fn empty_and_corrupt_catalogs() {
    let dir = std::env::temp_dir().join(format!("normplan-api-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let policies = repo_root().join("policies/mining");

    let st = AppState::load(&dir, &policies).unwrap();
    let (status, body) = get(router(st), "/api/scenarios").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!([]));

    std::fs::copy(
        repo_root().join("scenarios/mining/s1.json"),
        dir.join("s1.json"),
    )
    .unwrap();
    std::fs::write(dir.join("broken.json"), "{\"id\": ").unwrap();
    let st = AppState::load(&dir, &policies).unwrap();
    let (_, body) = get(router(st), "/api/scenarios").await;
    assert_eq!(body.as_array().unwrap().len(), 1);
    assert_eq!(body[0]["id"], "s1");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[tokio::test]
async fn analyze_mode_policies() {
    let (status, body) = get(router(state()), "/api/analyze?scenario=s1&modeset=safe").await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["consistent"], true);
    assert_eq!(body["categorical"], true);
    assert_eq!(body["states_checked"], 72);
    assert_eq!(body["modeset"], json!(["safe"]));
}

#[tokio::test]
async fn analyze_demo_policy_reports_witness() {
    let (status, body) = get(
        router(state()),
        "/api/analyze?scenario=s1&modeset=demo/inconsistent",
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["consistent"], false);
    assert!(!body["witnesses"]["inconsistent"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[tokio::test]
async fn analyze_rejects_bad_requests() {
    let (status, body) = get(router(state()), "/api/analyze?scenario=zz&modeset=safe").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(codes(&body), ["unknown_scenario"]);

    for modeset in ["turbo", "demo/../../etc/passwd", "demo/missing"] {
        let (status, body) = get(
            router(state()),
            &format!("/api/analyze?scenario=s1&modeset={modeset}"),
        )
        .await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{modeset}");
        assert_eq!(codes(&body), ["invalid_modeset"]);
    }
}

#[tokio::test]
async fn identical_requests_give_identical_plans() {
    let req = json!({"scenario_id": "s9", "initial_mode": "safe", "changes": [{"step": 2, "mode": "normal"}]});
    let (_, a) = post(router(state()), req.clone()).await;
    let (_, b) = post(router(state()), req).await;
    assert_eq!(a["plan"], b["plan"]);
    assert_eq!(a["metrics"], b["metrics"]);
}
