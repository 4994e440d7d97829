//! HTTP/JSON front end: scenario catalog, policy analysis and solving.
//!
//! The service holds no per-request state. Catalog and policies are loaded
//! once at startup and shared read-only; each solve runs on the blocking
//! pool under a timeout.

use std::path::{Component, Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use normplan_core::aopl::{AnalysisReport, PolicyDocument, PolicyEvaluator};
use normplan_core::catalog::{load_policy_file, PolicyLibrary, ScenarioCatalog};
use normplan_core::controller::{
    generate_plan_with_mode_changes, validate_schedule, AnnotatedPlan, ControllerError, ModeChange,
    ModeSchedule, ScheduleIssue, DEFAULT_MAX_CHANGES,
};
use normplan_core::domain::{reachable_states, GridDisplay};
use normplan_core::planner::MetricVector;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SOLVE_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Clone)]
pub struct AppState {
    pub catalog: Arc<ScenarioCatalog>,
    pub library: Arc<PolicyLibrary>,
    /// Root for `demo/<name>` policy references in analysis requests.
    pub policy_root: PathBuf,
    pub solve_timeout: Duration,
    pub max_changes: usize,
}

impl AppState {
    /// Loads scenarios and mode policies; `demo/...` references resolve
    /// against the parent of `policy_dir`.
    pub fn load(
        scenario_dir: &Path,
        policy_dir: &Path,
    ) -> Result<Self, normplan_core::catalog::CatalogError> {
        Ok(AppState {
            catalog: Arc::new(ScenarioCatalog::load(scenario_dir)?),
            library: Arc::new(PolicyLibrary::load(policy_dir)?),
            policy_root: policy_dir
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_default(),
            solve_timeout: DEFAULT_SOLVE_TIMEOUT,
            max_changes: DEFAULT_MAX_CHANGES,
        })
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/scenarios", get(list_scenarios))
        .route("/api/solve", post(solve))
        .route("/api/analyze", get(analyze))
        .route("/healthz", get(|| async { "ok" }))
        .with_state(state)
}

#[derive(Debug, Serialize)]
pub struct ScenarioSummary {
    pub id: String,
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub horizon: usize,
    pub display: Option<GridDisplay>,
}

async fn list_scenarios(State(state): State<AppState>) -> Json<Vec<ScenarioSummary>> {
    Json(
        state
            .catalog
            .iter()
            .map(|s| ScenarioSummary {
                id: s.id.clone(),
                name: s.name.clone(),
                description: s.description.clone(),
                horizon: s.horizon,
                display: s.display.clone(),
            })
            .collect(),
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveRequest {
    pub scenario_id: String,
    #[serde(default)]
    pub initial_mode: Option<String>,
    #[serde(default)]
    pub changes: Vec<ModeChange>,
    #[serde(default)]
    pub horizon_override: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct SolveResponse {
    pub plan: Option<AnnotatedPlan>,
    /// One vector per mode segment.
    pub metrics: Vec<MetricVector>,
    pub solve_time_ms: u64,
    pub errors: Vec<ScheduleIssue>,
}

fn issue(code: &str, message: impl Into<String>) -> ScheduleIssue {
    ScheduleIssue::new(code, message)
}

fn failure(status: StatusCode, errors: Vec<ScheduleIssue>, started: Instant) -> Response {
    let body = SolveResponse {
        plan: None,
        metrics: Vec::new(),
        solve_time_ms: started.elapsed().as_millis() as u64,
        errors,
    };
    (status, Json(body)).into_response()
}

async fn solve(
    State(state): State<AppState>,
    body: Result<Json<SolveRequest>, JsonRejection>,
) -> Response {
    let started = Instant::now();
    let req = match body {
        Ok(Json(req)) => req,
        Err(rejection) => {
            return failure(
                StatusCode::BAD_REQUEST,
                vec![issue("malformed_request", rejection.body_text())],
                started,
            )
        }
    };

    let mut errors = Vec::new();
    let scenario = state.catalog.get(&req.scenario_id);
    if scenario.is_none() {
        errors.push(issue(
            "unknown_scenario",
            format!("unknown scenario `{}`", req.scenario_id),
        ));
    }
    let scenario = match (scenario, req.horizon_override) {
        (Some(_), Some(0)) => {
            errors.push(issue("invalid_horizon", "horizon must be at least 1"));
            None
        }
        (Some(s), Some(h)) => match s.with_horizon(h) {
            Ok(s) => Some(Arc::new(s)),
            Err(e) => {
                errors.push(issue("invalid_horizon", e.to_string()));
                None
            }
        },
        (s, _) => s,
    };
    let initial_mode = match req.initial_mode.as_deref().map(str::trim) {
        Some(m) if !m.is_empty() => m.to_string(),
        _ => {
            errors.push(issue(
                "initial_mode_required",
                "an initial behavior mode is required",
            ));
            String::new()
        }
    };
    let schedule = ModeSchedule {
        initial_mode,
        changes: req.changes.clone(),
    };
    let known: Vec<&str> = state.library.modes().map(|m| m.name.as_str()).collect();
    // without a scenario the range check uses an unbounded horizon
    let horizon = scenario.as_ref().map_or(usize::MAX, |s| s.horizon);
    // a missing initial mode is already reported; skip its unknown_mode twin
    let skip = usize::from(schedule.initial_mode.is_empty());
    errors.extend(
        validate_schedule(&schedule, horizon, &known, Some(state.max_changes))
            .into_iter()
            .skip(skip),
    );
    let Some(scenario) = scenario.filter(|_| errors.is_empty()) else {
        return failure(StatusCode::UNPROCESSABLE_ENTITY, errors, started);
    };

    let library = state.library.clone();
    let task = tokio::task::spawn_blocking(move || {
        generate_plan_with_mode_changes(&scenario, &library, &schedule)
    });
    let outcome = tokio::time::timeout(state.solve_timeout, task).await;
    match outcome {
        Err(_) => failure(
            StatusCode::GATEWAY_TIMEOUT,
            vec![issue(
                "solve_timeout",
                format!(
                    "solving took longer than {} s",
                    state.solve_timeout.as_secs()
                ),
            )],
            started,
        ),
        Ok(Err(join)) => {
            tracing::error!(error = %join, "solver task failed");
            failure(
                StatusCode::INTERNAL_SERVER_ERROR,
                vec![issue("internal", "the solver failed unexpectedly")],
                started,
            )
        }
        Ok(Ok(Err(e))) => {
            let (status, code) = match &e {
                ControllerError::NoPlan { .. } => (StatusCode::CONFLICT, "no_plan"),
                ControllerError::Validation(issues) => {
                    return failure(StatusCode::UNPROCESSABLE_ENTITY, issues.clone(), started)
                }
                _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
            };
            if status == StatusCode::INTERNAL_SERVER_ERROR {
                tracing::error!(error = %e, "solve failed");
            }
            failure(status, vec![issue(code, e.to_string())], started)
        }
        Ok(Ok(Ok(plan))) => {
            let body = SolveResponse {
                metrics: plan.final_metrics.clone(),
                plan: Some(plan),
                solve_time_ms: started.elapsed().as_millis() as u64,
                errors: Vec::new(),
            };
            (StatusCode::OK, Json(body)).into_response()
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct AnalyzeQuery {
    pub scenario: String,
    /// Comma-separated mode names and `demo/<name>` policy files; the base
    /// policy is always included.
    #[serde(default)]
    pub modeset: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeResponse {
    pub scenario: String,
    pub modeset: Vec<String>,
    #[serde(flatten)]
    pub report: AnalysisReport,
}

fn error_body(status: StatusCode, code: &str, message: impl Into<String>) -> Response {
    (
        status,
        Json(serde_json::json!({"errors": [issue(code, message)]})),
    )
        .into_response()
}

/// Resolves a `demo/<name>` reference below `root`, refusing anything that
/// could leave it.
fn policy_file(root: &Path, reference: &str) -> Option<PathBuf> {
    let rel = Path::new(reference);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return None;
    }
    let mut path = root.join(rel);
    if path.extension().is_none() {
        path.set_extension("aopl");
    }
    Some(path)
}

fn rejection(status: StatusCode, code: &str, message: impl Into<String>) -> Box<Response> {
    Box::new(error_body(status, code, message))
}

fn policy_for_modeset(
    state: &AppState,
    entries: &[String],
) -> Result<PolicyDocument, Box<Response>> {
    let mut doc = state.library.base().clone();
    for entry in entries {
        let part = if state.library.mode(entry).is_some() {
            state.library.extras(entry).cloned().map_err(|e| {
                rejection(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
            })?
        } else if entry.contains('/') {
            let path = policy_file(&state.policy_root, entry).ok_or_else(|| {
                rejection(
                    StatusCode::BAD_REQUEST,
                    "invalid_modeset",
                    format!("`{entry}` is not a valid policy reference"),
                )
            })?;
            load_policy_file(&path)
                .map_err(|e| rejection(StatusCode::BAD_REQUEST, "invalid_modeset", e.to_string()))?
        } else {
            return Err(rejection(
                StatusCode::BAD_REQUEST,
                "invalid_modeset",
                format!("unknown mode or policy `{entry}`"),
            ));
        };
        doc = doc
            .merge(&part)
            .map_err(|e| rejection(StatusCode::BAD_REQUEST, "invalid_modeset", e.to_string()))?;
    }
    Ok(doc)
}

async fn analyze(State(state): State<AppState>, Query(q): Query<AnalyzeQuery>) -> Response {
    let Some(scenario) = state.catalog.get(&q.scenario) else {
        return error_body(
            StatusCode::NOT_FOUND,
            "unknown_scenario",
            format!("unknown scenario `{}`", q.scenario),
        );
    };
    let entries: Vec<String> = q
        .modeset
        .as_deref()
        .unwrap_or("")
        .split(',')
        .map(str::trim)
        .filter(|e| !e.is_empty())
        .map(str::to_string)
        .collect();
    let doc = match policy_for_modeset(&state, &entries) {
        Ok(d) => d,
        Err(resp) => return *resp,
    };
    let result = tokio::task::spawn_blocking(move || -> Result<AnalysisReport, String> {
        let policy = doc.ground(&scenario).map_err(|e| e.to_string())?;
        let states = reachable_states(&scenario).map_err(|e| e.to_string())?;
        PolicyEvaluator::new(&policy, &scenario)
            .analyze(&states)
            .map_err(|e| e.to_string())
    })
    .await;
    match result {
        Ok(Ok(report)) => {
            let body = AnalyzeResponse {
                scenario: q.scenario,
                modeset: entries,
                report,
            };
            (StatusCode::OK, Json(body)).into_response()
        }
        Ok(Err(message)) => {
            error_body(StatusCode::UNPROCESSABLE_ENTITY, "analysis_failed", message)
        }
        Err(join) => error_body(
            StatusCode::INTERNAL_SERVER_ERROR,
            "internal",
            join.to_string(),
        ),
    }
}
