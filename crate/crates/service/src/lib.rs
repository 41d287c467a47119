//! HTTP API over a session store. Handlers hold no state of their own; every
//! read and write goes through [`FileStore`], which serializes writes per
//! session by revision.
//!
//! Requests authenticate with `Authorization: Bearer <secret>`. Mutations on
//! round artifacts require `If-Match: <revision>`; read models carry the
//! session revision as their ETag and honour `If-None-Match`.

mod auth;
mod error;
mod wire;

use std::collections::BTreeMap;
use std::future::Future;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::Router;
use dsrank_core::io::{chart_series, chart_series_json, discrepancies_json, load_seed_catalog, result_json, to_stable_json};
use dsrank_core::{
    build_report, per_criterion_drilldown, round_convergence, weight_drilldown, Analyst, Criterion, CriterionId,
    DataSource, FileStore, FuzzyBands, Quorum, RankingResult, Round, Session, SessionId, SessionState, StoreError,
    StoreRecord, Submission,
};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::net::TcpListener;

pub use auth::{ApiSessionToken, Grant, Role, TokenRegistry};
pub use error::ApiError;

#[derive(Debug, Clone)]
pub struct AppState {
    store: Arc<FileStore>,
    tokens: Arc<TokenRegistry>,
}

impl AppState {
    /// Opens the store and token registry under `data_dir`, creating it if absent.
    pub fn open(data_dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let store = FileStore::open(data_dir.as_ref())?;
        let tokens = TokenRegistry::open(data_dir.as_ref())?;
        Ok(Self { store: Arc::new(store), tokens: Arc::new(tokens) })
    }

    pub fn store(&self) -> &FileStore {
        &self.store
    }

    fn guard(&self, id: &SessionId, token: Option<&str>) -> Result<(StoreRecord, Grant), ApiError> {
        let record = self.store.load(id)?;
        let grant = token.and_then(|t| self.tokens.verify(id, t)).ok_or_else(ApiError::unauthorized)?;
        Ok((record, grant))
    }

    fn facilitator(&self, id: &SessionId, token: Option<&str>) -> Result<StoreRecord, ApiError> {
        let (record, grant) = self.guard(id, token)?;
        if grant.role != Role::Facilitator {
            return Err(ApiError::forbidden("this action needs a facilitator token"));
        }
        Ok(record)
    }
}

pub fn app(state: AppState) -> Router {
    Router::new()
        .route("/catalog", get(catalog))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/analysts", post(register_analyst))
        .route("/sessions/{id}/criteria", put(set_criteria))
        .route("/sessions/{id}/sources", put(set_sources))
        .route("/sessions/{id}/quorum", put(set_quorum))
        .route("/sessions/{id}/advance", post(advance))
        .route("/sessions/{id}/convergence", get(convergence))
        .route("/sessions/{id}/rounds/{r}/ballots", post(submit_ballot))
        .route("/sessions/{id}/rounds/{r}/sheets", post(submit_sheet))
        .route("/sessions/{id}/rounds/{r}/matrices", post(submit_matrix))
        .route("/sessions/{id}/rounds/{r}/annotations", post(annotate))
        .route("/sessions/{id}/rounds/{r}/result", get(result))
        .route("/sessions/{id}/rounds/{r}/discrepancies", get(discrepancies))
        .route("/sessions/{id}/rounds/{r}/drilldown", get(drilldown))
        .route("/sessions/{id}/rounds/{r}/charts", get(charts))
        .fallback(|| async { ApiError::not_found("not_found", "no such route") })
        .with_state(state)
}

/// Serves `app(state)` on `listener` until `shutdown` resolves. In-flight
/// requests are allowed to finish; every store write is already durable
/// when its response is sent.
pub async fn serve(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app(state)).with_graceful_shutdown(shutdown).await
}

type ApiResult = Result<Response, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))?
}

fn bearer(headers: &HeaderMap) -> Option<String> {
    let value = headers.get(header::AUTHORIZATION)?.to_str().ok()?;
    let (scheme, token) = value.split_once(' ')?;
    scheme.eq_ignore_ascii_case("bearer").then(|| token.trim().to_owned())
}

fn etag(revision: u64) -> HeaderValue {
    HeaderValue::from_str(&format!("\"{revision}\"")).expect("digits are a valid header value")
}

fn parse_tag(tag: &str) -> Option<u64> {
    let tag = tag.trim();
    let tag = tag.strip_prefix("W/").unwrap_or(tag);
    tag.trim_matches('"').parse().ok()
}

fn if_match(headers: &HeaderMap) -> Result<Option<u64>, ApiError> {
    match headers.get(header::IF_MATCH) {
        None => Ok(None),
        Some(v) => v
            .to_str()
            .ok()
            .and_then(parse_tag)
            .map(Some)
            .ok_or_else(|| ApiError::bad_request("If-Match must carry a session revision")),
    }
}

fn not_modified(headers: &HeaderMap, revision: u64) -> bool {
    headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|t| t.trim() == "*" || parse_tag(t) == Some(revision)))
}

fn json_response(status: StatusCode, revision: u64, body: String) -> Response {
    let mut resp = (status, [(header::CONTENT_TYPE, "application/json")], body).into_response();
    resp.headers_mut().insert(header::ETAG, etag(revision));
    resp
}

fn mutation(status: StatusCode, revision: u64, mut body: Value) -> Response {
    body["revision"] = json!(revision);
    json_response(status, revision, body.to_string())
}

fn stable<T: serde::Serialize>(value: &T) -> Result<String, ApiError> {
    to_stable_json(value).map_err(|e| ApiError::internal(e.to_string()))
}

fn round_of(session: &Session, r: usize) -> Result<&Round, ApiError> {
    session.rounds.get(r).ok_or_else(|| ApiError::not_found("unknown_round", format!("round {r} does not exist")))
}

async fn catalog() -> ApiResult {
    Ok(json_response(StatusCode::OK, 0, stable(&load_seed_catalog())?))
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult {
    let req: wire::CreateSession = wire::parse(&body)?;
    blocking(move || {
        let mut record = state.store.create_session(req.problem, req.config)?;
        if let Some(quorum) = req.quorum {
            state.store.submit(&record.session_id, record.revision, Submission::SetQuorum { quorum })?;
            record = state.store.load(&record.session_id)?;
        }
        let token = state
            .tokens
            .issue(&record.session_id, Role::Facilitator, None)
            .map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(mutation(
            StatusCode::CREATED,
            record.revision,
            json!({ "session_id": record.session_id, "token": token, "session": record.session }),
        ))
    })
    .await
}

async fn get_session(State(state): State<AppState>, UrlPath(id): UrlPath<String>, headers: HeaderMap) -> ApiResult {
    let token = bearer(&headers);
    blocking(move || {
        let (record, _) = state.guard(&SessionId::new(id), token.as_deref())?;
        if not_modified(&headers, record.revision) {
            return Ok(json_response(StatusCode::NOT_MODIFIED, record.revision, String::new()));
        }
        Ok(json_response(StatusCode::OK, record.revision, stable(&record)?))
    })
    .await
}

async fn register_analyst(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let token = bearer(&headers);
    let expected = if_match(&headers)?;
    blocking(move || {
        let id = SessionId::new(id);
        let record = state.facilitator(&id, token.as_deref())?;
        let analyst: Analyst = wire::parse(&body)?;
        let analyst_id = analyst.id.clone();
        let out = state.store.submit(&id, expected.unwrap_or(record.revision), Submission::AddAnalyst(analyst))?;
        let token = state
            .tokens
            .issue(&id, Role::Analyst, Some(analyst_id.clone()))
            .map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(mutation(StatusCode::CREATED, out.revision, json!({ "analyst_id": analyst_id, "token": token })))
    })
    .await
}

/// Facilitator-only edits that are not tied to a round.
async fn facilitator_edit(
    state: AppState,
    id: String,
    headers: HeaderMap,
    body: Bytes,
    build: fn(&[u8]) -> Result<Submission, ApiError>,
) -> ApiResult {
    let token = bearer(&headers);
    let expected = if_match(&headers)?;
    blocking(move || {
        let id = SessionId::new(id);
        let record = state.facilitator(&id, token.as_deref())?;
        let submission = build(&body)?;
        let out = state.store.submit(&id, expected.unwrap_or(record.revision), submission)?;
        Ok(mutation(StatusCode::OK, out.revision, json!({ "changed": out.changed })))
    })
    .await
}

async fn set_criteria(State(state): State<AppState>, UrlPath(id): UrlPath<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    facilitator_edit(state, id, headers, body, |b| {
        Ok(Submission::SetCriteria { criteria: wire::parse::<Vec<Criterion>>(b)? })
    })
    .await
}

async fn set_sources(State(state): State<AppState>, UrlPath(id): UrlPath<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    facilitator_edit(state, id, headers, body, |b| {
        Ok(Submission::SetSources { sources: wire::parse::<Vec<DataSource>>(b)? })
    })
    .await
}

async fn set_quorum(State(state): State<AppState>, UrlPath(id): UrlPath<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    facilitator_edit(state, id, headers, body, |b| Ok(Submission::SetQuorum { quorum: wire::parse::<Quorum>(b)? })).await
}

async fn advance(State(state): State<AppState>, UrlPath(id): UrlPath<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let token = bearer(&headers);
    let expected = if_match(&headers)?;
    blocking(move || {
        let id = SessionId::new(id);
        state.facilitator(&id, token.as_deref())?;
        let req: wire::Advance = wire::parse(&body)?;
        let record = state.store.advance_state(&id, expected, req.target)?;
        let mut body = json!({ "state": record.session.state, "round": record.session.current_round().map(|r| r.index) });
        if record.session.state == SessionState::Computed {
            let result = record.session.current_round().and_then(|r| r.result.as_ref());
            if let Some(result) = result {
                body["result"] = serde_json::from_str(&result_json(result)).map_err(|e| ApiError::internal(e.to_string()))?;
            }
        }
        Ok(mutation(StatusCode::OK, record.revision, body))
    })
    .await
}

/// Round artifact submission: checks authorship and the round number, then
/// hands the artifact to the store under the caller's `If-Match` revision.
async fn submit_artifact(
    state: AppState,
    (id, r): (String, usize),
    headers: HeaderMap,
    body: Bytes,
    build: fn(&[u8]) -> Result<Submission, ApiError>,
) -> ApiResult {
    let token = bearer(&headers);
    let expected = if_match(&headers)?.ok_or_else(|| {
        ApiError::new(StatusCode::PRECONDITION_REQUIRED, "precondition_required", "submissions need an If-Match revision")
    })?;
    blocking(move || {
        let id = SessionId::new(id);
        let (record, grant) = state.guard(&id, token.as_deref())?;
        let submission = build(&body)?;
        if grant.role == Role::Analyst && submission.analyst() != grant.analyst_id.as_ref() {
            return Err(ApiError::forbidden("analyst tokens may only submit their own artifacts"));
        }
        let current = record.session.current_round().map(|round| round.index);
        match current {
            Some(c) if r == c => {}
            Some(c) if r < c => {
                return Err(ApiError::new(StatusCode::CONFLICT, "round_closed", format!("round {r} is closed; current round is {c}")))
            }
            _ => return Err(ApiError::not_found("unknown_round", format!("round {r} is not open"))),
        }
        let out = state.store.submit(&id, expected, submission)?;
        Ok(mutation(StatusCode::OK, out.revision, json!({ "changed": out.changed })))
    })
    .await
}

async fn submit_ballot(State(s): State<AppState>, UrlPath(p): UrlPath<(String, usize)>, h: HeaderMap, b: Bytes) -> ApiResult {
    submit_artifact(s, p, h, b, wire::ballot).await
}

async fn submit_sheet(State(s): State<AppState>, UrlPath(p): UrlPath<(String, usize)>, h: HeaderMap, b: Bytes) -> ApiResult {
    submit_artifact(s, p, h, b, wire::sheet).await
}

async fn submit_matrix(State(s): State<AppState>, UrlPath(p): UrlPath<(String, usize)>, h: HeaderMap, b: Bytes) -> ApiResult {
    submit_artifact(s, p, h, b, wire::matrix).await
}

async fn annotate(
    State(state): State<AppState>,
    UrlPath((id, r)): UrlPath<(String, usize)>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let token = bearer(&headers);
    let expected = if_match(&headers)?;
    blocking(move || {
        let id = SessionId::new(id);
        let record = state.facilitator(&id, token.as_deref())?;
        if record.session.current_round().map(|round| round.index) != Some(r) {
            round_of(&record.session, r)?;
            return Err(ApiError::new(StatusCode::CONFLICT, "round_closed", format!("round {r} is not the current round")));
        }
        let a: wire::Annotation = wire::parse(&body)?;
        let out =
            state.store.submit(&id, expected.unwrap_or(record.revision), Submission::Annotate { key: a.key, cause: a.cause })?;
        Ok(mutation(StatusCode::OK, out.revision, json!({ "changed": out.changed })))
    })
    .await
}

/// Renders a read model of a computed round, short-circuiting to 304 when
/// the caller already holds the current revision.
async fn read_round(
    state: AppState,
    (id, r): (String, usize),
    headers: HeaderMap,
    render: impl FnOnce(&Round, &RankingResult) -> Result<String, ApiError> + Send + 'static,
) -> ApiResult {
    let token = bearer(&headers);
    blocking(move || {
        let (record, _) = state.guard(&SessionId::new(id), token.as_deref())?;
        let round = round_of(&record.session, r)?;
        let result = round
            .result
            .as_ref()
            .ok_or_else(|| ApiError::not_found("not_computed", format!("round {r} has no computed result")))?;
        if not_modified(&headers, record.revision) {
            return Ok(json_response(StatusCode::NOT_MODIFIED, record.revision, String::new()));
        }
        Ok(json_response(StatusCode::OK, record.revision, render(round, result)?))
    })
    .await
}

fn report_error(e: dsrank_core::discrepancy::DiscrepancyError) -> ApiError {
    use dsrank_core::discrepancy::DiscrepancyError;
    match e {
        DiscrepancyError::UnknownCriterion(c) => ApiError::not_found("unknown_criterion", format!("unknown criterion {c}")),
        other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_input", other.to_string()),
    }
}

async fn result(State(s): State<AppState>, UrlPath(p): UrlPath<(String, usize)>, h: HeaderMap) -> ApiResult {
    read_round(s, p, h, |_, result| Ok(result_json(result))).await
}

async fn discrepancies(State(s): State<AppState>, UrlPath(p): UrlPath<(String, usize)>, h: HeaderMap) -> ApiResult {
    read_round(s, p, h, |round, result| {
        let report = build_report(result, &FuzzyBands::default(), &round.annotations).map_err(report_error)?;
        Ok(discrepancies_json(&report))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct DrilldownQuery {
    criterion: Option<String>,
}

async fn drilldown(
    State(s): State<AppState>,
    UrlPath(p): UrlPath<(String, usize)>,
    Query(q): Query<DrilldownQuery>,
    h: HeaderMap,
) -> ApiResult {
    read_round(s, p, h, move |_, result| {
        let bands = FuzzyBands::default();
        match q.criterion {
            Some(c) => stable(&per_criterion_drilldown(result, &CriterionId::new(c), &bands).map_err(report_error)?),
            None => stable(&weight_drilldown(result, &bands).map_err(report_error)?),
        }
    })
    .await
}

async fn charts(State(s): State<AppState>, UrlPath(p): UrlPath<(String, usize)>, h: HeaderMap) -> ApiResult {
    read_round(s, p, h, |round, result| {
        let report = build_report(result, &FuzzyBands::default(), &round.annotations).map_err(report_error)?;
        Ok(chart_series_json(&chart_series(result, &report)))
    })
    .await
}

async fn convergence(State(state): State<AppState>, UrlPath(id): UrlPath<String>, headers: HeaderMap) -> ApiResult {
    let token = bearer(&headers);
    blocking(move || {
        let (record, _) = state.guard(&SessionId::new(id), token.as_deref())?;
        if not_modified(&headers, record.revision) {
            return Ok(json_response(StatusCode::NOT_MODIFIED, record.revision, String::new()));
        }
        let series = round_convergence(&record.session);
        let by_round: BTreeMap<usize, f64> = series.iter().map(|s| (s.round, s.mean_distance)).collect();
        let ratios: Vec<Value> = series
            .windows(2)
            .map(|w| {
                let ratio = if w[0].mean_distance > 0.0 { Some(w[1].mean_distance / w[0].mean_distance) } else { None };
                json!({ "from": w[0].round, "to": w[1].round, "ratio": ratio })
            })
            .collect();
        let body = json!({ "series": series, "mean_distance": by_round, "ratios": ratios });
        Ok(json_response(StatusCode::OK, record.revision, stable(&body)?))
    })
    .await
}
