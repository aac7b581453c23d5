use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use nudge_core::session::stream::KEEPALIVE_SECS;
use nudge_core::{
    ParticipantToken, PresenterToken, ReactionType, ServiceError, SessionService, StreamEvent, StreamRole,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl ApiError {
    fn status(&self) -> StatusCode {
        match &self.0 {
            ServiceError::SessionNotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::SessionEnded(_) => StatusCode::GONE,
            ServiceError::Unauthorized => StatusCode::FORBIDDEN,
            ServiceError::Unavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::JoinThrottled(_) => StatusCode::TOO_MANY_REQUESTS,
            ServiceError::InvalidArgument(_) => StatusCode::BAD_REQUEST,
            ServiceError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        (status, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(service: Arc<SessionService>) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(end_session))
        .route("/sessions/{id}/join", post(join_session))
        .route("/sessions/{id}/reactions", post(submit_reaction))
        .route("/sessions/{id}/stream", get(stream))
        .route("/sessions/{id}/analytics", get(analytics))
        .with_state(service)
}

fn bearer(headers: &HeaderMap) -> Result<PresenterToken, ApiError> {
    headers
        .get(axum::http::header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(|t| PresenterToken(t.trim().to_string()))
        .ok_or(ApiError(ServiceError::Unauthorized))
}

async fn create_session(State(svc): State<Arc<SessionService>>) -> ApiResult<impl IntoResponse> {
    let created = svc.create_session()?;
    tracing::info!(session = %created.session_id, "session created");
    Ok((StatusCode::CREATED, Json(created)))
}

async fn join_session(
    State(svc): State<Arc<SessionService>>,
    Path(id): Path<String>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(svc.join_session(&id)?))
}

#[derive(Debug, Deserialize)]
pub struct ReactionBody {
    pub participant_token: ParticipantToken,
    pub kind: ReactionType,
    #[serde(default)]
    pub client_time: Option<u64>,
}

#[derive(Debug, Serialize)]
struct ReactionResponse {
    verdict: nudge_core::ModerationVerdict,
    cooldown_remaining_ms: u64,
    count_in_window: Option<u32>,
}

async fn submit_reaction(
    State(svc): State<Arc<SessionService>>,
    Path(id): Path<String>,
    Json(body): Json<ReactionBody>,
) -> ApiResult<impl IntoResponse> {
    let out = svc.submit_reaction(&id, &body.participant_token, body.kind, body.client_time)?;
    Ok(Json(ReactionResponse {
        verdict: out.verdict,
        cooldown_remaining_ms: out.cooldown_remaining_ms,
        count_in_window: out.count_in_window,
    }))
}

#[derive(Debug, Deserialize)]
pub struct StreamQuery {
    #[serde(default)]
    role: Option<String>,
    #[serde(default)]
    last_seq: Option<u64>,
}

fn to_sse(event: &StreamEvent) -> Event {
    Event::default()
        .id(event.seq.to_string())
        .event(event.payload.event_name())
        .data(event.payload.data_json())
}

async fn stream(
    State(svc): State<Arc<SessionService>>,
    Path(id): Path<String>,
    Query(q): Query<StreamQuery>,
    headers: HeaderMap,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let token = bearer(&headers)?;
    let role: StreamRole = match q.role.as_deref() {
        None => StreamRole::Presenter,
        Some(r) => r
            .parse()
            .map_err(|e: String| ApiError(ServiceError::InvalidArgument(e)))?,
    };
    // An explicit query parameter wins over the browser's reconnect header.
    let last_seq = q.last_seq.or_else(|| {
        headers
            .get("last-event-id")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.parse().ok())
    });
    let sub = svc.subscribe(&id, role, &token, last_seq.unwrap_or(0))?;
    let events = futures::stream::unfold(sub, |mut sub| async move {
        let event = sub.next().await?;
        Some((Ok(to_sse(&event)), sub))
    });
    Ok(Sse::new(events).keep_alive(KeepAlive::new().interval(Duration::from_secs(KEEPALIVE_SECS))))
}

async fn analytics(
    State(svc): State<Arc<SessionService>>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<impl IntoResponse> {
    let token = bearer(&headers)?;
    Ok(Json(svc.analytics(&id, &token)?))
}

async fn end_session(
    State(svc): State<Arc<SessionService>>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<impl IntoResponse> {
    let token = bearer(&headers)?;
    let record = svc.end_session(&id, &token)?;
    tracing::info!(session = %record.meta.session_id, entries = record.entries.len(), "session ended");
    Ok(Json(record))
}
