//! The HTTP API.
//!
//! | method | path | action |
//! |---|---|---|
//! | POST | `/api/login` | none |
//! | GET | `/api/pages` | read, per page |
//! | GET, PUT | `/api/pages/{ns}/{title}` | read; edit (+ annotate) |
//! | GET | `/api/pages/{ns}/{title}/revisions[/{n}]` | read |
//! | GET | `/api/pages/{ns}/{title}/annotations` | read |
//! | POST | `/api/check` | annotate |
//! | POST | `/api/sparql` | query |
//! | GET, PUT | `/api/ontology` | admin |
//!
//! Everything but login wants `Authorization: Bearer <token>`. Anything
//! outside `/api` is served from the static directory, if one is set.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;
use wikibridge_core::acl::Principal;
use wikibridge_core::query::{RESULTS_MEDIA_TYPE, SPARQL_QUERY_MEDIA_TYPE};

use crate::auth::{Sessions, DEFAULT_TOKEN_TTL};
use crate::error::ServiceError;
use crate::wiki::{Actor, CheckRequest, SaveRequest, Wiki, WikiConfig};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if matches!(self, ServiceError::Io(_) | ServiceError::Config(_)) {
            tracing::error!("{self}");
        }
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.body())).into_response()
    }
}

#[derive(Clone)]
pub struct AppState {
    pub wiki: Arc<RwLock<Wiki>>,
    pub sessions: Arc<Sessions>,
}

impl AppState {
    pub fn new(wiki: Wiki, token_ttl: Duration) -> AppState {
        AppState { wiki: Arc::new(RwLock::new(wiki)), sessions: Arc::new(Sessions::new(token_ttl)) }
    }

    fn principal(&self, headers: &HeaderMap) -> Result<Principal, ServiceError> {
        let token = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or(ServiceError::Unauthorized)?;
        let user = self.sessions.resolve(token.trim()).ok_or(ServiceError::Unauthorized)?;
        Ok(self.read().principal(&user))
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Wiki> {
        self.wiki.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Wiki> {
        self.wiki.write().unwrap_or_else(|e| e.into_inner())
    }
}

type ApiResult = Result<Response, ServiceError>;

fn ok(value: impl serde::Serialize) -> ApiResult {
    Ok(Json(value).into_response())
}

#[derive(Deserialize)]
struct Login {
    user: String,
    password: String,
}

async fn login(State(st): State<AppState>, Json(body): Json<Login>) -> ApiResult {
    let wiki = st.read();
    if !wiki.verify_password(&body.user, &body.password) {
        return Err(ServiceError::BadCredentials);
    }
    let p = wiki.principal(&body.user);
    let token = st.sessions.issue(&body.user);
    ok(json!({ "token": token, "user": p.user, "groups": p.groups, "capabilities": wiki.capabilities(&p) }))
}

async fn list_pages(State(st): State<AppState>, headers: HeaderMap) -> ApiResult {
    let p = st.principal(&headers)?;
    ok(st.read().list_pages(Actor::User(&p)))
}

async fn get_page(State(st): State<AppState>, headers: HeaderMap, Path((ns, title)): Path<(String, String)>) -> ApiResult {
    let p = st.principal(&headers)?;
    ok(st.read().get_page(Actor::User(&p), &ns, &title)?)
}

async fn put_page(
    State(st): State<AppState>,
    headers: HeaderMap,
    Path((ns, title)): Path<(String, String)>,
    Json(body): Json<SaveRequest>,
) -> ApiResult {
    let p = st.principal(&headers)?;
    let out = st.write().put_page(Actor::User(&p), &ns, &title, &body)?;
    let status = if out.revision == 1 { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(out)).into_response())
}

async fn list_revisions(
    State(st): State<AppState>,
    headers: HeaderMap,
    Path((ns, title)): Path<(String, String)>,
) -> ApiResult {
    let p = st.principal(&headers)?;
    ok(st.read().list_revisions(Actor::User(&p), &ns, &title)?)
}

async fn get_revision(
    State(st): State<AppState>,
    headers: HeaderMap,
    Path((ns, title, n)): Path<(String, String, String)>,
) -> ApiResult {
    let p = st.principal(&headers)?;
    let n: u64 = n.parse().map_err(|_| ServiceError::NotFound(format!("revision {n}")))?;
    ok(st.read().get_revision(Actor::User(&p), &ns, &title, n)?)
}

async fn annotations(
    State(st): State<AppState>,
    headers: HeaderMap,
    Path((ns, title)): Path<(String, String)>,
) -> ApiResult {
    let p = st.principal(&headers)?;
    let quads = st.read().annotations(Actor::User(&p), &ns, &title)?;
    let nquads: String = quads.iter().map(|q| q.to_nquads() + "\n").collect();
    let rows: Vec<Value> = quads
        .iter()
        .map(|q| {
            json!({
                "subject": q.subject.to_nquads(),
                "predicate": q.predicate.to_nquads(),
                "object": q.object.to_nquads(),
                "graph": q.graph.to_nquads(),
            })
        })
        .collect();
    ok(json!({ "namespace": ns, "title": title, "quads": rows, "nquads": nquads }))
}

async fn check(State(st): State<AppState>, headers: HeaderMap, Json(body): Json<CheckRequest>) -> ApiResult {
    let p = st.principal(&headers)?;
    ok(st.read().check(Actor::User(&p), &body)?)
}

#[derive(Deserialize)]
struct SparqlBody {
    query: String,
    #[serde(default)]
    entailment: bool,
}

#[derive(Deserialize)]
struct SparqlParams {
    #[serde(default)]
    entailment: Option<bool>,
}

/// Accepts `{query, entailment}` as JSON, or the bare query text with
/// the SPARQL query media type and `?entailment=true`.
async fn sparql(State(st): State<AppState>, headers: HeaderMap, Query(params): Query<SparqlParams>, body: String) -> ApiResult {
    let p = st.principal(&headers)?;
    let content_type = headers.get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()).unwrap_or("");
    let req = if content_type.starts_with(SPARQL_QUERY_MEDIA_TYPE) {
        SparqlBody { query: body, entailment: params.entailment.unwrap_or(false) }
    } else {
        serde_json::from_str(&body).map_err(|e| ServiceError::BadRequest(format!("expected {{query, entailment}}: {e}")))?
    };
    let results = st.read().query(Actor::User(&p), &req.query, req.entailment)?;
    Ok(([(header::CONTENT_TYPE, RESULTS_MEDIA_TYPE)], results.to_json().to_string()).into_response())
}

async fn get_ontology(State(st): State<AppState>, headers: HeaderMap) -> ApiResult {
    let p = st.principal(&headers)?;
    ok(st.read().get_ontology(Actor::User(&p))?)
}

/// The body is the ontology document itself.
async fn put_ontology(State(st): State<AppState>, headers: HeaderMap, body: String) -> ApiResult {
    let p = st.principal(&headers)?;
    ok(st.write().put_ontology(Actor::User(&p), &body)?)
}

async fn api_not_found() -> ServiceError {
    ServiceError::NotFound("no such endpoint".into())
}

pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/login", post(login))
        .route("/pages", get(list_pages))
        .route("/pages/{ns}/{title}", get(get_page).put(put_page))
        .route("/pages/{ns}/{title}/revisions", get(list_revisions))
        .route("/pages/{ns}/{title}/revisions/{n}", get(get_revision))
        .route("/pages/{ns}/{title}/annotations", get(annotations))
        .route("/check", post(check))
        .route("/sparql", post(sparql))
        .route("/ontology", get(get_ontology).put(put_ontology))
        .fallback(api_not_found);
    let app = Router::new().nest("/api", api).with_state(state);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub data_dir: PathBuf,
    pub addr: SocketAddr,
    pub strict_default: bool,
    pub token_ttl: Duration,
    pub static_dir: Option<PathBuf>,
}

impl ServerConfig {
    pub fn new(data_dir: impl Into<PathBuf>, port: u16) -> ServerConfig {
        ServerConfig {
            data_dir: data_dir.into(),
            addr: SocketAddr::from(([127, 0, 0, 1], port)),
            strict_default: false,
            token_ttl: DEFAULT_TOKEN_TTL,
            static_dir: None,
        }
    }
}

/// Opens the data directory and serves until interrupted.
pub async fn serve(config: ServerConfig) -> Result<(), ServiceError> {
    let wiki = Wiki::open(&config.data_dir, WikiConfig { strict_default: config.strict_default, ..Default::default() })?;
    let app = router(AppState::new(wiki, config.token_ttl), config.static_dir.clone());
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
