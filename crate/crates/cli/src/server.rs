use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use nccut_core::imagegraph::{slico, RegionMap};
use nccut_core::pipeline::{init_session_with_regions, Polygon, SegSession, SegmentOutcome, Stroke};
use nccut_core::{image_dimensions, load_image, Config, RgbImage};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::boundaries::region_outlines;

pub const DEFAULT_MAX_PIXELS: usize = 16_000_000;
const MAX_BODY_BYTES: usize = 256 << 20;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub max_pixels: usize,
    pub idle_timeout: Duration,
    pub segmentation: Config,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            max_pixels: DEFAULT_MAX_PIXELS,
            idle_timeout: Duration::from_secs(30 * 60),
            segmentation: Config::default(),
        }
    }
}

/// What read endpoints see: replaced wholesale when a mutation finishes.
#[derive(Default)]
struct View {
    superpixels: Option<Arc<Value>>,
    mask_png: Option<Arc<Vec<u8>>>,
    mask_raw: Option<Arc<Vec<u8>>>,
    ncmap_png: Option<Arc<Vec<u8>>>,
    candidates: Option<Arc<Value>>,
}

pub struct Session {
    image: RgbImage,
    regions: RegionMap,
    /// Held for the whole of a mutation; a second mutation gets 409.
    pub work: Mutex<Option<SegSession>>,
    view: RwLock<View>,
    last_used: Mutex<Instant>,
}

impl Session {
    fn touch(&self) {
        *self.last_used.lock() = Instant::now();
    }
}

pub struct AppState {
    config: ServerConfig,
    sessions: Mutex<HashMap<String, Arc<Session>>>,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Arc<Self> {
        Arc::new(Self {
            config,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn session(&self, id: &str) -> Option<Arc<Session>> {
        self.sessions.lock().get(id).cloned()
    }

    pub fn n_sessions(&self) -> usize {
        self.sessions.lock().len()
    }

    /// Drops sessions idle for longer than the timeout as of `now`; returns how many.
    pub fn purge_idle(&self, now: Instant) -> usize {
        let mut sessions = self.sessions.lock();
        let before = sessions.len();
        let timeout = self.config.idle_timeout;
        sessions.retain(|_, s| now.saturating_duration_since(*s.last_used.lock()) <= timeout);
        before - sessions.len()
    }
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    Conflict(String),
    TooLarge(String),
    Unprocessable(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, msg) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, m),
            ApiError::TooLarge(m) => (StatusCode::PAYLOAD_TOO_LARGE, m),
            ApiError::Unprocessable(m) => (StatusCode::UNPROCESSABLE_ENTITY, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(json!({ "error": msg }))).into_response()
    }
}

impl From<nccut_core::Error> for ApiError {
    fn from(e: nccut_core::Error) -> Self {
        use nccut_core::Error as E;
        match e {
            E::Decode(_) | E::InvalidInput(_) | E::InvalidRoi(_) | E::InvalidPath(..) | E::Json(_) => ApiError::BadRequest(e.to_string()),
            E::Numerical(_) | E::InvalidLabeling(_) => ApiError::Unprocessable(e.to_string()),
            _ => ApiError::Internal(e.to_string()),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/superpixels", get(superpixels))
        .route("/sessions/{id}/segment", post(segment))
        .route("/sessions/{id}/edit", post(edit))
        .route("/sessions/{id}/mask", get(mask))
        .route("/sessions/{id}/ncmap", get(ncmap))
        .route("/sessions/{id}/candidates", get(candidates))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state)
}

/// Serves until the process is stopped, purging idle sessions in the background.
pub async fn serve(addr: SocketAddr, config: ServerConfig) -> anyhow::Result<()> {
    let state = AppState::new(config);
    let sweeper = state.clone();
    let period = (sweeper.config.idle_timeout / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let n = sweeper.purge_idle(Instant::now());
            if n > 0 {
                log::info!("dropped {n} idle sessions");
            }
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

fn lookup(state: &AppState, id: &str) -> ApiResult<Arc<Session>> {
    let s = state.session(id).ok_or_else(|| ApiError::NotFound(format!("no session {id}")))?;
    s.touch();
    Ok(s)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(format!("worker failed: {e}")))?
}

fn png(bytes: &[u8]) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes.to_vec()).into_response()
}

#[derive(Serialize)]
struct Created {
    id: String,
    width: usize,
    height: usize,
    n_regions: usize,
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<Created>> {
    if body.is_empty() {
        return Err(ApiError::BadRequest("empty body; expected an encoded image".into()));
    }
    let (w, h) = image_dimensions(&body)?;
    let max = state.config.max_pixels;
    if w.saturating_mul(h) > max {
        return Err(ApiError::TooLarge(format!("{w}×{h} exceeds {max} pixels")));
    }
    let n_regions = state.config.segmentation.n_regions;
    let session = blocking(move || {
        let image = load_image(&body)?;
        let regions = slico(&image, n_regions.min(image.len()))?;
        let outlines = region_outlines(&regions);
        let view = View {
            superpixels: Some(Arc::new(json!({
                "width": image.width(),
                "height": image.height(),
                "regions": outlines,
            }))),
            ..View::default()
        };
        Ok(Session {
            image,
            regions,
            work: Mutex::new(None),
            view: RwLock::new(view),
            last_used: Mutex::new(Instant::now()),
        })
    })
    .await?;
    let id = uuid::Uuid::new_v4().to_string();
    let created = Created {
        id: id.clone(),
        width: session.image.width(),
        height: session.image.height(),
        n_regions: session.regions.n_regions(),
    };
    state.sessions.lock().insert(id, Arc::new(session));
    Ok(Json(created))
}

async fn delete_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    state
        .sessions
        .lock()
        .remove(&id)
        .map(|_| StatusCode::NO_CONTENT)
        .ok_or_else(|| ApiError::NotFound(format!("no session {id}")))
}

async fn superpixels(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let s = lookup(&state, &id)?;
    let v = s.view.read().superpixels.clone().expect("set at creation");
    Ok(Json((*v).clone()))
}

#[derive(Deserialize)]
struct SegmentRequest {
    polygon: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
struct EditRequest {
    strokes: Vec<Stroke>,
}

/// Mask payload returned by segment and edit.
#[derive(Serialize)]
pub struct MaskPayload {
    pub width: usize,
    pub height: usize,
    /// Base64 PNG, byte-identical to the CLI's mask file.
    pub mask: String,
    pub iterations: usize,
    pub gamma: Vec<f64>,
    pub trace: Vec<nccut_core::pipeline::IterationSummary>,
}

/// Runs `f` under the session's exclusive guard and publishes the new view.
async fn mutate(
    session: Arc<Session>,
    f: impl FnOnce(&Session, &mut Option<SegSession>) -> ApiResult<SegmentOutcome> + Send + 'static,
) -> ApiResult<Json<MaskPayload>> {
    blocking(move || {
        let mut work = session
            .work
            .try_lock()
            .ok_or_else(|| ApiError::Conflict("session is busy with another request".into()))?;
        let out = f(&session, &mut work)?;
        let seg = work.as_ref().expect("mutation leaves a segmentation");
        let mask_png = out.mask.to_png()?;
        let ncmap = seg.nc.as_ref().map(|nc| nc.truth_map_png(&seg.regions)).transpose()?;
        let cands = seg.candidates.as_ref().map(|c| {
            json!({
                "iteration": seg.iteration,
                "p_obj": c.p_obj,
                "p_bkg": c.p_bkg,
                "b_set": c.b_set,
                "u_b": c.u_b,
            })
        });
        {
            let mut view = session.view.write();
            view.mask_raw = Some(Arc::new(out.mask.to_labels()));
            view.mask_png = Some(Arc::new(mask_png.clone()));
            view.ncmap_png = ncmap.map(Arc::new);
            view.candidates = cands.map(Arc::new);
        }
        session.touch();
        Ok(Json(MaskPayload {
            width: out.mask.width(),
            height: out.mask.height(),
            mask: base64::engine::general_purpose::STANDARD.encode(&mask_png),
            iterations: out.iterations(),
            gamma: out.trace.iter().map(|t| t.gamma).collect(),
            trace: out.trace,
        }))
    })
    .await
}

async fn segment(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<SegmentRequest>, JsonRejection>,
) -> ApiResult<Json<MaskPayload>> {
    let s = lookup(&state, &id)?;
    let Json(req) = body?;
    let config = state.config.segmentation.clone();
    mutate(s, move |s, work| {
        let roi = Polygon::new(req.polygon);
        let mut seg = init_session_with_regions(&s.image, &roi, &config, s.regions.clone())?;
        let out = seg.segment()?;
        *work = Some(seg);
        Ok(out)
    })
    .await
}

async fn edit(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<EditRequest>, JsonRejection>,
) -> ApiResult<Json<MaskPayload>> {
    let s = lookup(&state, &id)?;
    let Json(req) = body?;
    mutate(s, move |_, work| {
        let seg = work
            .as_mut()
            .ok_or_else(|| ApiError::BadRequest("segment the session before editing".into()))?;
        Ok(seg.apply_edit(&req.strokes)?)
    })
    .await
}

#[derive(Deserialize)]
struct MaskQuery {
    format: Option<String>,
}

/// PNG by default; `?format=raw` gives one byte per pixel (1 = object), row-major.
async fn mask(State(state): State<Arc<AppState>>, Path(id): Path<String>, Query(q): Query<MaskQuery>) -> ApiResult<Response> {
    let s = lookup(&state, &id)?;
    let view = s.view.read();
    let none = || ApiError::NotFound("no mask yet; segment first".into());
    match q.format.as_deref() {
        None | Some("png") => Ok(png(&view.mask_png.clone().ok_or_else(none)?)),
        Some("raw") => {
            let raw = view.mask_raw.clone().ok_or_else(none)?;
            Ok((
                [
                    (header::CONTENT_TYPE, "application/octet-stream".to_string()),
                    (header::HeaderName::from_static("x-width"), s.image.width().to_string()),
                    (header::HeaderName::from_static("x-height"), s.image.height().to_string()),
                ],
                raw.to_vec(),
            )
                .into_response())
        }
        Some(f) => Err(ApiError::BadRequest(format!("unknown mask format {f:?}"))),
    }
}

async fn ncmap(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = lookup(&state, &id)?;
    let bytes = s.view.read().ncmap_png.clone();
    bytes
        .map(|b| png(&b))
        .ok_or_else(|| ApiError::NotFound("no connectedness map yet; segment first".into()))
}

async fn candidates(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let s = lookup(&state, &id)?;
    let v = s.view.read().candidates.clone();
    v.map(|v| Json((*v).clone()))
        .ok_or_else(|| ApiError::NotFound("no candidates yet; segment first".into()))
}
