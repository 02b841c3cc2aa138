//! Local JSON-over-HTTP API for browsing, tagging, searching and converting
//! the JPEGs under one directory.
//!
//! | Method | Path                     | Body / query                         |
//! |--------|--------------------------|--------------------------------------|
//! | GET    | /api/health              |                                      |
//! | GET    | /api/images              | `?dir=<relative dir>`                |
//! | GET    | /api/images/:id/bytes    | `If-None-Match`                      |
//! | GET    | /api/images/:id/tags     |                                      |
//! | PUT    | /api/images/:id/tags     | metadata document, `If-Match`        |
//! | POST   | /api/search              | [`SearchQuery`]                      |
//! | POST   | /api/convert             | [`ConvertRequest`]                   |
//!
//! Image ids are the unpadded base64url encoding of the root-relative path.
//! Every id and directory is resolved and checked against the canonical root,
//! so nothing outside it can be addressed. ETags are the SHA-256 of the file
//! bytes. There is no authentication; bind to loopback.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::{Body, Bytes};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tower_http::services::{ServeDir, ServeFile};

use crate::dicom::{convert_jpeg, DicomError};
use crate::jpeg::{parse_jpeg, JpegError, JpegHeader};
use crate::metadata::{detect, from_document, ClinicalMetadata, MetadataError, ValidationIssue};
use crate::search::{is_jpeg_path, scan, SearchError, SearchQuery};
use crate::tagging::{read_tags, tag_jpeg, tag_state, write_atomic, Error as TagError, TagState};
use crate::uid::{OsEntropy, UidContext, UUID_ROOT};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub root: PathBuf,
    /// Directory with the built UI; a placeholder page is served otherwise.
    pub ui_dir: Option<PathBuf>,
    pub uid_root: String,
}

impl ServiceConfig {
    pub fn new(root: impl Into<PathBuf>) -> ServiceConfig {
        ServiceConfig { root: root.into(), ui_dir: None, uid_root: UUID_ROOT.to_owned() }
    }
}

struct AppState {
    root: PathBuf,
    uid_root: String,
    locks: Mutex<HashMap<PathBuf, Arc<tokio::sync::Mutex<()>>>>,
}

type Shared = Arc<AppState>;

impl AppState {
    fn lock_for(&self, path: &Path) -> Arc<tokio::sync::Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(path.to_owned()).or_default().clone()
    }
}

/// Error body: `{"error": code, "message": text, "issues": [...]}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    issues: Option<Vec<ValidationIssue>>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError { status, code, message: message.into(), issues: None }
    }

    fn not_found() -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such image or directory under the served root")
    }

    fn internal(e: impl std::fmt::Display) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let Some(issues) = self.issues {
            body["issues"] = json!(issues);
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<MetadataError> for ApiError {
    fn from(e: MetadataError) -> ApiError {
        match e {
            MetadataError::InvalidMetadata(issues) => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                code: "invalid_metadata",
                message: MetadataError::InvalidMetadata(issues.clone()).to_string(),
                issues: Some(issues),
            },
            other => ApiError::new(StatusCode::BAD_REQUEST, "bad_request", other.to_string()),
        }
    }
}

impl From<JpegError> for ApiError {
    fn from(e: JpegError) -> ApiError {
        match e {
            JpegError::Io(e) => ApiError::internal(e),
            JpegError::OversizeExif(_) | JpegError::NonAsciiComment => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "payload_too_large", e.to_string())
            }
            other => ApiError::new(StatusCode::UNSUPPORTED_MEDIA_TYPE, "unsupported_image", other.to_string()),
        }
    }
}

impl From<TagError> for ApiError {
    fn from(e: TagError) -> ApiError {
        match e {
            TagError::Jpeg(e) => e.into(),
            TagError::Metadata(e) => e.into(),
            TagError::Dicom(e) => e.into(),
            TagError::Io(e) => io_error(e),
        }
    }
}

impl From<DicomError> for ApiError {
    fn from(e: DicomError) -> ApiError {
        match e {
            DicomError::NotBaselineJpeg => {
                ApiError::new(StatusCode::UNSUPPORTED_MEDIA_TYPE, "not_baseline_jpeg", e.to_string())
            }
            DicomError::InvalidMetadata(issues) => MetadataError::InvalidMetadata(issues).into(),
            DicomError::Jpeg(e) => e.into(),
            other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "conversion_failed", other.to_string()),
        }
    }
}

fn io_error(e: io::Error) -> ApiError {
    match e.kind() {
        io::ErrorKind::NotFound => ApiError::not_found(),
        _ => ApiError::internal(e),
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

pub fn encode_id(relative: &Path) -> String {
    let parts: Vec<_> = relative.components().map(|c| c.as_os_str().to_string_lossy()).collect();
    URL_SAFE_NO_PAD.encode(parts.join("/"))
}

/// Joins a client-supplied relative path onto `root`. Rejects absolute paths
/// and `..`, then canonicalizes so that symlinks cannot escape either.
fn resolve(root: &Path, relative: &str) -> ApiResult<PathBuf> {
    let rel = Path::new(relative);
    if !rel.components().all(|c| matches!(c, Component::Normal(_) | Component::CurDir)) {
        return Err(ApiError::not_found());
    }
    let full = root.join(rel).canonicalize().map_err(|_| ApiError::not_found())?;
    if !full.starts_with(root) {
        return Err(ApiError::not_found());
    }
    Ok(full)
}

fn resolve_id(root: &Path, id: &str) -> ApiResult<PathBuf> {
    let raw = URL_SAFE_NO_PAD.decode(id).map_err(|_| ApiError::not_found())?;
    let rel = String::from_utf8(raw).map_err(|_| ApiError::not_found())?;
    if rel.is_empty() {
        return Err(ApiError::not_found());
    }
    let path = resolve(root, &rel)?;
    if !path.is_file() || !is_jpeg_path(&path) {
        return Err(ApiError::not_found());
    }
    Ok(path)
}

fn relative_to<'a>(root: &Path, path: &'a Path) -> &'a Path {
    path.strip_prefix(root).unwrap_or(path)
}

pub fn content_etag(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let hex: String = digest.iter().map(|b| format!("{:02x}", b)).collect();
    format!("\"{}\"", hex)
}

/// True if any entity tag in an If-Match / If-None-Match header equals `etag`.
fn etag_listed(header: &str, etag: &str) -> bool {
    header.split(',').map(str::trim).any(|t| t == "*" || t.trim_start_matches("W/") == etag)
}

#[derive(Debug, Clone, Serialize)]
pub struct ImageSummary {
    pub id: String,
    pub relative_path: String,
    pub tagged: bool,
    pub metadata: Option<ClinicalMetadata>,
    pub rows: u16,
    pub columns: u16,
    /// Set when the file could not be read as a JPEG or carries an invalid
    /// payload.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn summarize(root: &Path, path: &Path) -> ImageSummary {
    let rel = relative_to(root, path);
    let mut s = ImageSummary {
        id: encode_id(rel),
        relative_path: rel.to_string_lossy().replace('\\', "/"),
        tagged: false,
        metadata: None,
        rows: 0,
        columns: 0,
        error: None,
    };
    let header = fs::File::open(path)
        .map_err(|e| e.to_string())
        .and_then(|f| JpegHeader::read(io::BufReader::new(f)).map_err(|e| e.to_string()));
    match header {
        Ok(h) => {
            s.rows = h.frame.rows;
            s.columns = h.frame.columns;
            match h.user_comment() {
                Ok(comment) => {
                    s.tagged = detect(comment.as_deref());
                    match tag_state(comment) {
                        Ok(TagState::Tagged { metadata, .. }) => s.metadata = Some(metadata),
                        Ok(TagState::Untagged) => {}
                        Err(e) => s.error = Some(e.to_string()),
                    }
                }
                Err(e) => s.error = Some(e.to_string()),
            }
        }
        Err(e) => s.error = Some(e),
    }
    s
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    #[serde(default)]
    dir: String,
}

#[derive(Debug, Serialize)]
struct Listing {
    dir: String,
    directories: Vec<String>,
    images: Vec<ImageSummary>,
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

async fn list_images(State(st): State<Shared>, Query(q): Query<ListQuery>) -> ApiResult<Json<Listing>> {
    blocking(move || {
        let dir = resolve(&st.root, &q.dir)?;
        if !dir.is_dir() {
            return Err(ApiError::not_found());
        }
        let mut directories = Vec::new();
        let mut files = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_error)? {
            let entry = entry.map_err(io_error)?;
            let ft = entry.file_type().map_err(io_error)?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if ft.is_dir() {
                directories.push(name);
            } else if ft.is_file() && is_jpeg_path(&entry.path()) {
                files.push(entry.path());
            }
        }
        directories.sort();
        files.sort();
        let images = files.iter().map(|p| summarize(&st.root, p)).collect();
        let rel = relative_to(&st.root, &dir).to_string_lossy().replace('\\', "/");
        Ok(Json(Listing { dir: rel, directories, images }))
    })
    .await
}

async fn image_bytes(State(st): State<Shared>, UrlPath(id): UrlPath<String>, headers: HeaderMap) -> ApiResult<Response> {
    let path = resolve_id(&st.root, &id)?;
    let bytes = tokio::fs::read(&path).await.map_err(io_error)?;
    let etag = content_etag(&bytes);
    let etag_value = HeaderValue::from_str(&etag).map_err(ApiError::internal)?;
    let hit = headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| etag_listed(v, &etag));
    if hit {
        return Ok((StatusCode::NOT_MODIFIED, [(header::ETAG, etag_value)]).into_response());
    }
    Ok((
        [(header::CONTENT_TYPE, HeaderValue::from_static("image/jpeg")), (header::ETAG, etag_value)],
        Body::from(bytes),
    )
        .into_response())
}

#[derive(Debug, Serialize)]
struct TagsResponse {
    id: String,
    tagged: bool,
    metadata: Option<ClinicalMetadata>,
    etag: String,
}

fn tags_response(id: String, state: &TagState, etag: String) -> Response {
    let header_value = HeaderValue::from_str(&etag).ok();
    let body = TagsResponse { id, tagged: state.is_tagged(), metadata: state.metadata().cloned(), etag };
    let mut resp = Json(body).into_response();
    if let Some(v) = header_value {
        resp.headers_mut().insert(header::ETAG, v);
    }
    resp
}

async fn get_tags(State(st): State<Shared>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let path = resolve_id(&st.root, &id)?;
    blocking(move || {
        let bytes = fs::read(&path).map_err(io_error)?;
        let state = read_tags(&parse_jpeg(&bytes)?)?;
        Ok(tags_response(id, &state, content_etag(&bytes)))
    })
    .await
}

/// Replaces the stored metadata with the request body. With `If-Match`, the
/// write only happens if the file still has that content hash; writes to one
/// file are serialized.
async fn put_tags(
    State(st): State<Shared>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let path = resolve_id(&st.root, &id)?;
    let doc: Value = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_json", e.to_string()))?;
    let metadata = from_document(doc)?;
    let precondition = headers.get(header::IF_MATCH).and_then(|v| v.to_str().ok()).map(str::to_owned);

    let lock = st.lock_for(&path);
    let _guard = lock.lock().await;
    blocking(move || {
        let bytes = fs::read(&path).map_err(io_error)?;
        if let Some(p) = precondition {
            if !etag_listed(&p, &content_etag(&bytes)) {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "precondition_failed",
                    "the image changed since it was read; reload and retry",
                ));
            }
        }
        let tagged = tag_jpeg(&bytes, &metadata)?;
        write_atomic(&path, &tagged).map_err(ApiError::internal)?;
        let state = read_tags(&parse_jpeg(&tagged)?)?;
        Ok(tags_response(id, &state, content_etag(&tagged)))
    })
    .await
}

async fn search(State(st): State<Shared>, body: Bytes) -> ApiResult<Json<Value>> {
    let query: SearchQuery = if body.iter().all(u8::is_ascii_whitespace) {
        SearchQuery::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", e.to_string()))?
    };
    let query = query.validated().map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", e.to_string()))?;
    blocking(move || {
        let outcome = scan(&st.root, &query).map_err(|e| match e {
            SearchError::RootNotFound(_) | SearchError::NotADirectory(_) => ApiError::not_found(),
            other => ApiError::internal(other),
        })?;
        let images: Vec<_> = outcome
            .records
            .into_iter()
            .map(|r| {
                let rel = relative_to(&st.root, &r.path);
                ImageSummary {
                    id: encode_id(rel),
                    relative_path: rel.to_string_lossy().replace('\\', "/"),
                    tagged: true,
                    metadata: Some(r.metadata),
                    rows: r.descriptor.rows,
                    columns: r.descriptor.columns,
                    error: None,
                }
            })
            .collect();
        Ok(Json(json!({ "images": images })))
    })
    .await
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct ConvertRequest {
    pub id: String,
    /// Write the result into the served root as well as returning it.
    #[serde(default)]
    pub save: bool,
    /// Root-relative `.dcm` path; required when `save` is set.
    #[serde(default)]
    pub output: Option<String>,
}

fn save_target(root: &Path, output: Option<&str>) -> ApiResult<PathBuf> {
    let bad = |m: &str| ApiError::new(StatusCode::BAD_REQUEST, "invalid_output", m.to_owned());
    let output = output.ok_or_else(|| bad("save requires an output path"))?;
    let rel = Path::new(output);
    let name = rel.file_name().ok_or_else(|| bad("output must name a file"))?;
    let is_dcm = rel.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("dcm"));
    if !is_dcm {
        return Err(bad("output must end in .dcm"));
    }
    if !rel.components().all(|c| matches!(c, Component::Normal(_) | Component::CurDir)) {
        return Err(bad("output must be a relative path inside the served root"));
    }
    let parent = rel.parent().and_then(Path::to_str).unwrap_or("");
    let dir = resolve(root, parent).map_err(|_| bad("output directory does not exist under the served root"))?;
    let target = dir.join(name);
    if fs::symlink_metadata(&target).is_ok() {
        return Err(ApiError::new(StatusCode::CONFLICT, "exists", "output file already exists"));
    }
    Ok(target)
}

async fn convert(State(st): State<Shared>, body: Bytes) -> ApiResult<Response> {
    let req: ConvertRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()))?;
    let path = resolve_id(&st.root, &req.id)?;
    blocking(move || {
        let target = if req.save { Some(save_target(&st.root, req.output.as_deref())?) } else { None };
        let bytes = fs::read(&path).map_err(io_error)?;
        let metadata = match read_tags(&parse_jpeg(&bytes)?)? {
            TagState::Tagged { metadata, .. } => metadata,
            TagState::Untagged => {
                return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "untagged", "image carries no metadata"))
            }
        };
        let ctx = UidContext::new(&st.uid_root, Box::new(OsEntropy)).map_err(ApiError::internal)?;
        let converted = convert_jpeg(&bytes, &metadata, &ctx)?;
        if let Some(target) = target {
            write_atomic(&target, &converted.bytes).map_err(ApiError::internal)?;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
        let disposition = format!("attachment; filename=\"{}.dcm\"", stem.replace(['"', '\\'], "_"));
        let mut resp = Response::new(Body::from(converted.bytes));
        let h = resp.headers_mut();
        h.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/dicom"));
        if let Ok(v) = HeaderValue::from_str(&disposition) {
            h.insert(header::CONTENT_DISPOSITION, v);
        }
        if let Ok(v) = HeaderValue::from_str(&converted.sop_instance_uid) {
            h.insert("x-sop-instance-uid", v);
        }
        Ok(resp)
    })
    .await
}

async fn api_fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "unknown API route")
}

const PLACEHOLDER_PAGE: &str = r#"<!doctype html>
<html lang="en"><head><meta charset="utf-8"><title>dermtag</title></head>
<body>
<h1>dermtag</h1>
<p>The API is available under <code>/api</code>. Start the server with
<code>--ui-dir</code> pointing at a built UI bundle to use the tagging interface.</p>
</body></html>
"#;

/// Builds the router. Fails if `root` is not an existing directory.
pub fn router(config: &ServiceConfig) -> io::Result<Router> {
    let root = config.root.canonicalize()?;
    if !root.is_dir() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, format!("{} is not a directory", root.display())));
    }
    UidContext::new(&config.uid_root, Box::new(OsEntropy))
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
    let state = Arc::new(AppState { root, uid_root: config.uid_root.clone(), locks: Mutex::default() });

    let api = Router::new()
        .route("/health", get(health))
        .route("/images", get(list_images))
        .route("/images/:id/bytes", get(image_bytes))
        .route("/images/:id/tags", get(get_tags).put(put_tags))
        .route("/search", post(search))
        .route("/convert", post(convert))
        .fallback(api_fallback)
        .with_state(state);

    let app = Router::new().nest("/api", api);
    Ok(match &config.ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(dir.join("index.html")))),
        None => app.route("/", get(|| async { Html(PLACEHOLDER_PAGE) })),
    })
}

/// Errors from [`check_bind`].
#[derive(Debug, thiserror::Error)]
#[error("refusing to bind {0}: not a loopback address (pass --allow-remote to override)")]
pub struct RemoteBindRefused(pub SocketAddr);

pub fn check_bind(addr: SocketAddr, allow_remote: bool) -> Result<(), RemoteBindRefused> {
    if addr.ip().is_loopback() || allow_remote {
        Ok(())
    } else {
        Err(RemoteBindRefused(addr))
    }
}

/// Binds `addr` and serves until the process is stopped. `on_bound` receives
/// the actual address (useful with port 0).
pub async fn serve(config: ServiceConfig, addr: SocketAddr, on_bound: impl FnOnce(SocketAddr)) -> io::Result<()> {
    let app = router(&config)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, app).await
}
