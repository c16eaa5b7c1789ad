use std::collections::BTreeMap;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use canvastune::data::{make_synthetic_set, MediaType, StyleSet, SynthKind};
use canvastune::eval::{
    build_session, study_report, Condition, EvalError, PoolImage, RatingRecord, RatingStore, SessionPlan,
    SessionView, DEFAULT_ALPHA,
};
use canvastune::metadata::{build_query, KeywordPick, KeywordTable, QueryStrategy, StyleKeywordMap};
use canvastune::pipeline::ImageAnalysis;
use canvastune::provider::{pick_clip, MusicProvider};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

pub const POOL_FILE: &str = "pool.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PoolEntry {
    #[serde(flatten)]
    image: PoolImage,
    file: String,
}

/// Reads `pool.json` from `dir`: annotated images with a `file` name
/// relative to `dir`. Artworks must name a style.
pub fn load_pool(dir: impl AsRef<Path>) -> Result<(Vec<PoolImage>, BTreeMap<String, PathBuf>), ServiceError> {
    let dir = dir.as_ref();
    let path = dir.join(POOL_FILE);
    let text = std::fs::read_to_string(&path)?;
    let entries: Vec<PoolEntry> = serde_json::from_str(&text)
        .map_err(|e| ServiceError::Pool(format!("{}: {e}", path.display())))?;
    let styles = StyleSet::default();
    let mut files = BTreeMap::new();
    let mut pool = Vec::new();
    for e in entries {
        let file = dir.join(&e.file);
        if !file.is_file() {
            return Err(ServiceError::Pool(format!("image '{}': missing file {}", e.image.id, file.display())));
        }
        match (&e.image.media_type, &e.image.style) {
            (MediaType::Artwork, Some(s)) => {
                styles.parse(s)?;
            }
            (MediaType::Artwork, None) => {
                return Err(ServiceError::Pool(format!("artwork '{}' has no style", e.image.id)));
            }
            _ => {}
        }
        if files.insert(e.image.id.clone(), file).is_some() {
            return Err(ServiceError::Pool(format!("duplicate image id '{}'", e.image.id)));
        }
        pool.push(e.image);
    }
    Ok((pool, files))
}

/// Writes `per_cell` synthetic images for every (quadrant, media type) cell
/// plus `pool.json`.
pub fn write_demo_pool(dir: impl AsRef<Path>, per_cell: usize, seed: u64) -> Result<usize, ServiceError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let set = make_synthetic_set(SynthKind::Media, (16 * per_cell).max(20), 48, seed)?;
    let by_media = |m: MediaType| {
        let class = set.classes.iter().position(|c| c == m.as_str()).expect("media class");
        set.iter().filter(move |(_, l)| *l == class).map(|(img, _)| img)
    };
    let demo_styles = ["Rococo", "Impressionism", "Baroque", "Cubism"];
    let mut entries = Vec::new();
    for media in [MediaType::Artwork, MediaType::Photograph] {
        let mut images = by_media(media);
        for (qi, q) in canvastune::metadata::EmotionQuadrant::ALL.into_iter().enumerate() {
            let tag = q.symbol().replace('+', "p").replace('-', "n").to_lowercase();
            for k in 0..per_cell {
                let id = format!("{}-{tag}-{k}", &media.as_str()[..3]);
                let file = format!("{id}.png");
                let img = images.next().ok_or_else(|| ServiceError::Pool("synthetic set too small".into()))?;
                img.save_png(dir.join(&file))?;
                entries.push(PoolEntry {
                    image: PoolImage {
                        id,
                        media_type: media,
                        quadrant: q,
                        style: (media == MediaType::Artwork).then(|| demo_styles[(qi + k) % demo_styles.len()].to_string()),
                    },
                    file,
                });
            }
        }
    }
    let json = serde_json::to_string_pretty(&entries).expect("pool serialises");
    std::fs::write(dir.join(POOL_FILE), json + "\n")?;
    Ok(entries.len())
}

/// What plays for one clip id. Never shown to subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipAsset {
    pub clip_id: String,
    pub track_id: String,
    pub keywords: String,
    pub offset_s: u32,
    pub length_s: u32,
}

fn analysis_of(image: &PoolImage, styles: &StyleSet) -> Result<ImageAnalysis, ServiceError> {
    let style = match &image.style {
        Some(s) if image.media_type == MediaType::Artwork => Some(styles.parse(s)?),
        _ => None,
    };
    Ok(ImageAnalysis {
        media_type: image.media_type,
        media_confidence: 1.0,
        valence: image.quadrant.valence(),
        valence_confidence: 1.0,
        arousal: image.quadrant.arousal(),
        arousal_confidence: 1.0,
        style_confidence: style.as_ref().map(|_| 1.0),
        style,
        models: Vec::new(),
    })
}

/// Resolves every clip slot of `plan` to a track and a 15 s window. The
/// extra photograph clip takes the second-ranked matched-emotion track.
pub fn assign_clips(
    plan: &SessionPlan,
    pool: &[PoolImage],
    provider: &dyn MusicProvider,
    table: &KeywordTable,
    style_map: &StyleKeywordMap,
    limit: usize,
) -> Result<Vec<ClipAsset>, ServiceError> {
    let styles = StyleSet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ 0x6d69_736d);
    let mut out = Vec::new();
    for (i, item) in plan.items.iter().enumerate() {
        let image = pool
            .iter()
            .find(|p| p.id == item.image_id)
            .ok_or_else(|| ServiceError::Pool(format!("image '{}' not in pool", item.image_id)))?;
        let analysis = analysis_of(image, &styles)?;
        for (k, clip) in item.clips.iter().enumerate() {
            let (strategy, rank) = match clip.condition {
                Condition::MatchedEmotionStyle => (QueryStrategy::MatchedEmotionStyle, 0),
                Condition::MatchedEmotion => (QueryStrategy::MatchedEmotion, 0),
                Condition::MatchedEmotionExtra => (QueryStrategy::MatchedEmotion, 1),
                Condition::MismatchedEmotion => (QueryStrategy::MismatchedEmotion, 0),
            };
            let query = build_query(&analysis, strategy, table, style_map, KeywordPick::First, &mut rng)?;
            let playlist = provider.search(&query, limit.max(2))?;
            let track = playlist
                .tracks
                .get(rank)
                .or(playlist.tracks.first())
                .ok_or_else(|| ServiceError::NoTrack(query.keywords.clone()))?;
            let window = pick_clip(track, plan.seed.wrapping_mul(97).wrapping_add((i * 3 + k) as u64))?;
            out.push(ClipAsset {
                clip_id: clip.clip_id.clone(),
                track_id: track.id.clone(),
                keywords: query.keywords,
                offset_s: window.offset_s,
                length_s: window.length_s,
            });
        }
    }
    Ok(out)
}

const SAMPLE_RATE: u32 = 8000;

/// A mono 16-bit WAV sine tone standing in for the clip audio. The pitch
/// depends on the track id and offset.
pub fn tone_wav(asset: &ClipAsset) -> Vec<u8> {
    let hash = asset
        .track_id
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    let freq = 220.0 + ((hash.wrapping_add(asset.offset_s as u64)) % 440) as f64;
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut cursor = Cursor::new(Vec::new());
    {
        let mut w = hound::WavWriter::new(&mut cursor, spec).expect("wav header");
        let n = asset.length_s * SAMPLE_RATE;
        for i in 0..n {
            let t = i as f64 / SAMPLE_RATE as f64;
            let s = (2.0 * std::f64::consts::PI * freq * t).sin() * 0.3 * i16::MAX as f64;
            w.write_sample(s as i16).expect("in-memory write");
        }
        w.finalize().expect("in-memory write");
    }
    cursor.into_inner()
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub subjects: Vec<String>,
    pub seed: u64,
    pub limit: usize,
}

impl StudyConfig {
    /// Subjects `s001`, `s002`, ...
    pub fn numbered(n: usize, seed: u64) -> Self {
        Self {
            subjects: (1..=n).map(|i| format!("s{i:03}")).collect(),
            seed,
            limit: 10,
        }
    }
}

pub struct StudyState {
    pub sessions: BTreeMap<String, SessionPlan>,
    pub clips: BTreeMap<String, ClipAsset>,
    pub images: BTreeMap<String, PathBuf>,
    pub store: RatingStore,
}

impl StudyState {
    pub fn new(
        pool_dir: impl AsRef<Path>,
        provider: &dyn MusicProvider,
        table: &KeywordTable,
        style_map: &StyleKeywordMap,
        store: RatingStore,
        config: &StudyConfig,
    ) -> Result<Self, ServiceError> {
        let (pool, images) = load_pool(pool_dir)?;
        let mut sessions = BTreeMap::new();
        let mut clips = BTreeMap::new();
        for (i, subject) in config.subjects.iter().enumerate() {
            let plan = build_session(&pool, subject, config.seed.wrapping_add(i as u64))?;
            for asset in assign_clips(&plan, &pool, provider, table, style_map, config.limit)? {
                if clips.insert(asset.clip_id.clone(), asset).is_some() {
                    return Err(ServiceError::Pool("clip id collision across sessions".into()));
                }
            }
            sessions.insert(subject.clone(), plan);
        }
        Ok(Self {
            sessions,
            clips,
            images,
            store,
        })
    }
}

/// POST `/v1/rating` body. The UI sends `clip_id`; scripts may send
/// `image_id` with `condition` instead.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingSubmission {
    pub subject: String,
    #[serde(default)]
    pub image_id: Option<String>,
    #[serde(default)]
    pub clip_id: Option<String>,
    #[serde(default)]
    pub condition: Option<Condition>,
    pub rating: i64,
    #[serde(default)]
    pub timestamp: Option<u64>,
}

#[derive(Serialize)]
struct SessionResponse {
    #[serde(flatten)]
    view: SessionView,
    /// Submitted ratings by clip id.
    ratings: BTreeMap<String, u8>,
    completed: usize,
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    let body = serde_json::json!({ "error": msg.into() }).to_string();
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn session(State(state): State<Arc<StudyState>>, UrlPath(subject): UrlPath<String>) -> Response {
    let Some(plan) = state.sessions.get(&subject) else {
        return error(StatusCode::NOT_FOUND, format!("unknown subject '{subject}'"));
    };
    let stored = state.store.subject_records(&subject);
    let mut ratings = BTreeMap::new();
    for item in &plan.items {
        for clip in &item.clips {
            if let Some(r) = stored.iter().find(|r| r.image_id == item.image_id && r.condition == clip.condition) {
                ratings.insert(clip.clip_id.clone(), r.rating);
            }
        }
    }
    let body = SessionResponse {
        view: plan.view(),
        completed: ratings.len(),
        ratings,
    };
    json(StatusCode::OK, serde_json::to_string(&body).expect("view serialises"))
}

async fn image(State(state): State<Arc<StudyState>>, UrlPath(id): UrlPath<String>) -> Response {
    let Some(path) = state.images.get(&id) else {
        return error(StatusCode::NOT_FOUND, format!("unknown image '{id}'"));
    };
    let mime = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("ppm" | "pnm") => "image/x-portable-pixmap",
        _ => "application/octet-stream",
    };
    match tokio::fs::read(path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, mime)], bytes).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn clip(State(state): State<Arc<StudyState>>, UrlPath(id): UrlPath<String>) -> Response {
    match state.clips.get(&id) {
        Some(asset) => ([(header::CONTENT_TYPE, "audio/wav")], tone_wav(asset)).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown clip '{id}'")),
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

#[allow(clippy::result_large_err)]
fn resolve(state: &StudyState, sub: &RatingSubmission) -> Result<RatingRecord, Response> {
    if !(1..=5).contains(&sub.rating) {
        return Err(error(StatusCode::UNPROCESSABLE_ENTITY, EvalError::RatingOutOfRange(sub.rating).to_string()));
    }
    let plan = state
        .sessions
        .get(&sub.subject)
        .ok_or_else(|| error(StatusCode::NOT_FOUND, format!("unknown subject '{}'", sub.subject)))?;
    let (item, condition) = match (&sub.clip_id, &sub.image_id, sub.condition) {
        (Some(clip_id), image_id, _) => {
            let (item, slot) = plan
                .find_clip(clip_id)
                .ok_or_else(|| error(StatusCode::NOT_FOUND, format!("clip '{clip_id}' is not in this session")))?;
            if image_id.as_ref().is_some_and(|id| *id != item.image_id) {
                return Err(error(StatusCode::UNPROCESSABLE_ENTITY, "clip does not belong to image"));
            }
            (item, slot.condition)
        }
        (None, Some(image_id), Some(condition)) => {
            let item = plan
                .item(image_id)
                .ok_or_else(|| error(StatusCode::NOT_FOUND, format!("image '{image_id}' is not in this session")))?;
            if !item.clips.iter().any(|c| c.condition == condition) {
                return Err(error(StatusCode::UNPROCESSABLE_ENTITY, "condition does not apply to this image"));
            }
            (item, condition)
        }
        _ => return Err(error(StatusCode::UNPROCESSABLE_ENTITY, "need clip_id, or image_id with condition")),
    };
    Ok(RatingRecord {
        subject: sub.subject.clone(),
        image_id: item.image_id.clone(),
        media_type: item.media_type,
        condition,
        rating: sub.rating as u8,
        timestamp: sub.timestamp.unwrap_or_else(now_ms),
    })
}

async fn rating(State(state): State<Arc<StudyState>>, body: Bytes) -> Response {
    let sub: RatingSubmission = match serde_json::from_slice(&body) {
        Ok(s) => s,
        Err(e) if e.is_data() => return error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let record = match resolve(&state, &sub) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let subject = record.subject.clone();
    let state2 = Arc::clone(&state);
    let outcome = tokio::task::spawn_blocking(move || state2.store.put(record)).await;
    match outcome {
        Ok(Ok(outcome)) => {
            let stored = state.store.subject_records(&subject).len();
            let status = format!("{outcome:?}").to_lowercase();
            json(
                StatusCode::CREATED,
                serde_json::json!({ "status": status, "stored": stored }).to_string(),
            )
        }
        Ok(Err(EvalError::RatingOutOfRange(r))) => {
            error(StatusCode::UNPROCESSABLE_ENTITY, EvalError::RatingOutOfRange(r).to_string())
        }
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn report(State(state): State<Arc<StudyState>>) -> Response {
    match study_report(&state.store.snapshot(), DEFAULT_ALPHA) {
        Ok(r) => json(StatusCode::OK, serde_json::to_string(&r).expect("report serialises")),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

pub fn study_router(state: Arc<StudyState>) -> Router {
    Router::new()
        .route("/v1/session/{subject}", get(session))
        .route("/v1/image/{id}", get(image))
        .route("/v1/clip/{id}", get(clip))
        .route("/v1/rating", post(rating))
        .route("/v1/report", get(report))
        .with_state(state)
}
