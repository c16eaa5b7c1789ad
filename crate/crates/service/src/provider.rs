use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use canvastune::provider::{Catalog, SearchResponse, WireTrack, DEFAULT_LIMIT};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
struct SearchParams {
    q: Option<String>,
    limit: Option<String>,
}

fn json_error(status: StatusCode, msg: &str) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], serde_json::json!({ "error": msg }).to_string())
        .into_response()
}

async fn search(State(catalog): State<Arc<Catalog>>, Query(params): Query<SearchParams>) -> Response {
    let Some(q) = params.q.filter(|q| !q.trim().is_empty()) else {
        return json_error(StatusCode::BAD_REQUEST, "missing query parameter q");
    };
    let limit = match params.limit.as_deref().map(str::parse::<usize>) {
        None => DEFAULT_LIMIT,
        Some(Ok(n)) if n >= 1 => n,
        Some(_) => return json_error(StatusCode::BAD_REQUEST, "limit must be a positive integer"),
    };
    match catalog.search_keywords(&q, limit) {
        Ok(tracks) => {
            let body = SearchResponse {
                tracks: tracks.iter().map(WireTrack::from).collect(),
            };
            let text = serde_json::to_string(&body).expect("response serialises");
            ([(header::CONTENT_TYPE, "application/json")], text).into_response()
        }
        Err(e) => json_error(StatusCode::BAD_REQUEST, &e.to_string()),
    }
}

pub fn provider_router(catalog: Arc<Catalog>) -> Router {
    Router::new().route("/v1/search", get(search)).with_state(catalog)
}
