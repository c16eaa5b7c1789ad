//! HTTP services: the mock music provider (`/v1/search`) and the listening
//! study endpoints consumed by the rating UI.

mod client;
mod provider;
mod study;

use std::net::SocketAddr;

pub use client::HttpProvider;
pub use provider::provider_router;
pub use study::{
    assign_clips, load_pool, study_router, tone_wav, write_demo_pool, ClipAsset, RatingSubmission, StudyConfig,
    StudyState, POOL_FILE,
};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("pool: {0}")]
    Pool(String),
    #[error("no track found for query '{0}'")]
    NoTrack(String),
    #[error(transparent)]
    Provider(#[from] canvastune::provider::ProviderError),
    #[error(transparent)]
    Eval(#[from] canvastune::eval::EvalError),
    #[error(transparent)]
    Metadata(#[from] canvastune::metadata::MetadataError),
    #[error(transparent)]
    Data(#[from] canvastune::data::DataError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Serves `router` on `addr` until the process exits.
pub fn serve_blocking(router: axum::Router, addr: SocketAddr) -> std::io::Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        axum::serve(listener, router).await
    })
}

/// Serves `router` on an ephemeral localhost port from a background thread.
pub fn spawn_background(router: axum::Router) -> std::io::Result<SocketAddr> {
    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let addr = listener.local_addr()?;
    std::thread::spawn(move || {
        let _ = rt.block_on(async move { axum::serve(listener, router).await });
    });
    Ok(addr)
}
