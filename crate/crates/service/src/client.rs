use std::time::Duration;

use canvastune::metadata::MusicQuery;
use canvastune::provider::{MusicProvider, Playlist, ProviderError, SearchResponse, Track};

/// `MusicProvider` backed by a remote `/v1/search` endpoint.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    base_url: String,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(base_url: &str) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(10))
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            client,
        })
    }

    pub fn search_keywords(&self, keywords: &str, limit: usize) -> Result<Vec<Track>, ProviderError> {
        if limit == 0 {
            return Err(ProviderError::InvalidLimit);
        }
        let url = format!("{}/v1/search", self.base_url);
        let resp = self
            .client
            .get(url)
            .query(&[("q", keywords), ("limit", &limit.to_string())])
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status();
        let body = resp.text().map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ProviderError::Protocol(format!("status {status}: {body}")));
        }
        let parsed: SearchResponse = serde_json::from_str(&body).map_err(|e| ProviderError::Protocol(e.to_string()))?;
        Ok(parsed.tracks.into_iter().map(Track::from).collect())
    }
}

impl MusicProvider for HttpProvider {
    fn search(&self, query: &MusicQuery, limit: usize) -> Result<Playlist, ProviderError> {
        Ok(Playlist {
            query: query.clone(),
            tracks: self.search_keywords(&query.keywords, limit)?,
        })
    }
}
