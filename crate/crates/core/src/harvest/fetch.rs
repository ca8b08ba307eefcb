//! HTTP retrieval abstraction: a live fetcher with retries and a fixture
//! fetcher that serves files keyed by the SHA-256 of the URL.

use std::path::PathBuf;
use std::time::Duration;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("{0}")]
pub struct FetchError(pub String);

/// Retrieves bytes for a URL. Implementations must be safe to share across
/// worker threads.
pub trait HttpFetcher: Send + Sync {
    fn fetch(&self, url: &str, timeout: Duration) -> Result<Vec<u8>, FetchError>;
}

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_RETRIES: u32 = 2;

/// Live fetcher. A failed attempt is retried up to `retries` more times.
pub struct UreqFetcher {
    pub retries: u32,
}

impl Default for UreqFetcher {
    fn default() -> Self {
        UreqFetcher {
            retries: DEFAULT_RETRIES,
        }
    }
}

impl HttpFetcher for UreqFetcher {
    fn fetch(&self, url: &str, timeout: Duration) -> Result<Vec<u8>, FetchError> {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build();
        let agent = ureq::Agent::new_with_config(config);
        let mut last_error = String::new();
        for _ in 0..=self.retries {
            match agent.get(url).call() {
                Ok(mut response) => {
                    return response
                        .body_mut()
                        .read_to_vec()
                        .map_err(|e| FetchError(format!("{url}: {e}")));
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(FetchError(format!("{url}: {last_error}")))
    }
}

/// Serves responses from a directory of files named by `sha256(url)` in
/// lowercase hex. Used for tests and desk-scale runs against captured
/// registry payloads.
pub struct FixtureHttpFetcher {
    dir: PathBuf,
}

impl FixtureHttpFetcher {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureHttpFetcher { dir: dir.into() }
    }
}

pub fn url_key(url: &str) -> String {
    hex::encode(Sha256::digest(url.as_bytes()))
}

impl HttpFetcher for FixtureHttpFetcher {
    fn fetch(&self, url: &str, _timeout: Duration) -> Result<Vec<u8>, FetchError> {
        let path = self.dir.join(url_key(url));
        std::fs::read(&path)
            .map_err(|e| FetchError(format!("no fixture for {url} ({}): {e}", path.display())))
    }
}
