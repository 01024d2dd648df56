//! Minimal blocking HTTP GET seam used by the online provider adapters.

#[derive(Debug, thiserror::Error)]
pub enum FetchError {
    #[error("GET {url}: {message}")]
    Transport { url: String, message: String },
    #[error("GET {url}: HTTP {status}")]
    Status { url: String, status: u16 },
    #[error("this build has no HTTP support (enable the `online` feature)")]
    Disabled,
}

pub trait Fetch: Send + Sync {
    fn get(&self, url: &str, headers: &[(&str, &str)]) -> Result<String, FetchError>;
}

/// `ureq`-backed client.
#[derive(Debug, Clone, Default)]
pub struct HttpFetch {
    #[cfg(feature = "online")]
    agent: Option<ureq::Agent>,
}

impl HttpFetch {
    pub fn new() -> Self {
        Self {
            #[cfg(feature = "online")]
            agent: Some(
                ureq::AgentBuilder::new()
                    .timeout(std::time::Duration::from_secs(10))
                    .build(),
            ),
        }
    }
}

impl Fetch for HttpFetch {
    #[cfg(feature = "online")]
    fn get(&self, url: &str, headers: &[(&str, &str)]) -> Result<String, FetchError> {
        let agent = self.agent.clone().unwrap_or_else(ureq::agent);
        let mut req = agent.get(url);
        for (k, v) in headers {
            req = req.set(k, v);
        }
        match req.call() {
            Ok(resp) => resp.into_string().map_err(|e| FetchError::Transport {
                url: url.to_string(),
                message: e.to_string(),
            }),
            Err(ureq::Error::Status(status, _)) => Err(FetchError::Status { url: url.to_string(), status }),
            Err(e) => Err(FetchError::Transport { url: url.to_string(), message: e.to_string() }),
        }
    }

    #[cfg(not(feature = "online"))]
    fn get(&self, _url: &str, _headers: &[(&str, &str)]) -> Result<String, FetchError> {
        Err(FetchError::Disabled)
    }
}
