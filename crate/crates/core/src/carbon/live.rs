use serde::Deserialize;

use super::{CarbonError, CarbonProvider};
use crate::http::{Fetch, FetchError};
use crate::model::{Timestamp, ZoneId};

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Reading {
    #[allow(dead_code)]
    zone: Option<String>,
    carbon_intensity: Option<f64>,
    #[allow(dead_code)]
    datetime: Option<String>,
}

/// Client for ElectricityMaps-style APIs.
///
/// Live queries hit `{base}/carbon-intensity/latest?zone=Z`; historical ones
/// hit `{base}/carbon-intensity/past?zone=Z&datetime=T`. The auth token is
/// read from the named environment variable on every request and never stored.
pub struct ElectricityMapsProvider<F> {
    base_url: String,
    token_env: Option<String>,
    fetch: F,
}

impl<F: Fetch> ElectricityMapsProvider<F> {
    pub const DEFAULT_ENDPOINT: &'static str = "https://api.electricitymap.org/v3";

    pub fn new(base_url: impl Into<String>, token_env: Option<String>, fetch: F) -> Self {
        Self { base_url: base_url.into().trim_end_matches('/').to_string(), token_env, fetch }
    }

    fn url(&self, zone: &ZoneId, at: Timestamp, live: bool) -> String {
        if live {
            format!("{}/carbon-intensity/latest?zone={}", self.base_url, zone)
        } else {
            format!(
                "{}/carbon-intensity/past?zone={}&datetime={}",
                self.base_url,
                zone,
                at.format("%Y-%m-%dT%H:%M:%SZ")
            )
        }
    }
}

impl<F: Fetch> CarbonProvider for ElectricityMapsProvider<F> {
    fn intensity(&self, zone: &ZoneId, at: Timestamp, live: bool) -> Result<Option<f64>, CarbonError> {
        let token = match &self.token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                CarbonError::Provider(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let headers: Vec<(&str, &str)> = token.as_deref().map(|t| ("auth-token", t)).into_iter().collect();
        let body = match self.fetch.get(&self.url(zone, at, live), &headers) {
            Ok(body) => body,
            // unknown zone
            Err(FetchError::Status { status: 404, .. }) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let reading: Reading = serde_json::from_str(&body)
            .map_err(|e| CarbonError::Provider(format!("unexpected carbon API response: {e}")))?;
        match reading.carbon_intensity {
            Some(v) if v >= 0.0 && v.is_finite() => Ok(Some(v)),
            Some(v) => Err(CarbonError::Provider(format!("provider returned intensity {v}"))),
            None => Ok(None),
        }
    }
}
