use std::net::IpAddr;

use serde::Deserialize;

use super::{GeoError, GeoProvider};
use crate::http::Fetch;
use crate::model::GeoLocation;

#[derive(Deserialize)]
struct IpApiResponse {
    status: String,
    lat: Option<f64>,
    lon: Option<f64>,
    #[allow(dead_code)]
    query: Option<String>,
}

/// Client for IP-API style endpoints: `GET {base}/{ip}` returning
/// `{"status": "success", "lat": .., "lon": .., "query": ..}`.
///
/// Answers carry no zone; it is resolved later from a zone map.
pub struct IpApiProvider<F> {
    base_url: String,
    fetch: F,
}

impl<F: Fetch> IpApiProvider<F> {
    pub const DEFAULT_ENDPOINT: &'static str = "http://ip-api.com/json";

    pub fn new(base_url: impl Into<String>, fetch: F) -> Self {
        Self { base_url: base_url.into().trim_end_matches('/').to_string(), fetch }
    }

    fn parse(body: &str) -> Result<Option<GeoLocation>, GeoError> {
        let resp: IpApiResponse = serde_json::from_str(body)
            .map_err(|e| GeoError::Provider(format!("unexpected IP-API response: {e}")))?;
        if resp.status != "success" {
            return Ok(None);
        }
        match (resp.lat, resp.lon) {
            (Some(lat), Some(lon)) => GeoLocation::new(lat, lon, None)
                .map(Some)
                .map_err(|e| GeoError::Provider(e.to_string())),
            _ => Ok(None),
        }
    }
}

impl<F: Fetch> GeoProvider for IpApiProvider<F> {
    fn lookup(&self, ip: IpAddr) -> Result<Option<GeoLocation>, GeoError> {
        let body = self.fetch.get(&format!("{}/{}", self.base_url, ip), &[])?;
        Self::parse(&body)
    }
}
