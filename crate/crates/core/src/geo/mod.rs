//! IP address to [`GeoLocation`] resolution.
//!
//! Providers answer raw lookups; [`geolocate`] adds the policy that
//! non-public addresses are never sent to a provider.

mod cache;
mod offline;
mod online;

pub use cache::GeoCache;
pub use offline::{load_geo_database, GeoDatabase, GeoRecord};
pub use online::IpApiProvider;

use std::net::IpAddr;

use crate::http::FetchError;
use crate::model::{classify, GeoLocation, IpClass};

#[derive(Debug, thiserror::Error)]
pub enum GeoError {
    #[error("geolocation provider failed: {0}")]
    Provider(String),
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub trait GeoProvider: Send + Sync {
    /// `Ok(None)` is a miss; `Err` means the provider could not answer.
    fn lookup(&self, ip: IpAddr) -> Result<Option<GeoLocation>, GeoError>;
}

impl<P: GeoProvider + ?Sized> GeoProvider for &P {
    fn lookup(&self, ip: IpAddr) -> Result<Option<GeoLocation>, GeoError> {
        (**self).lookup(ip)
    }
}

impl<P: GeoProvider + ?Sized> GeoProvider for Box<P> {
    fn lookup(&self, ip: IpAddr) -> Result<Option<GeoLocation>, GeoError> {
        (**self).lookup(ip)
    }
}

/// Private, reserved and loopback addresses resolve to `None` without a query.
pub fn geolocate(ip: IpAddr, provider: &dyn GeoProvider) -> Result<Option<GeoLocation>, GeoError> {
    if classify(ip) != IpClass::Public {
        return Ok(None);
    }
    provider.lookup(ip)
}
