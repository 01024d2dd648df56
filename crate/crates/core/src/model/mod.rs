//! Domain types shared by every stage of the pipeline, plus the pure
//! aggregation math (path means, step-series integration).

mod net;
mod report;
mod series;
mod transfer;

pub use net::{classify, GeoLocation, Hop, IpClass, NetworkPath};
pub use report::{path_average_intensity, HopCarbon, HopPosition, PathAverage, PathCarbonReport};
pub use series::{time_weighted_average, CarbonSample, CarbonSeries};
pub use transfer::{CarbonScore, TransferJob, TransferRecord};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use std::fmt;

/// All instants are UTC.
pub type Timestamp = DateTime<Utc>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("empty path: no hop intensities to aggregate")]
    EmptyPath,
    #[error("zone identifier must be nonempty")]
    EmptyZone,
    #[error("invalid hop: {0}")]
    InvalidHop(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid location: {0}")]
    InvalidLocation(String),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("invalid window: start must precede end")]
    InvalidWindow,
    #[error("series for zone {zone} does not cover {at}")]
    NoCoverage { zone: ZoneId, at: Timestamp },
    #[error("invalid transfer: {0}")]
    InvalidTransfer(String),
}

/// Opaque, provider-defined grid region identifier (e.g. `US-TEX`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ZoneId(String);

impl ZoneId {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(ModelError::EmptyZone);
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ZoneId {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ZoneId> for String {
    fn from(z: ZoneId) -> Self {
        z.0
    }
}

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Real-valued seconds from `from` to `to` (negative when `to` precedes `from`).
pub fn seconds_between(from: Timestamp, to: Timestamp) -> f64 {
    let d = to - from;
    match d.num_nanoseconds() {
        Some(ns) => ns as f64 / 1e9,
        None => d.num_milliseconds() as f64 / 1e3,
    }
}

/// Shifts `t` by a real number of seconds, rounded to the nearest nanosecond.
pub fn add_seconds(t: Timestamp, secs: f64) -> Timestamp {
    t + Duration::nanoseconds((secs * 1e9).round() as i64)
}
