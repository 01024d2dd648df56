//! (zone, time) to grid carbon intensity in gCO2eq/kWh.

mod cache;
mod live;
mod synth;
mod trace;
mod zone;

pub use cache::CarbonCache;
pub use live::ElectricityMapsProvider;
pub use synth::{synth_series, SynthParams};
pub use trace::TraceStore;
pub use zone::{haversine_km, zone_for_location, ZoneMap};

use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::http::FetchError;
use crate::model::{ModelError, Timestamp, ZoneId};

#[derive(Debug, thiserror::Error)]
pub enum CarbonError {
    #[error("carbon provider failed: {0}")]
    Provider(String),
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid generator parameters: {0}")]
    InvalidSynth(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryTime {
    At(Timestamp),
    Now,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarbonQuery {
    pub zone: ZoneId,
    pub at: QueryTime,
}

pub trait CarbonProvider: Send + Sync {
    /// Intensity in `zone` at `at`. `live` marks queries that asked for the
    /// current value; `at` is then the injected clock's now. `Ok(None)` means
    /// the provider has no value for that zone and time.
    fn intensity(&self, zone: &ZoneId, at: Timestamp, live: bool) -> Result<Option<f64>, CarbonError>;
}

impl<P: CarbonProvider + ?Sized> CarbonProvider for &P {
    fn intensity(&self, zone: &ZoneId, at: Timestamp, live: bool) -> Result<Option<f64>, CarbonError> {
        (**self).intensity(zone, at, live)
    }
}

impl<P: CarbonProvider + ?Sized> CarbonProvider for Box<P> {
    fn intensity(&self, zone: &ZoneId, at: Timestamp, live: bool) -> Result<Option<f64>, CarbonError> {
        (**self).intensity(zone, at, live)
    }
}

/// Resolves `Now` against `clock` and asks `provider`.
pub fn intensity_at(
    query: &CarbonQuery,
    provider: &dyn CarbonProvider,
    clock: &dyn Clock,
) -> Result<Option<f64>, CarbonError> {
    match query.at {
        QueryTime::At(t) => provider.intensity(&query.zone, t, false),
        QueryTime::Now => provider.intensity(&query.zone, clock.now(), true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::SimClock;
    use crate::model::CarbonSeries;
    use chrono::{Duration, TimeZone, Utc};
    use proptest::prelude::*;

    fn t0() -> Timestamp {
        Utc.with_ymd_and_hms(2024, 4, 14, 0, 0, 0).unwrap()
    }

    fn texas() -> TraceStore {
        let zone = ZoneId::new("US-TEX").unwrap();
        let s = CarbonSeries::from_points(zone, [(t0(), 400.0), (t0() + Duration::hours(1), 300.0)], None)
            .unwrap();
        let mut store = TraceStore::new();
        store.insert(s);
        store
    }

    #[test]
    fn step_semantics() {
        let store = texas();
        let clock = SimClock::new(t0());
        let q = |at| CarbonQuery { zone: ZoneId::new("US-TEX").unwrap(), at };
        assert_eq!(intensity_at(&q(QueryTime::At(t0() + Duration::minutes(30))), &store, &clock).unwrap(), Some(400.0));
        assert_eq!(intensity_at(&q(QueryTime::At(t0() - Duration::seconds(1))), &store, &clock).unwrap(), None);
        let unknown = CarbonQuery { zone: ZoneId::new("XX").unwrap(), at: QueryTime::At(t0()) };
        assert_eq!(intensity_at(&unknown, &store, &clock).unwrap(), None);
    }

    #[test]
    fn now_uses_injected_clock() {
        let store = texas();
        let clock = SimClock::new(t0() + Duration::minutes(90));
        let q = CarbonQuery { zone: ZoneId::new("US-TEX").unwrap(), at: QueryTime::Now };
        assert_eq!(intensity_at(&q, &store, &clock).unwrap(), Some(300.0));
    }

    proptest! {
        #[test]
        fn trace_lookup_matches_linear_scan(
            gaps in prop::collection::vec(1i64..7200, 1..20),
            values in prop::collection::vec(0.0f64..900.0, 20),
            probe in -100i64..150_000,
        ) {
            let zone = ZoneId::new("Z").unwrap();
            let mut t = t0();
            let mut points = Vec::new();
            for (gap, v) in gaps.iter().zip(&values) {
                points.push((t, *v));
                t += Duration::seconds(*gap);
            }
            let end = t;
            let series = CarbonSeries::from_points(zone.clone(), points.clone(), Some(end)).unwrap();
            let mut store = TraceStore::new();
            store.insert(series);
            let at = t0() + Duration::seconds(probe);
            // the unique interval [t_i, t_{i+1}) containing `at`
            let mut expected = None;
            for (i, (ts, v)) in points.iter().enumerate() {
                let next = points.get(i + 1).map(|p| p.0).unwrap_or(end);
                if *ts <= at && at < next {
                    expected = Some(*v);
                }
            }
            prop_assert_eq!(store.intensity(&zone, at, false).unwrap(), expected);
        }
    }
}
