use std::collections::HashMap;
use std::net::IpAddr;
use std::sync::{Arc, Mutex};

use chrono::Duration;

use super::{GeoError, GeoProvider};
use crate::clock::Clock;
use crate::model::{GeoLocation, Timestamp};

/// Memoizes answers (hits and misses) for `ttl`. Provider errors are not cached.
pub struct GeoCache<P> {
    inner: P,
    ttl: Duration,
    clock: Arc<dyn Clock>,
    entries: Mutex<HashMap<IpAddr, (Option<GeoLocation>, Timestamp)>>,
}

impl<P: GeoProvider> GeoCache<P> {
    pub const DEFAULT_TTL_HOURS: i64 = 24;

    pub fn new(inner: P, clock: Arc<dyn Clock>) -> Self {
        Self::with_ttl(inner, clock, Duration::hours(Self::DEFAULT_TTL_HOURS))
    }

    pub fn with_ttl(inner: P, clock: Arc<dyn Clock>, ttl: Duration) -> Self {
        Self { inner, ttl, clock, entries: Mutex::new(HashMap::new()) }
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("geo cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<P: GeoProvider> GeoProvider for GeoCache<P> {
    fn lookup(&self, ip: IpAddr) -> Result<Option<GeoLocation>, GeoError> {
        let now = self.clock.now();
        if let Some((loc, inserted)) = self.entries.lock().expect("geo cache poisoned").get(&ip) {
            if now - *inserted < self.ttl {
                return Ok(loc.clone());
            }
        }
        let fresh = self.inner.lookup(ip)?;
        self.entries
            .lock()
            .expect("geo cache poisoned")
            .insert(ip, (fresh.clone(), now));
        Ok(fresh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::SimClock;
    use chrono::{TimeZone, Utc};
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Answers with a latitude equal to the number of calls so far.
    struct Drifting(AtomicUsize);

    impl GeoProvider for Drifting {
        fn lookup(&self, _: IpAddr) -> Result<Option<GeoLocation>, GeoError> {
            let n = self.0.fetch_add(1, Ordering::SeqCst);
            Ok(Some(GeoLocation::new(n as f64, 0.0, None).unwrap()))
        }
    }

    #[test]
    fn serves_until_expiry() {
        let clock = Arc::new(SimClock::new(Utc.with_ymd_and_hms(2024, 4, 14, 0, 0, 0).unwrap()));
        let cache = GeoCache::new(Drifting(AtomicUsize::new(0)), clock.clone());
        let ip: IpAddr = "203.0.113.9".parse().unwrap();
        let cold = cache.lookup(ip).unwrap();
        clock.advance(Duration::hours(23));
        assert_eq!(cache.lookup(ip).unwrap(), cold);
        clock.advance(Duration::hours(1));
        let refreshed = cache.lookup(ip).unwrap().unwrap();
        assert_eq!(refreshed.latitude(), 1.0);
        assert_eq!(cache.len(), 1);
    }

    struct Failing;

    impl GeoProvider for Failing {
        fn lookup(&self, _: IpAddr) -> Result<Option<GeoLocation>, GeoError> {
            Err(GeoError::Provider("down".into()))
        }
    }

    #[test]
    fn errors_are_not_cached() {
        let clock = Arc::new(SimClock::new(Utc.with_ymd_and_hms(2024, 4, 14, 0, 0, 0).unwrap()));
        let cache = GeoCache::new(Failing, clock);
        assert!(cache.lookup("203.0.113.9".parse().unwrap()).is_err());
        assert!(cache.is_empty());
    }
}
