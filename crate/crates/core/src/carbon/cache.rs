use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use chrono::Duration;

use super::{CarbonError, CarbonProvider};
use crate::clock::Clock;
use crate::model::{Timestamp, ZoneId};

/// Live answers are reused for `live_ttl`; historical answers never change
/// and are kept forever.
pub struct CarbonCache<P> {
    inner: P,
    clock: Arc<dyn Clock>,
    live_ttl: Duration,
    live: Mutex<HashMap<ZoneId, (Option<f64>, Timestamp)>>,
    historical: Mutex<HashMap<(ZoneId, Timestamp), Option<f64>>>,
}

impl<P: CarbonProvider> CarbonCache<P> {
    pub fn new(inner: P, clock: Arc<dyn Clock>) -> Self {
        Self::with_live_ttl(inner, clock, Duration::minutes(10))
    }

    pub fn with_live_ttl(inner: P, clock: Arc<dyn Clock>, live_ttl: Duration) -> Self {
        Self {
            inner,
            clock,
            live_ttl,
            live: Mutex::new(HashMap::new()),
            historical: Mutex::new(HashMap::new()),
        }
    }
}

impl<P: CarbonProvider> CarbonProvider for CarbonCache<P> {
    fn intensity(&self, zone: &ZoneId, at: Timestamp, live: bool) -> Result<Option<f64>, CarbonError> {
        if live {
            let now = self.clock.now();
            if let Some((v, fetched)) = self.live.lock().expect("carbon cache poisoned").get(zone) {
                if now - *fetched < self.live_ttl {
                    return Ok(*v);
                }
            }
            let v = self.inner.intensity(zone, at, true)?;
            self.live.lock().expect("carbon cache poisoned").insert(zone.clone(), (v, now));
            return Ok(v);
        }
        let key = (zone.clone(), at);
        if let Some(v) = self.historical.lock().expect("carbon cache poisoned").get(&key) {
            return Ok(*v);
        }
        let v = self.inner.intensity(zone, at, false)?;
        self.historical.lock().expect("carbon cache poisoned").insert(key, v);
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carbon::TraceStore;
    use crate::clock::SimClock;
    use crate::model::CarbonSeries;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting<P> {
        inner: P,
        calls: AtomicUsize,
    }

    impl<P: CarbonProvider> CarbonProvider for Counting<P> {
        fn intensity(&self, zone: &ZoneId, at: Timestamp, live: bool) -> Result<Option<f64>, CarbonError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.inner.intensity(zone, at, live)
        }
    }

    fn t0() -> Timestamp {
        Utc.with_ymd_and_hms(2024, 4, 14, 0, 0, 0).unwrap()
    }

    fn store(values: &[f64]) -> TraceStore {
        let zone = ZoneId::new("Z").unwrap();
        let pts = values.iter().enumerate().map(|(i, v)| (t0() + Duration::hours(i as i64), *v));
        let mut s = TraceStore::new();
        s.insert(CarbonSeries::from_points(zone, pts, None).unwrap());
        s
    }

    #[test]
    fn live_values_expire() {
        let clock = Arc::new(SimClock::new(t0()));
        let inner = Counting { inner: store(&[100.0]), calls: AtomicUsize::new(0) };
        let cache = CarbonCache::new(inner, clock.clone());
        let z = ZoneId::new("Z").unwrap();
        cache.intensity(&z, clock.now(), true).unwrap();
        clock.advance(Duration::minutes(9));
        cache.intensity(&z, clock.now(), true).unwrap();
        assert_eq!(cache.inner.calls.load(Ordering::SeqCst), 1);
        clock.advance(Duration::minutes(1));
        cache.intensity(&z, clock.now(), true).unwrap();
        assert_eq!(cache.inner.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn historical_values_are_kept() {
        let clock = Arc::new(SimClock::new(t0()));
        let inner = Counting { inner: store(&[100.0, 200.0]), calls: AtomicUsize::new(0) };
        let cache = CarbonCache::new(inner, clock.clone());
        let z = ZoneId::new("Z").unwrap();
        for _ in 0..3 {
            clock.advance(Duration::days(30));
            assert_eq!(cache.intensity(&z, t0() + Duration::minutes(70), false).unwrap(), Some(200.0));
        }
        assert_eq!(cache.inner.calls.load(Ordering::SeqCst), 1);
    }

    proptest! {
        #[test]
        fn cached_equals_uncached(values in prop::collection::vec(0.0f64..800.0, 1..24), queries in prop::collection::vec(0i64..100_000, 1..40)) {
            let clock = Arc::new(SimClock::new(t0()));
            let plain = store(&values);
            let cache = CarbonCache::new(store(&values), clock);
            let z = ZoneId::new("Z").unwrap();
            for q in queries {
                let at = t0() + Duration::seconds(q);
                prop_assert_eq!(cache.intensity(&z, at, false).unwrap(), plain.intensity(&z, at, false).unwrap());
            }
        }
    }
}
