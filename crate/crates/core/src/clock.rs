//! Injected time source. Everything that asks "what time is it" goes
//! through a [`Clock`] so monitoring runs and experiments can be replayed.

use std::sync::Mutex;

use chrono::Utc;

use crate::model::Timestamp;

pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;

    /// Blocks until `t`. Returns immediately if `t` is not in the future.
    fn sleep_until(&self, t: Timestamp);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        Utc::now()
    }

    fn sleep_until(&self, t: Timestamp) {
        if let Ok(wait) = (t - Utc::now()).to_std() {
            std::thread::sleep(wait);
        }
    }
}

/// Manually driven clock. Sleeping jumps straight to the target instant.
#[derive(Debug)]
pub struct SimClock {
    now: Mutex<Timestamp>,
}

impl SimClock {
    pub fn new(start: Timestamp) -> Self {
        Self { now: Mutex::new(start) }
    }

    pub fn advance(&self, by: chrono::Duration) {
        let mut now = self.now.lock().expect("clock lock poisoned");
        assert!(by >= chrono::Duration::zero(), "clock cannot run backwards");
        *now += by;
    }

    pub fn set(&self, t: Timestamp) {
        let mut now = self.now.lock().expect("clock lock poisoned");
        assert!(t >= *now, "clock cannot run backwards: {} -> {}", *now, t);
        *now = t;
    }
}

impl Clock for SimClock {
    fn now(&self) -> Timestamp {
        *self.now.lock().expect("clock lock poisoned")
    }

    fn sleep_until(&self, t: Timestamp) {
        let mut now = self.now.lock().expect("clock lock poisoned");
        if t > *now {
            *now = t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};

    #[test]
    fn sim_clock_only_moves_forward() {
        let start = Utc.with_ymd_and_hms(2024, 4, 14, 0, 0, 0).unwrap();
        let c = SimClock::new(start);
        c.advance(Duration::hours(1));
        assert_eq!(c.now(), start + Duration::hours(1));
        c.sleep_until(start);
        assert_eq!(c.now(), start + Duration::hours(1));
        c.sleep_until(start + Duration::hours(3));
        assert_eq!(c.now(), start + Duration::hours(3));
    }
}
