use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CarbonError;
use crate::model::{CarbonSeries, Timestamp, ZoneId};

/// Diurnal sine plus uniform noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub base: f64,
    pub amplitude: f64,
    pub period_hours: f64,
    /// Half-width of the uniform noise band.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Hourly samples `base + amplitude * sin(2*pi*i / period) + noise`,
/// clamped at zero. The series ends `hours` after `start`.
pub fn synth_series(zone: ZoneId, start: Timestamp, hours: u32, params: SynthParams) -> Result<CarbonSeries, CarbonError> {
    let SynthParams { base, amplitude, period_hours, noise, seed } = params;
    if hours == 0 {
        return Err(CarbonError::InvalidSynth("need at least one hour".into()));
    }
    if !(base >= 0.0 && amplitude >= 0.0 && amplitude <= base) {
        return Err(CarbonError::InvalidSynth(format!("need 0 <= amplitude ({amplitude}) <= base ({base})")));
    }
    if !(period_hours > 0.0) || !(noise >= 0.0) {
        return Err(CarbonError::InvalidSynth("period must be positive and noise nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..hours).map(|i| {
        let phase = 2.0 * std::f64::consts::PI * i as f64 / period_hours;
        let jitter = if noise > 0.0 { rng.gen_range(-noise..=noise) } else { 0.0 };
        let v = (base + amplitude * phase.sin() + jitter).max(0.0);
        (start + Duration::hours(i as i64), v)
    });
    let points: Vec<_> = points.collect();
    Ok(CarbonSeries::from_points(zone, points, Some(start + Duration::hours(hours as i64)))?)
}
