use chrono::Duration;
use serde::{Deserialize, Serialize};

use super::{savings_ratio, SchedulerError};
use crate::model::{add_seconds, CarbonSeries, ModelError, Timestamp, TransferJob};

pub const DEFAULT_STEP_SECS: u64 = 300;

/// Predicted mean path intensity over a future window.
pub trait Forecast {
    fn window_average(&self, start: Timestamp, end: Timestamp) -> Result<f64, ModelError>;
}

/// A recorded series used as its own prediction.
impl Forecast for CarbonSeries {
    fn window_average(&self, start: Timestamp, end: Timestamp) -> Result<f64, ModelError> {
        self.time_weighted_average(start, end)
    }
}

/// Predicts the window `[s, e)` with the history observed one `lag` earlier
/// (e.g. yesterday's trace for today).
#[derive(Debug, Clone)]
pub struct PersistenceForecast {
    pub history: CarbonSeries,
    pub lag: Duration,
}

impl Forecast for PersistenceForecast {
    fn window_average(&self, start: Timestamp, end: Timestamp) -> Result<f64, ModelError> {
        self.history.time_weighted_average(start - self.lag, end - self.lag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeShiftDecision {
    pub job_uuid: String,
    pub chosen_start: Timestamp,
    pub predicted_avg_ci: f64,
    /// Starting at `earliest_start`.
    pub baseline_avg_ci: f64,
    pub savings_ratio: f64,
    pub duration_secs: f64,
    pub step_secs: u64,
    /// `(start, predicted average)` for every feasible start on the grid.
    pub candidates: Vec<(Timestamp, f64)>,
}

/// Picks the grid start `earliest_start + k * step` whose transfer window has
/// the lowest predicted average intensity. Ties keep the earliest start.
pub fn schedule_time_shift(
    job: &TransferJob,
    forecast: &dyn Forecast,
    step_secs: u64,
) -> Result<TimeShiftDecision, SchedulerError> {
    job.validate().map_err(SchedulerError::InvalidJob)?;
    if step_secs == 0 {
        return Err(SchedulerError::InvalidStep);
    }
    if job.bytes == 0 {
        return Err(SchedulerError::InvalidJob(ModelError::InvalidTransfer(format!(
            "job {}: nothing to transfer",
            job.job_uuid
        ))));
    }
    let duration = job.estimated_duration_secs();
    let mut candidates = Vec::new();
    for k in 0i64.. {
        let start = job.earliest_start + Duration::seconds(k * step_secs as i64);
        let end = add_seconds(start, duration);
        if end > job.deadline {
            break;
        }
        let avg = forecast.window_average(start, end).map_err(SchedulerError::NoCoverage)?;
        candidates.push((start, avg));
    }
    let Some(&(baseline_start, baseline)) = candidates.first() else {
        return Err(SchedulerError::InvalidJob(ModelError::InvalidTransfer(format!(
            "job {}: transfer does not fit before the deadline",
            job.job_uuid
        ))));
    };
    let (chosen_start, chosen) = candidates
        .iter()
        .copied()
        .fold((baseline_start, baseline), |best, c| if c.1 < best.1 { c } else { best });
    Ok(TimeShiftDecision {
        job_uuid: job.job_uuid.clone(),
        chosen_start,
        predicted_avg_ci: chosen,
        baseline_avg_ci: baseline,
        savings_ratio: savings_ratio(baseline, chosen),
        duration_secs: duration,
        step_secs,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ZoneId;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn t0() -> Timestamp {
        Utc.with_ymd_and_hms(2024, 4, 14, 0, 0, 0).unwrap()
    }

    fn job(bytes: u64, window_secs: i64) -> TransferJob {
        TransferJob {
            job_uuid: "job".into(),
            bytes,
            source: "TACC".into(),
            destination: "UC".into(),
            earliest_start: t0(),
            deadline: t0() + Duration::seconds(window_secs),
            estimated_throughput: 1.0,
        }
    }

    fn series(points: &[(i64, f64)]) -> CarbonSeries {
        CarbonSeries::from_points(
            ZoneId::new("PATH").unwrap(),
            points.iter().map(|&(s, v)| (t0() + Duration::seconds(s), v)),
            None,
        )
        .unwrap()
    }

    #[test]
    fn constant_series_keeps_earliest() {
        let d = schedule_time_shift(&job(3600, 86_400), &series(&[(0, 300.0)]), 300).unwrap();
        assert_eq!(d.chosen_start, t0());
        assert_eq!(d.savings_ratio, 1.0);
        assert_eq!(d.candidates.len(), (86_400 - 3600) / 300 + 1);
    }

    #[test]
    fn two_level_series() {
        let s = series(&[(0, 488.6), (6 * 3600, 255.714)]);
        let d = schedule_time_shift(&job(3600, 12 * 3600), &s, 300).unwrap();
        assert_eq!(d.chosen_start, t0() + Duration::hours(6));
        assert_eq!(d.predicted_avg_ci, 255.714);
        assert_eq!(d.baseline_avg_ci, 488.6);
        assert!((d.savings_ratio - 1.9107).abs() < 1e-4);
        assert_eq!(d.savings_ratio, 488.6 / 255.714);
    }

    #[test]
    fn coverage_and_argument_errors() {
        let late = CarbonSeries::from_points(
            ZoneId::new("PATH").unwrap(),
            [(t0() + Duration::hours(1), 10.0)],
            None,
        )
        .unwrap();
        assert!(matches!(schedule_time_shift(&job(60, 7200), &late, 300), Err(SchedulerError::NoCoverage(_))));
        let short = CarbonSeries::from_points(ZoneId::new("PATH").unwrap(), [(t0(), 10.0)], Some(t0() + Duration::minutes(30))).unwrap();
        assert!(matches!(schedule_time_shift(&job(60, 7200), &short, 300), Err(SchedulerError::NoCoverage(_))));
        assert!(matches!(schedule_time_shift(&job(60, 7200), &series(&[(0, 1.0)]), 0), Err(SchedulerError::InvalidStep)));
        assert!(matches!(schedule_time_shift(&job(0, 7200), &series(&[(0, 1.0)]), 60), Err(SchedulerError::InvalidJob(_))));
        assert!(matches!(schedule_time_shift(&job(9000, 7200), &series(&[(0, 1.0)]), 60), Err(SchedulerError::InvalidJob(_))));
    }

    #[test]
    fn persistence_uses_lagged_history() {
        // yesterday was clean in the second half of the day
        let history = CarbonSeries::from_points(
            ZoneId::new("PATH").unwrap(),
            [(t0() - Duration::days(1), 500.0), (t0() - Duration::hours(12), 100.0)],
            Some(t0()),
        )
        .unwrap();
        let f = PersistenceForecast { history, lag: Duration::days(1) };
        let d = schedule_time_shift(&job(3600, 86_400), &f, 3600).unwrap();
        assert_eq!(d.chosen_start, t0() + Duration::hours(12));
    }

    /// Per-second sums; independent of the step integration.
    fn brute_force_best(points: &[(i64, f64)], duration: i64, window: i64, step: i64) -> i64 {
        let value = |sec: i64| points.iter().rev().find(|(t, _)| *t <= sec).unwrap().1;
        let mut best = (0, f64::INFINITY);
        let mut s = 0;
        while s + duration <= window {
            let total: f64 = (s..s + duration).map(value).sum();
            if total < best.1 {
                best = (s, total);
            }
            s += step;
        }
        best.0
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn v_shape_matches_exhaustive_grid(depth in 1u32..400, bottom_at in 1i64..20, duration in 60i64..7200) {
            // integer V-shaped hourly levels, lowest at `bottom_at`; integer
            // data keeps exact ties exact in both computations
            let points: Vec<(i64, f64)> = (0..24)
                .map(|h| (h * 3600, 10_000.0 - f64::from(depth) * (20 - (h - bottom_at).abs()).max(0) as f64))
                .collect();
            let d = schedule_time_shift(&job(duration as u64, 24 * 3600), &series(&points), 300).unwrap();
            let want = brute_force_best(&points, duration, 24 * 3600, 300);
            prop_assert_eq!(d.chosen_start, t0() + Duration::seconds(want));
        }
    }
}
