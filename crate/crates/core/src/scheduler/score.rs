use super::SchedulerError;
use crate::model::{CarbonScore, TransferRecord};

/// `bytes_moved / (average_ci * duration_secs)`.
pub fn carbon_score(record: &TransferRecord) -> Result<CarbonScore, SchedulerError> {
    let duration = record.duration_secs();
    if !(record.average_ci > 0.0 && record.average_ci.is_finite()) {
        return Err(SchedulerError::UndefinedScore(format!(
            "job {}: average_ci is {}",
            record.job_uuid, record.average_ci
        )));
    }
    if duration <= 0.0 {
        return Err(SchedulerError::UndefinedScore(format!(
            "job {}: transfer took {duration}s",
            record.job_uuid
        )));
    }
    Ok(CarbonScore(record.bytes_moved as f64 / (record.average_ci * duration)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathcarbon::fixtures::t0;
    use chrono::Duration;

    fn record(bytes: u64, ci: f64, secs: i64) -> TransferRecord {
        TransferRecord {
            job_uuid: "j".into(),
            bytes_moved: bytes,
            started_at: t0(),
            finished_at: t0() + Duration::seconds(secs),
            average_ci: ci,
            ftn_id: "f".into(),
        }
    }

    #[test]
    fn worked_example() {
        assert_eq!(carbon_score(&record(1_000_000, 250.0, 40)).unwrap().value(), 100.0);
        assert_eq!(carbon_score(&record(1_000_000_000, 250.0, 100)).unwrap().value(), 40_000.0);
        assert_eq!(carbon_score(&record(0, 250.0, 100)).unwrap().value(), 0.0);
    }

    #[test]
    fn monotone_in_ci_and_duration() {
        let base = carbon_score(&record(1 << 30, 200.0, 100)).unwrap();
        assert!(carbon_score(&record(1 << 30, 400.0, 100)).unwrap() < base);
        assert!(carbon_score(&record(1 << 30, 200.0, 200)).unwrap() < base);
    }

    #[test]
    fn undefined_cases() {
        assert!(matches!(carbon_score(&record(10, 0.0, 10)), Err(SchedulerError::UndefinedScore(_))));
        assert!(matches!(carbon_score(&record(10, 10.0, 0)), Err(SchedulerError::UndefinedScore(_))));
        assert!(matches!(carbon_score(&record(10, f64::NAN, 10)), Err(SchedulerError::UndefinedScore(_))));
    }
}
