use serde::{Deserialize, Serialize};

use super::{seconds_between, ModelError, Timestamp};

/// A requested movement of bytes between two named endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferJob {
    pub job_uuid: String,
    pub bytes: u64,
    pub source: String,
    pub destination: String,
    pub earliest_start: Timestamp,
    pub deadline: Timestamp,
    /// Bytes per second, user supplied.
    pub estimated_throughput: f64,
}

impl TransferJob {
    pub fn estimated_duration_secs(&self) -> f64 {
        self.bytes as f64 / self.estimated_throughput
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.estimated_throughput > 0.0 && self.estimated_throughput.is_finite()) {
            return Err(ModelError::InvalidTransfer(format!(
                "job {}: estimated_throughput must be positive",
                self.job_uuid
            )));
        }
        if self.earliest_start >= self.deadline {
            return Err(ModelError::InvalidTransfer(format!(
                "job {}: earliest_start must precede deadline",
                self.job_uuid
            )));
        }
        let window = seconds_between(self.earliest_start, self.deadline);
        if self.estimated_duration_secs() > window {
            return Err(ModelError::InvalidTransfer(format!(
                "job {}: estimated duration {:.1}s exceeds the {window:.1}s window",
                self.job_uuid,
                self.estimated_duration_secs()
            )));
        }
        Ok(())
    }
}

/// Accounting for an executed (or simulated) transfer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRecord {
    pub job_uuid: String,
    pub bytes_moved: u64,
    pub started_at: Timestamp,
    pub finished_at: Timestamp,
    /// Time-weighted over the transfer window, gCO2eq/kWh.
    pub average_ci: f64,
    pub ftn_id: String,
}

impl TransferRecord {
    pub fn duration_secs(&self) -> f64 {
        seconds_between(self.started_at, self.finished_at)
    }
}

/// Bytes moved per unit of carbon intensity per second of transfer time.
/// Higher intensity or a longer transfer lowers the score.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CarbonScore(pub f64);

impl CarbonScore {
    pub fn value(&self) -> f64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone, Utc};

    fn job(bytes: u64, window_secs: i64, throughput: f64) -> TransferJob {
        let start = Utc.with_ymd_and_hms(2024, 4, 14, 0, 0, 0).unwrap();
        TransferJob {
            job_uuid: "j".into(),
            bytes,
            source: "TACC".into(),
            destination: "UC".into(),
            earliest_start: start,
            deadline: start + Duration::seconds(window_secs),
            estimated_throughput: throughput,
        }
    }

    #[test]
    fn duration_must_fit_window() {
        assert!(job(3600, 3600, 1.0).validate().is_ok());
        assert!(job(3601, 3600, 1.0).validate().is_err());
        assert!(job(1, 3600, 0.0).validate().is_err());
        assert!(job(1, 0, 1.0).validate().is_err());
    }
}
