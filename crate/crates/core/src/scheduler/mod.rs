//! Carbon-saving placement decisions for transfers: when to start (time
//! shift), which replica to read (space shift), which transfer node to run
//! on and when to move it (overlay), plus scoring of finished transfers.

mod migrate;
mod overlay;
mod score;
mod space;
mod time_shift;

pub use migrate::{migrate_if_exceeded, ActiveTransfer, MigrationEvent};
pub use overlay::{plan_overlay, plan_overlay_candidates, OverlayPlan};
pub use score::carbon_score;
pub use space::{schedule_space_shift, schedule_space_shift_candidates, ReplicaChoice};
pub use time_shift::{schedule_time_shift, Forecast, PersistenceForecast, TimeShiftDecision, DEFAULT_STEP_SECS};

use serde::{Deserialize, Serialize};

use crate::model::{ModelError, PathCarbonReport, Timestamp};

#[derive(Debug, thiserror::Error)]
pub enum SchedulerError {
    #[error("carbon series does not cover the scheduling window: {0}")]
    NoCoverage(ModelError),
    #[error(transparent)]
    InvalidJob(ModelError),
    #[error("step must be positive")]
    InvalidStep,
    #[error("no replica has a known path carbon intensity")]
    NoViableReplica,
    #[error("no transfer node has a known path carbon intensity")]
    NoViableFtn,
    #[error("carbon score undefined: {0}")]
    UndefinedScore(String),
}

/// One option considered by a placement decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    /// `None` when every hop of the option's path was unknown.
    pub average_intensity: Option<f64>,
    pub hop_count: usize,
}

impl Candidate {
    pub fn new(id: impl Into<String>, average_intensity: Option<f64>, hop_count: usize) -> Self {
        Self { id: id.into(), average_intensity, hop_count }
    }

    pub fn from_report(id: impl Into<String>, report: &PathCarbonReport) -> Self {
        Self::new(id, report.average_intensity(), report.hop_count())
    }
}

/// `baseline / chosen`, with 0/0 read as no change.
pub fn savings_ratio(baseline: f64, chosen: f64) -> f64 {
    if chosen == 0.0 {
        if baseline == 0.0 { 1.0 } else { f64::INFINITY }
    } else {
        baseline / chosen
    }
}

/// Serialized output of the `schedule` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    TimeShift(TimeShiftDecision),
    SpaceShift(ReplicaChoice),
    Overlay(OverlayPlan),
}

impl Decision {
    pub fn job_uuid(&self) -> &str {
        match self {
            Decision::TimeShift(d) => &d.job_uuid,
            Decision::SpaceShift(d) => &d.job_uuid,
            Decision::Overlay(d) => &d.job_uuid,
        }
    }

    pub fn savings_ratio(&self) -> f64 {
        match self {
            Decision::TimeShift(d) => d.savings_ratio,
            Decision::SpaceShift(d) => d.savings_ratio,
            Decision::Overlay(d) => d.savings_ratio,
        }
    }
}

/// A decision as persisted in the store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub decided_at: Timestamp,
    pub decision: Decision,
}
