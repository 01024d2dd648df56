use serde::{Deserialize, Serialize};

use super::{savings_ratio, Candidate, MigrationEvent, SchedulerError};
use crate::model::{PathCarbonReport, TransferJob};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayPlan {
    pub job_uuid: String,
    pub chosen_ftn: String,
    pub chosen_avg_ci: f64,
    pub worst_avg_ci: f64,
    pub savings_ratio: f64,
    pub migration_threshold: Option<f64>,
    pub candidates: Vec<Candidate>,
    /// Filled in by whoever executes the plan.
    #[serde(default)]
    pub migrations: Vec<MigrationEvent>,
}

/// Routes the job through the transfer node whose path has the lowest
/// average intensity. Ties go to fewer hops, then to the smaller id.
pub fn plan_overlay(
    job: &TransferJob,
    ftns: &[(String, PathCarbonReport)],
    migration_threshold: Option<f64>,
) -> Result<OverlayPlan, SchedulerError> {
    let candidates = ftns.iter().map(|(id, r)| Candidate::from_report(id.clone(), r)).collect();
    plan_overlay_candidates(job, candidates, migration_threshold)
}

pub fn plan_overlay_candidates(
    job: &TransferJob,
    candidates: Vec<Candidate>,
    migration_threshold: Option<f64>,
) -> Result<OverlayPlan, SchedulerError> {
    let known = || candidates.iter().filter_map(|c| c.average_intensity.map(|a| (c, a)));
    let (best, chosen) = known()
        .min_by(|(a, x), (b, y)| {
            x.total_cmp(y).then(a.hop_count.cmp(&b.hop_count)).then_with(|| a.id.cmp(&b.id))
        })
        .ok_or(SchedulerError::NoViableFtn)?;
    let worst = known().map(|(_, a)| a).fold(f64::NEG_INFINITY, f64::max);
    Ok(OverlayPlan {
        job_uuid: job.job_uuid.clone(),
        chosen_ftn: best.id.clone(),
        chosen_avg_ci: chosen,
        worst_avg_ci: worst,
        savings_ratio: savings_ratio(worst, chosen),
        migration_threshold,
        candidates: candidates.clone(),
        migrations: Vec::new(),
    })
}
