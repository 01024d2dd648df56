use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{SimError, World};
use crate::model::{add_seconds, CarbonSeries, ModelError, Timestamp, TransferJob, TransferRecord};
use crate::scheduler::{migrate_if_exceeded, ActiveTransfer, MigrationEvent};

/// Where and when to run a job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferPlan {
    pub start: Timestamp,
    /// Host the bytes are read from.
    pub source: String,
    /// `None` moves data directly from source to destination.
    #[serde(default)]
    pub ftn: Option<String>,
    /// Nodes a migration may move to; empty means every node in the world.
    #[serde(default)]
    pub migration_pool: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStep {
    pub start: Timestamp,
    pub end: Timestamp,
    pub ftn: String,
    pub bytes: u64,
    /// Path intensity averaged over the step.
    pub ci: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTransferResult {
    pub record: TransferRecord,
    pub steps: Vec<SimStep>,
    pub migrations: Vec<MigrationEvent>,
}

pub const DIRECT: &str = "direct";

pub(crate) fn route_label(source: &str, ftn: Option<&str>, destination: &str) -> String {
    match ftn {
        Some(f) => format!("path:{source}>{f}>{destination}"),
        None => format!("path:{source}>{destination}"),
    }
}

/// Path series for `source -> ftn -> destination` measured on the world's
/// routes as of `at`.
pub fn route_series(
    world: &World,
    source: &str,
    ftn: Option<&str>,
    destination: &str,
    at: Timestamp,
) -> Result<Option<CarbonSeries>, SimError> {
    let path = world.route(source, ftn, destination, at)?;
    world.path_series(&path, &route_label(source, ftn, destination))
}

/// Executes `job` under `plan` one clock tick at a time. With a threshold,
/// every tick starts with a migration check against the pool.
pub fn run_transfer(
    world: &World,
    job: &TransferJob,
    plan: &TransferPlan,
    threshold: Option<f64>,
) -> Result<SimTransferResult, SimError> {
    job.validate()?;
    if job.bytes == 0 {
        return Err(SimError::InfeasiblePlan(format!("job {} moves no bytes", job.job_uuid)));
    }
    let series_for = |ftn: Option<&str>| -> Result<CarbonSeries, SimError> {
        let label = route_label(&plan.source, ftn, &job.destination);
        route_series(world, &plan.source, ftn, &job.destination, plan.start)?
            .ok_or(SimError::UnknownPathIntensity(label))
    };

    let mut current = plan.ftn.clone().unwrap_or_else(|| DIRECT.to_string());
    let mut series: BTreeMap<String, CarbonSeries> = BTreeMap::new();
    match &plan.ftn {
        Some(f) => {
            let nic = world.ftn(f)?.nic_speed_bps;
            if job.estimated_throughput * 8.0 > nic {
                return Err(SimError::InfeasiblePlan(format!(
                    "job {} needs {} B/s but {f} has a {nic} bit/s NIC",
                    job.job_uuid, job.estimated_throughput
                )));
            }
            series.insert(f.clone(), series_for(Some(f))?);
            if threshold.is_some() {
                let pool: Vec<String> = if plan.migration_pool.is_empty() {
                    world.ftn_ids().map(String::from).collect()
                } else {
                    plan.migration_pool.clone()
                };
                for id in pool {
                    world.ftn(&id)?;
                    if series.contains_key(&id) {
                        continue;
                    }
                    // alternatives with no known intensity are never targets
                    match series_for(Some(&id)) {
                        Ok(s) => {
                            series.insert(id, s);
                        }
                        Err(SimError::UnknownPathIntensity(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        None => {
            series.insert(current.clone(), series_for(None)?);
        }
    }

    let duration = job.estimated_duration_secs();
    let tick = world.tick_seconds() as f64;
    let rate = job.estimated_throughput;
    let truncated = |e: ModelError, at: Timestamp| match e {
        ModelError::NoCoverage { at, .. } => SimError::SimulationTruncated { at },
        ModelError::InvalidWindow => SimError::SimulationTruncated { at },
        other => SimError::Model(other),
    };

    let mut steps = Vec::new();
    let mut migrations = Vec::new();
    let mut moved: u64 = 0;
    for k in 0u64.. {
        let e0 = k as f64 * tick;
        if e0 >= duration {
            break;
        }
        let e1 = ((k + 1) as f64 * tick).min(duration);
        let (t0, t1) = (add_seconds(plan.start, e0), add_seconds(plan.start, e1));

        if let Some(threshold) = threshold {
            let now: Vec<(String, f64)> =
                series.iter().filter_map(|(id, s)| s.value_at(t0).map(|v| (id.clone(), v))).collect();
            let active = ActiveTransfer {
                job_uuid: job.job_uuid.clone(),
                current_ftn: current.clone(),
                remaining_bytes: job.bytes - moved,
                at: t0,
            };
            if let Some(event) = migrate_if_exceeded(&active, &now, threshold) {
                current = event.to_ftn.clone();
                migrations.push(event);
            }
        }

        let ci = series[&current].time_weighted_average(t0, t1).map_err(|e| truncated(e, t0))?;
        let cumulative = if e1 >= duration { job.bytes } else { ((rate * e1).floor() as u64).min(job.bytes) };
        steps.push(SimStep { start: t0, end: t1, ftn: current.clone(), bytes: cumulative - moved, ci });
        moved = cumulative;
    }

    // integrate each stretch on one node in a single pass; summing per-step
    // averages would drift from the exact window average
    let finished_at = add_seconds(plan.start, duration);
    let mut runs: Vec<(&str, Timestamp, Timestamp)> = Vec::new();
    for s in &steps {
        match runs.last_mut() {
            Some(last) if last.0 == s.ftn => last.2 = s.end,
            _ => runs.push((&s.ftn, s.start, s.end)),
        }
    }
    let average_ci = if let [(ftn, a, b)] = runs[..] {
        series[ftn].time_weighted_average(a, b).map_err(|e| truncated(e, a))?
    } else {
        let mut weighted = 0.0;
        for (ftn, a, b) in runs {
            weighted += series[ftn].time_weighted_average(a, b).map_err(|e| truncated(e, a))?
                * crate::model::seconds_between(a, b);
        }
        weighted / crate::model::seconds_between(plan.start, finished_at)
    };

    let record = TransferRecord {
        job_uuid: job.job_uuid.clone(),
        bytes_moved: moved,
        started_at: plan.start,
        finished_at,
        average_ci,
        ftn_id: plan.ftn.clone().unwrap_or_else(|| DIRECT.to_string()),
    };
    Ok(SimTransferResult { record, steps, migrations })
}
