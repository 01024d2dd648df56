use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::transfer::{route_series, DIRECT};
use super::{run_transfer, SimError, SimTransferResult, TransferPlan, World};
use crate::model::{PathCarbonReport, TransferJob};
use crate::pathcarbon::measure_path_carbon;
use crate::scheduler::{
    carbon_score, plan_overlay, savings_ratio, schedule_space_shift, schedule_time_shift, Decision, MigrationEvent,
    DEFAULT_STEP_SECS,
};

fn default_step() -> u64 {
    DEFAULT_STEP_SECS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    TimeShift {
        job: TransferJob,
        #[serde(default)]
        ftn: Option<String>,
        #[serde(default = "default_step")]
        step_seconds: u64,
    },
    SpaceShift {
        job: TransferJob,
        /// Hosts holding a copy of the data.
        replicas: Vec<String>,
        #[serde(default)]
        ftn: Option<String>,
    },
    Overlay {
        job: TransferJob,
        ftns: Vec<String>,
        #[serde(default)]
        threshold: Option<f64>,
        /// Defaults to the node with the highest predicted intensity.
        #[serde(default)]
        baseline_ftn: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionResult {
    pub id: String,
    pub predicted_avg_ci: Option<f64>,
    pub measured_avg_ci: Option<f64>,
    pub carbon_score: Option<f64>,
    pub hop_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub job_uuid: String,
    pub baseline: String,
    pub chosen: String,
    pub options: Vec<OptionResult>,
    pub baseline_measured_avg_ci: f64,
    pub chosen_measured_avg_ci: f64,
    pub predicted_savings_ratio: f64,
    /// Measured baseline over measured chosen.
    pub savings_ratio: f64,
    pub migrations: Vec<MigrationEvent>,
    pub decision: Decision,
    /// Keyed `baseline` and `chosen`.
    pub transfers: BTreeMap<String, SimTransferResult>,
}

/// Runs the scenario's policy, then executes the baseline and the chosen plan.
pub fn run_experiment(world: &World, scenario: &Scenario) -> Result<ExperimentReport, SimError> {
    match scenario {
        Scenario::TimeShift { job, ftn, step_seconds } => time_shift(world, job, ftn.as_deref(), *step_seconds),
        Scenario::SpaceShift { job, replicas, ftn } => space_shift(world, job, replicas, ftn.as_deref()),
        Scenario::Overlay { job, ftns, threshold, baseline_ftn } => {
            overlay(world, job, ftns, *threshold, baseline_ftn.as_deref())
        }
    }
}

fn score(r: &SimTransferResult) -> Option<f64> {
    carbon_score(&r.record).ok().map(|s| s.value())
}

fn option(id: String, predicted: Option<f64>, run: Option<&SimTransferResult>, hops: Option<usize>) -> OptionResult {
    OptionResult {
        id,
        predicted_avg_ci: predicted,
        measured_avg_ci: run.map(|r| r.record.average_ci),
        carbon_score: run.and_then(score),
        hop_count: hops,
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    kind: &str,
    job: &TransferJob,
    baseline: String,
    chosen: String,
    options: Vec<OptionResult>,
    base_run: SimTransferResult,
    chosen_run: SimTransferResult,
    decision: Decision,
) -> ExperimentReport {
    let (b, c) = (base_run.record.average_ci, chosen_run.record.average_ci);
    ExperimentReport {
        kind: kind.into(),
        job_uuid: job.job_uuid.clone(),
        baseline,
        chosen,
        options,
        baseline_measured_avg_ci: b,
        chosen_measured_avg_ci: c,
        predicted_savings_ratio: decision.savings_ratio(),
        savings_ratio: savings_ratio(b, c),
        migrations: chosen_run.migrations.clone(),
        decision,
        transfers: BTreeMap::from([("baseline".to_string(), base_run), ("chosen".to_string(), chosen_run)]),
    }
}

fn plan(start: crate::model::Timestamp, source: &str, ftn: Option<&str>) -> TransferPlan {
    TransferPlan { start, source: source.into(), ftn: ftn.map(String::from), migration_pool: Vec::new() }
}

fn time_shift(world: &World, job: &TransferJob, ftn: Option<&str>, step: u64) -> Result<ExperimentReport, SimError> {
    let series = route_series(world, &job.source, ftn, &job.destination, job.earliest_start)?
        .ok_or_else(|| SimError::UnknownPathIntensity(job.source.clone()))?;
    let decision = schedule_time_shift(job, &series, step)?;
    let base_run = run_transfer(world, job, &plan(job.earliest_start, &job.source, ftn), None)?;
    let chosen_run = run_transfer(world, job, &plan(decision.chosen_start, &job.source, ftn), None)?;
    let (baseline, chosen) = (job.earliest_start.to_rfc3339(), decision.chosen_start.to_rfc3339());
    let mut options = vec![option(baseline.clone(), Some(decision.baseline_avg_ci), Some(&base_run), None)];
    if chosen != baseline {
        options.push(option(chosen.clone(), Some(decision.predicted_avg_ci), Some(&chosen_run), None));
    }
    Ok(finish("time-shift", job, baseline, chosen, options, base_run, chosen_run, Decision::TimeShift(decision)))
}

fn snapshot(world: &World, job: &TransferJob, source: &str, ftn: Option<&str>) -> Result<PathCarbonReport, SimError> {
    let path = world.route(source, ftn, &job.destination, job.earliest_start)?;
    Ok(measure_path_carbon(&path, job.earliest_start, &world.resolver())?)
}

fn run_known(
    world: &World,
    job: &TransferJob,
    p: &TransferPlan,
    predicted: Option<f64>,
    threshold: Option<f64>,
) -> Result<Option<SimTransferResult>, SimError> {
    match predicted {
        Some(_) => run_transfer(world, job, p, threshold).map(Some),
        None => Ok(None),
    }
}

fn space_shift(world: &World, job: &TransferJob, replicas: &[String], ftn: Option<&str>) -> Result<ExperimentReport, SimError> {
    let mut reports = Vec::new();
    for r in replicas {
        reports.push((r.clone(), snapshot(world, job, r, ftn)?));
    }
    let decision = schedule_space_shift(job, &reports)?;
    let mut options = Vec::new();
    let mut runs = BTreeMap::new();
    for (id, report) in &reports {
        let avg = report.average_intensity();
        let run = run_known(world, job, &plan(job.earliest_start, id, ftn), avg, None)?;
        options.push(option(id.clone(), avg, run.as_ref(), Some(report.hop_count())));
        if let Some(run) = run {
            runs.insert(id.clone(), run);
        }
    }
    let base_run = match runs.get(&job.source) {
        Some(r) => r.clone(),
        None => run_transfer(world, job, &plan(job.earliest_start, &job.source, ftn), None)?,
    };
    let chosen = decision.chosen_source.clone();
    let chosen_run = runs.remove(&chosen).expect("chosen replica has a known path");
    Ok(finish("space-shift", job, job.source.clone(), chosen, options, base_run, chosen_run, Decision::SpaceShift(decision)))
}

fn overlay(
    world: &World,
    job: &TransferJob,
    ftns: &[String],
    threshold: Option<f64>,
    baseline_ftn: Option<&str>,
) -> Result<ExperimentReport, SimError> {
    let mut reports = Vec::new();
    for f in ftns {
        reports.push((f.clone(), snapshot(world, job, &job.source, Some(f))?));
    }
    let decision = plan_overlay(job, &reports, threshold)?;
    let mut options = Vec::new();
    let mut runs = BTreeMap::new();
    for (id, report) in &reports {
        let avg = report.average_intensity();
        let run = run_known(world, job, &plan(job.earliest_start, &job.source, Some(id)), avg, None)?;
        options.push(option(id.clone(), avg, run.as_ref(), Some(report.hop_count())));
        if let Some(run) = run {
            runs.insert(id.clone(), run);
        }
    }
    let baseline = match baseline_ftn {
        Some(b) => b.to_string(),
        None => reports
            .iter()
            .filter_map(|(id, r)| r.average_intensity().map(|a| (id, a)))
            .min_by(|(a, x), (b, y)| y.total_cmp(x).then_with(|| a.cmp(b)))
            .map(|(id, _)| id.clone())
            .unwrap_or_else(|| DIRECT.into()),
    };
    let base_run = match runs.get(&baseline) {
        Some(r) => r.clone(),
        None => run_transfer(world, job, &plan(job.earliest_start, &job.source, Some(&baseline)), None)?,
    };
    let mut chosen_plan = plan(job.earliest_start, &job.source, Some(&decision.chosen_ftn));
    chosen_plan.migration_pool = ftns.to_vec();
    let chosen_run = run_transfer(world, job, &chosen_plan, threshold)?;
    let mut decision = decision;
    decision.migrations = chosen_run.migrations.clone();
    let chosen = decision.chosen_ftn.clone();
    Ok(finish("overlay", job, baseline, chosen, options, base_run, chosen_run, Decision::Overlay(decision)))
}

#[derive(Serialize)]
struct StepRow<'a> {
    run: &'a str,
    start: String,
    end: String,
    ftn: &'a str,
    bytes: u64,
    ci: f64,
}

/// Per-step time series of the baseline and chosen runs, for plotting.
pub fn write_steps_csv<W: Write>(report: &ExperimentReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (run, result) in &report.transfers {
        for s in &result.steps {
            w.serialize(StepRow {
                run,
                start: s.start.to_rfc3339(),
                end: s.end.to_rfc3339(),
                ftn: &s.ftn,
                bytes: s.bytes,
                ci: s.ci,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
