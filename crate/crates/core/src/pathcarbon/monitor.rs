use chrono::Duration;
use serde::{Deserialize, Serialize};
use std::net::IpAddr;

use super::{measure_path_carbon, PathResolver, ReportSink, SinkError};
use crate::clock::Clock;
use crate::discovery::{discover_path, ProbeConfig, Prober};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorConfig {
    pub interval_secs: u64,
    /// `None` runs until interrupted.
    pub duration_secs: Option<u64>,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self { interval_secs: 3600, duration_secs: None }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MonitorError {
    #[error("invalid monitor config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sink(#[from] SinkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MonitorSummary {
    pub ticks: u64,
    pub emitted: u64,
    pub skipped: u64,
}

/// Rediscovers and measures the path to `destination` once per interval.
///
/// Tick `k` fires at `start + k * interval` for every tick strictly inside
/// the configured duration. A tick whose discovery or measurement fails is
/// logged and skipped; a sink failure ends the run.
pub fn monitor_path(
    destination: IpAddr,
    probe: &ProbeConfig,
    config: &MonitorConfig,
    resolver: &PathResolver<'_>,
    prober: &dyn Prober,
    clock: &dyn Clock,
    sink: &mut dyn ReportSink,
) -> Result<MonitorSummary, MonitorError> {
    if config.interval_secs == 0 {
        return Err(MonitorError::InvalidConfig("interval must be positive".into()));
    }
    probe.validate().map_err(|e| MonitorError::InvalidConfig(e.to_string()))?;
    let start = clock.now();
    let mut summary = MonitorSummary::default();
    for k in 0u64.. {
        if let Some(d) = config.duration_secs {
            if k.saturating_mul(config.interval_secs) >= d {
                break;
            }
        }
        let tick = start + Duration::seconds(k.saturating_mul(config.interval_secs) as i64);
        clock.sleep_until(tick);
        summary.ticks += 1;
        let path = match discover_path(destination, probe, prober, clock) {
            Ok(p) => p,
            Err(e) => {
                tracing::warn!(%destination, %tick, "path discovery failed, skipping tick: {e}");
                summary.skipped += 1;
                continue;
            }
        };
        let report = match measure_path_carbon(&path, tick, resolver) {
            Ok(r) => r,
            Err(e) => {
                tracing::warn!(%destination, %tick, "carbon measurement failed, skipping tick: {e}");
                summary.skipped += 1;
                continue;
            }
        };
        sink.append(&report)?;
        summary.emitted += 1;
    }
    Ok(summary)
}
