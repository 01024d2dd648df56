//! Deterministic desk-scale world: named hosts, simulated routes, zone
//! assignments and carbon traces, with tick-stepped transfer execution and
//! the three scheduling experiments on top.

mod experiment;
mod transfer;
mod world;

pub use experiment::{run_experiment, write_steps_csv, ExperimentReport, OptionResult, Scenario};
pub use transfer::{route_series, run_transfer, SimStep, SimTransferResult, TransferPlan, DIRECT};
pub use world::{ClockSpec, FtnSpec, HostSpec, TopologySpec, TraceSpec, World, WorldSpec, ZoneSpec, DEFAULT_TICK_SECS};

use crate::carbon::CarbonError;
use crate::discovery::DiscoveryError;
use crate::model::{ModelError, Timestamp};
use crate::pathcarbon::PathCarbonError;
use crate::scheduler::SchedulerError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("unknown host {0}")]
    UnknownHost(String),
    #[error("unknown transfer node {0}")]
    UnknownFtn(String),
    #[error("no topology from {from} to {to}")]
    MissingTopology { from: String, to: String },
    #[error("traces on {0} do not overlap in time")]
    NoCommonCoverage(String),
    #[error("no hop on {0} has a known carbon intensity")]
    UnknownPathIntensity(String),
    #[error("infeasible plan: {0}")]
    InfeasiblePlan(String),
    #[error("carbon traces end mid-transfer at {at}")]
    SimulationTruncated { at: Timestamp },
    #[error(transparent)]
    Carbon(#[from] CarbonError),
    #[error(transparent)]
    Discovery(#[from] DiscoveryError),
    #[error(transparent)]
    PathCarbon(#[from] PathCarbonError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
}
