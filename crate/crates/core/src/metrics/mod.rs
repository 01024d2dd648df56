//! End-system host, network and transfer metrics.
//!
//! Sources produce raw readings; a [`Sampler`] stamps them, checks the
//! schema invariants and enforces counter monotonicity per stream.

mod generated;
#[cfg(target_os = "linux")]
mod procfs;

pub use generated::{GeneratedSource, ScriptedSource};
#[cfg(target_os = "linux")]
pub use procfs::ProcSource;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::model::Timestamp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostMetrics {
    pub core_count: u32,
    /// Bytes.
    pub free_memory: u64,
    pub max_memory: u64,
    pub memory: u64,
    /// MHz.
    pub cpu_freq_min: Option<f64>,
    pub cpu_freq_max: Option<f64>,
    pub cpu_freq_cur: Option<f64>,
    pub cpu_arch: String,
    /// Fraction in [0, 1].
    pub cpu_util: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetrics {
    pub drop_in: u64,
    pub drop_out: u64,
    pub error_in: u64,
    pub error_out: u64,
    pub latency_src_ms: Option<f64>,
    pub latency_dst_ms: Option<f64>,
    pub rtt_src_ms: Option<f64>,
    pub rtt_dst_ms: Option<f64>,
    /// Bytes.
    pub nic_mtu: u32,
    /// Bits per second.
    pub nic_speed: u64,
    pub interface: String,
    pub packets_sent: u64,
    pub packets_received: u64,
    /// Bytes per second.
    pub read_thrpt: f64,
    pub write_thrpt: f64,
}

impl NetworkMetrics {
    fn counters(&self) -> [(&'static str, u64); 6] {
        [
            ("drop_in", self.drop_in),
            ("drop_out", self.drop_out),
            ("error_in", self.error_in),
            ("error_out", self.error_out),
            ("packets_sent", self.packets_sent),
            ("packets_received", self.packets_received),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMetrics {
    pub job_uuid: String,
    pub job_size: u64,
    pub node_id: String,
    pub buffer_size: u64,
    pub parallelism: u32,
    pub concurrency: u32,
    pub pipelining: u32,
    pub bytes_sent: u64,
    pub bytes_received: u64,
}

/// What a source returns before stamping and validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    pub host: HostMetrics,
    pub net: NetworkMetrics,
    #[serde(default)]
    pub transfer: Option<TransferMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    pub ts: Timestamp,
    pub host: HostMetrics,
    pub net: NetworkMetrics,
    /// Present only while a transfer is active.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TransferMetrics>,
}

#[derive(Debug, thiserror::Error)]
pub enum SampleError {
    #[error("reading metrics source: {0}")]
    Source(String),
    #[error("metrics invariant violated: {0}")]
    Invariant(String),
    #[error("scripted source exhausted")]
    Exhausted,
}

#[derive(Debug, thiserror::Error)]
pub enum SinkError {
    #[error("writing metrics: {0}")]
    Io(#[from] std::io::Error),
    #[error("encoding metrics: {0}")]
    Encode(#[from] serde_json::Error),
}

pub trait MetricsSource {
    fn read(&mut self) -> Result<Reading, SampleError>;
}

impl<S: MetricsSource + ?Sized> MetricsSource for Box<S> {
    fn read(&mut self) -> Result<Reading, SampleError> {
        (**self).read()
    }
}

/// Checks the per-snapshot invariants of the schema.
pub fn validate(reading: &Reading) -> Result<(), SampleError> {
    let bad = |m: String| Err(SampleError::Invariant(m));
    let h = &reading.host;
    if h.free_memory > h.max_memory {
        return bad(format!("free_memory {} exceeds max_memory {}", h.free_memory, h.max_memory));
    }
    if let (Some(lo), Some(cur), Some(hi)) = (h.cpu_freq_min, h.cpu_freq_cur, h.cpu_freq_max) {
        if !(lo <= cur && cur <= hi) {
            return bad(format!("cpu frequency {cur} outside [{lo}, {hi}]"));
        }
    }
    if !(0.0..=1.0).contains(&h.cpu_util) {
        return bad(format!("cpu_util {} outside [0, 1]", h.cpu_util));
    }
    let n = &reading.net;
    for (side, lat, rtt) in [("src", n.latency_src_ms, n.rtt_src_ms), ("dst", n.latency_dst_ms, n.rtt_dst_ms)] {
        if lat.is_some_and(|l| !(l >= 0.0)) || rtt.is_some_and(|r| !(r >= 0.0)) {
            return bad(format!("{side} latency/rtt must be nonnegative"));
        }
        if let (Some(l), Some(r)) = (lat, rtt) {
            if r < l {
                return bad(format!("{side} rtt {r} below latency {l}"));
            }
        }
    }
    if !(n.read_thrpt >= 0.0 && n.write_thrpt >= 0.0) {
        return bad("throughput must be nonnegative".into());
    }
    if let Some(t) = &reading.transfer {
        if t.bytes_sent > t.job_size {
            return bad(format!("bytes_sent {} exceeds job_size {}", t.bytes_sent, t.job_size));
        }
        if t.parallelism == 0 || t.concurrency == 0 || t.pipelining == 0 {
            return bad("parallelism, concurrency and pipelining must be at least 1".into());
        }
    }
    Ok(())
}

/// Stamps readings from one source and enforces counter monotonicity.
pub struct Sampler<S> {
    source: S,
    last: Option<NetworkMetrics>,
}

impl<S: MetricsSource> Sampler<S> {
    pub fn new(source: S) -> Self {
        Self { source, last: None }
    }

    pub fn sample(&mut self, clock: &dyn Clock) -> Result<MetricsSnapshot, SampleError> {
        let reading = self.source.read()?;
        validate(&reading)?;
        if let Some(prev) = &self.last {
            for ((name, before), (_, now)) in prev.counters().iter().zip(reading.net.counters()) {
                if now < *before {
                    return Err(SampleError::Invariant(format!("counter {name} went backwards: {before} -> {now}")));
                }
            }
        }
        self.last = Some(reading.net.clone());
        Ok(MetricsSnapshot { ts: clock.now(), host: reading.host, net: reading.net, transfer: reading.transfer })
    }
}

/// Appends one JSON line for `snapshot`.
pub fn emit(snapshot: &MetricsSnapshot, sink: &mut dyn Write) -> Result<(), SinkError> {
    let line = serde_json::to_string(snapshot)?;
    writeln!(sink, "{line}")?;
    sink.flush()?;
    Ok(())
}
