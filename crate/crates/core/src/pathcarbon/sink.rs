use std::io::Write;
use std::net::IpAddr;

use serde::{Deserialize, Serialize};

use crate::model::{PathCarbonReport, Timestamp, ZoneId};

#[derive(Debug, thiserror::Error)]
pub enum SinkError {
    #[error("writing report: {0}")]
    Io(#[from] std::io::Error),
    #[error("encoding report: {0}")]
    Encode(#[from] serde_json::Error),
}

/// One hop of a report line. `ttl` is 0 for the source end system and null
/// for the destination end system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopLine {
    pub ttl: Option<u8>,
    pub ip: Option<IpAddr>,
    pub zone: Option<ZoneId>,
    pub intensity: Option<f64>,
}

/// Flat JSON-lines form of a [`PathCarbonReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportLine {
    pub timestamp: Timestamp,
    pub source: IpAddr,
    pub destination: IpAddr,
    pub hops: Vec<HopLine>,
    pub average_intensity: Option<f64>,
    pub known_hops: usize,
    pub unknown_hops: usize,
}

impl From<&PathCarbonReport> for ReportLine {
    fn from(r: &PathCarbonReport) -> Self {
        Self {
            timestamp: r.at(),
            source: r.path().source_host(),
            destination: r.path().destination_host(),
            hops: r
                .per_hop()
                .iter()
                .map(|h| HopLine { ttl: h.position.ttl(), ip: h.ip, zone: h.zone.clone(), intensity: h.intensity })
                .collect(),
            average_intensity: r.average_intensity(),
            known_hops: r.known_hop_count(),
            unknown_hops: r.unknown_hop_count(),
        }
    }
}

pub trait ReportSink {
    fn append(&mut self, report: &PathCarbonReport) -> Result<(), SinkError>;
}

impl ReportSink for Vec<PathCarbonReport> {
    fn append(&mut self, report: &PathCarbonReport) -> Result<(), SinkError> {
        self.push(report.clone());
        Ok(())
    }
}

impl<S: ReportSink + ?Sized> ReportSink for &mut S {
    fn append(&mut self, report: &PathCarbonReport) -> Result<(), SinkError> {
        (**self).append(report)
    }
}

/// Writes each report as one [`ReportLine`] and flushes.
pub struct JsonlReportSink<W> {
    out: W,
}

impl<W: Write> JsonlReportSink<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> ReportSink for JsonlReportSink<W> {
    fn append(&mut self, report: &PathCarbonReport) -> Result<(), SinkError> {
        let line = serde_json::to_string(&ReportLine::from(report))?;
        writeln!(self.out, "{line}")?;
        self.out.flush()?;
        Ok(())
    }
}
