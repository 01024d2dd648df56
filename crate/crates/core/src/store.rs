//! Append-only JSON-lines store, one file per record kind.

use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::metrics::MetricsSnapshot;
use crate::model::{PathCarbonReport, Timestamp, TransferRecord};
use crate::scheduler::DecisionRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Reports,
    Metrics,
    Transfers,
    Decisions,
}

impl RecordKind {
    pub fn file_name(self) -> &'static str {
        match self {
            RecordKind::Reports => "reports.jsonl",
            RecordKind::Metrics => "metrics.jsonl",
            RecordKind::Transfers => "transfers.jsonl",
            RecordKind::Decisions => "decisions.jsonl",
        }
    }
}

pub trait StoreRecord: Serialize + DeserializeOwned {
    const KIND: RecordKind;
    fn timestamp(&self) -> Timestamp;
    fn job_uuid(&self) -> Option<&str> {
        None
    }
}

impl StoreRecord for PathCarbonReport {
    const KIND: RecordKind = RecordKind::Reports;
    fn timestamp(&self) -> Timestamp {
        self.at()
    }
}

impl StoreRecord for MetricsSnapshot {
    const KIND: RecordKind = RecordKind::Metrics;
    fn timestamp(&self) -> Timestamp {
        self.ts
    }
    fn job_uuid(&self) -> Option<&str> {
        self.transfer.as_ref().map(|t| t.job_uuid.as_str())
    }
}

impl StoreRecord for TransferRecord {
    const KIND: RecordKind = RecordKind::Transfers;
    fn timestamp(&self) -> Timestamp {
        self.started_at
    }
    fn job_uuid(&self) -> Option<&str> {
        Some(&self.job_uuid)
    }
}

impl StoreRecord for DecisionRecord {
    const KIND: RecordKind = RecordKind::Decisions;
    fn timestamp(&self) -> Timestamp {
        self.decided_at
    }
    fn job_uuid(&self) -> Option<&str> {
        Some(self.decision.job_uuid())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("encoding record: {0}")]
    Encode(#[from] serde_json::Error),
}

/// `[from, to)` time range plus an optional job.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanFilter {
    pub from: Option<Timestamp>,
    pub to: Option<Timestamp>,
    pub job_uuid: Option<String>,
}

impl ScanFilter {
    pub fn matches<R: StoreRecord>(&self, r: &R) -> bool {
        let t = r.timestamp();
        self.from.map_or(true, |f| t >= f)
            && self.to.map_or(true, |e| t < e)
            && self.job_uuid.as_deref().map_or(true, |j| r.job_uuid() == Some(j))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scan<R> {
    pub records: Vec<R>,
    /// One entry per skipped line.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

impl Store {
    /// Creates the directory if needed.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| StoreError::Io { path: dir.display().to_string(), source: e })?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, kind: RecordKind) -> PathBuf {
        self.dir.join(kind.file_name())
    }

    /// Writes one line with a single `write` call so concurrent appenders to
    /// the same file do not interleave within a record.
    pub fn append<R: StoreRecord>(&self, record: &R) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        let path = self.path(R::KIND);
        let io = |e| StoreError::Io { path: path.display().to_string(), source: e };
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        f.write_all(&line).map_err(io)
    }

    /// Records in file order. Lines that do not parse are skipped with a warning.
    pub fn scan<R: StoreRecord>(&self, filter: &ScanFilter) -> Result<Scan<R>, StoreError> {
        let path = self.path(R::KIND);
        let io = |e| StoreError::Io { path: path.display().to_string(), source: e };
        let file = match fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Ok(Scan { records: Vec::new(), warnings: Vec::new() })
            }
            Err(e) => return Err(io(e)),
        };
        let mut scan = Scan { records: Vec::new(), warnings: Vec::new() };
        for (i, line) in BufReader::new(file).split(b'\n').enumerate() {
            let line = line.map_err(io)?;
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            match serde_json::from_slice::<R>(&line) {
                Ok(r) if filter.matches(&r) => scan.records.push(r),
                Ok(_) => {}
                Err(e) => {
                    let w = format!("{}:{}: skipped corrupt record: {e}", path.display(), i + 1);
                    tracing::warn!("{w}");
                    scan.warnings.push(w);
                }
            }
        }
        Ok(scan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::test_support::arb_snapshot;
    use crate::pathcarbon::fixtures::t0;
    use chrono::Duration;
    use proptest::prelude::*;

    fn record(i: i64, job: &str) -> TransferRecord {
        TransferRecord {
            job_uuid: job.into(),
            bytes_moved: 10 * i as u64,
            started_at: t0() + Duration::hours(i),
            finished_at: t0() + Duration::hours(i + 1),
            average_ci: 100.0 + i as f64 / 3.0,
            ftn_id: "ftn".into(),
        }
    }

    #[test]
    fn append_three_scan_all() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path().join("s")).unwrap();
        let recs: Vec<_> = (0..3).map(|i| record(i, "a")).collect();
        for r in &recs {
            store.append(r).unwrap();
        }
        let scan = store.scan::<TransferRecord>(&ScanFilter::default()).unwrap();
        assert_eq!(scan.records, recs);
        assert!(scan.warnings.is_empty());
        assert!(store.path(RecordKind::Transfers).exists());
    }

    #[test]
    fn filters() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        for i in 0..6 {
            store.append(&record(i, if i % 2 == 0 { "even" } else { "odd" })).unwrap();
        }
        let f = ScanFilter { from: Some(t0() + Duration::hours(100)), ..Default::default() };
        assert!(store.scan::<TransferRecord>(&f).unwrap().records.is_empty());
        let f = ScanFilter { from: Some(t0() + Duration::hours(1)), to: Some(t0() + Duration::hours(4)), job_uuid: Some("odd".into()) };
        let got: Vec<_> = store.scan::<TransferRecord>(&f).unwrap().records.iter().map(|r| r.bytes_moved).collect();
        assert_eq!(got, [10, 30]);
    }

    #[test]
    fn corrupt_line_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        for i in 0..9 {
            store.append(&record(i, "a")).unwrap();
            if i == 4 {
                let mut f = OpenOptions::new().append(true).open(store.path(RecordKind::Transfers)).unwrap();
                f.write_all(b"{\"job_uuid\": \"a\", truncated\n").unwrap();
            }
        }
        let scan = store.scan::<TransferRecord>(&ScanFilter::default()).unwrap();
        assert_eq!((scan.records.len(), scan.warnings.len()), (9, 1));
        assert!(scan.warnings[0].contains(":6:"));
    }

    #[test]
    fn missing_file_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let scan = Store::open(dir.path()).unwrap().scan::<DecisionRecord>(&ScanFilter::default()).unwrap();
        assert!(scan.records.is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn metrics_round_trip(snaps in proptest::collection::vec(arb_snapshot(), 1..10)) {
            let dir = tempfile::tempdir().unwrap();
            let store = Store::open(dir.path()).unwrap();
            for s in &snaps {
                store.append(s).unwrap();
            }
            prop_assert_eq!(store.scan::<MetricsSnapshot>(&ScanFilter::default()).unwrap().records, snaps);
        }
    }
}
