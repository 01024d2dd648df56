use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::{CarbonError, CarbonProvider};
use crate::model::{CarbonSample, CarbonSeries, Timestamp, ZoneId};

#[derive(Deserialize)]
struct Row {
    timestamp: Timestamp,
    zone: String,
    intensity_gco2_kwh: f64,
}

/// Recorded carbon traces keyed by zone. Immutable once loaded.
#[derive(Debug, Clone, Default)]
pub struct TraceStore {
    series: BTreeMap<ZoneId, CarbonSeries>,
}

impl TraceStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces any series already held for the same zone.
    pub fn insert(&mut self, series: CarbonSeries) {
        self.series.insert(series.zone().clone(), series);
    }

    pub fn get(&self, zone: &ZoneId) -> Option<&CarbonSeries> {
        self.series.get(zone)
    }

    pub fn zones(&self) -> impl Iterator<Item = &ZoneId> {
        self.series.keys()
    }

    pub fn into_series(self) -> impl Iterator<Item = CarbonSeries> {
        self.series.into_values()
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    /// Parses `timestamp,zone,intensity_gco2_kwh` rows, possibly interleaving
    /// zones. Each zone's last sample holds for as long as its final gap.
    pub fn from_reader<R: std::io::Read>(reader: R, origin: &str) -> Result<Self, CarbonError> {
        let mut rows: BTreeMap<ZoneId, Vec<(u64, CarbonSample)>> = BTreeMap::new();
        read_rows(reader, origin, &mut rows)?;
        Self::build(rows, origin)
    }

    /// Loads one CSV file, or every `*.csv` file in a directory.
    pub fn load(path: &Path) -> Result<Self, CarbonError> {
        let io = |source| CarbonError::Io { path: path.display().to_string(), source };
        let mut files = Vec::new();
        if path.is_dir() {
            for entry in std::fs::read_dir(path).map_err(io)? {
                let p = entry.map_err(io)?.path();
                if p.extension().is_some_and(|e| e == "csv") {
                    files.push(p);
                }
            }
            files.sort();
        } else {
            files.push(path.to_path_buf());
        }
        let mut rows = BTreeMap::new();
        for file in &files {
            let f = std::fs::File::open(file)
                .map_err(|source| CarbonError::Io { path: file.display().to_string(), source })?;
            read_rows(f, &file.display().to_string(), &mut rows)?;
        }
        Self::build(rows, &path.display().to_string())
    }

    fn build(rows: BTreeMap<ZoneId, Vec<(u64, CarbonSample)>>, origin: &str) -> Result<Self, CarbonError> {
        let mut store = Self::new();
        for (zone, mut samples) in rows {
            samples.sort_by_key(|(_, s)| s.timestamp);
            if let Some(w) = samples.windows(2).find(|w| w[0].1.timestamp == w[1].1.timestamp) {
                return Err(CarbonError::Parse {
                    path: origin.to_string(),
                    line: w[1].0,
                    message: format!("duplicate timestamp {} for zone {zone}", w[1].1.timestamp),
                });
            }
            let samples = samples.into_iter().map(|(_, s)| s).collect();
            store.insert(CarbonSeries::new(zone, samples, None)?.with_inferred_end());
        }
        Ok(store)
    }
}

fn read_rows<R: std::io::Read>(
    reader: R,
    origin: &str,
    rows: &mut BTreeMap<ZoneId, Vec<(u64, CarbonSample)>>,
) -> Result<(), CarbonError> {
    let parse = |line: u64, message: String| CarbonError::Parse { path: origin.to_string(), line, message };
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers().map_err(|e| parse(1, e.to_string()))?.clone();
    if headers.is_empty() {
        return Ok(());
    }
    if headers.iter().collect::<Vec<_>>() != ["timestamp", "zone", "intensity_gco2_kwh"] {
        return Err(parse(1, "expected header timestamp,zone,intensity_gco2_kwh".into()));
    }
    let mut record = csv::StringRecord::new();
    loop {
        match csv.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => return Err(parse(e.position().map_or(0, |p| p.line()), e.to_string())),
        }
        let line = record.position().map_or(0, |p| p.line());
        let row: Row = record.deserialize(Some(&headers)).map_err(|e| parse(line, e.to_string()))?;
        if !(row.intensity_gco2_kwh >= 0.0 && row.intensity_gco2_kwh.is_finite()) {
            return Err(parse(line, format!("intensity must be nonnegative, got {}", row.intensity_gco2_kwh)));
        }
        let zone = ZoneId::new(row.zone).map_err(|e| parse(line, e.to_string()))?;
        rows.entry(zone.clone()).or_default().push((
            line,
            CarbonSample { zone, timestamp: row.timestamp, intensity: row.intensity_gco2_kwh },
        ));
    }
    Ok(())
}

impl CarbonProvider for TraceStore {
    fn intensity(&self, zone: &ZoneId, at: Timestamp, _live: bool) -> Result<Option<f64>, CarbonError> {
        Ok(self.series.get(zone).and_then(|s| s.value_at(at)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone, Utc};

    const TRACE: &str = "timestamp,zone,intensity_gco2_kwh\n\
        2024-04-14T00:00:00Z,US-TEX,400\n\
        2024-04-14T00:00:00Z,US-CAL,120\n\
        2024-04-14T01:00:00Z,US-TEX,300\n\
        2024-04-14T01:00:00Z,US-CAL,150\n";

    #[test]
    fn interleaved_zones() {
        let store = TraceStore::from_reader(TRACE.as_bytes(), "t.csv").unwrap();
        assert_eq!(store.len(), 2);
        let t0 = Utc.with_ymd_and_hms(2024, 4, 14, 0, 0, 0).unwrap();
        let tex = ZoneId::new("US-TEX").unwrap();
        assert_eq!(store.intensity(&tex, t0 + Duration::minutes(59), false).unwrap(), Some(400.0));
        assert_eq!(store.intensity(&tex, t0 + Duration::minutes(61), false).unwrap(), Some(300.0));
        // last sample holds for one more hour
        assert_eq!(store.get(&tex).unwrap().end(), Some(t0 + Duration::hours(2)));
        assert_eq!(store.intensity(&tex, t0 + Duration::hours(2), false).unwrap(), None);
    }

    #[test]
    fn rejects_bad_rows() {
        let dup = "timestamp,zone,intensity_gco2_kwh\n2024-04-14T00:00:00Z,Z,1\n2024-04-14T00:00:00Z,Z,2\n";
        assert!(matches!(TraceStore::from_reader(dup.as_bytes(), "d"), Err(CarbonError::Parse { line: 3, .. })));
        let neg = "timestamp,zone,intensity_gco2_kwh\n2024-04-14T00:00:00Z,Z,-1\n";
        assert!(matches!(TraceStore::from_reader(neg.as_bytes(), "n"), Err(CarbonError::Parse { line: 2, .. })));
        let bad_ts = "timestamp,zone,intensity_gco2_kwh\nyesterday,Z,1\n";
        assert!(matches!(TraceStore::from_reader(bad_ts.as_bytes(), "b"), Err(CarbonError::Parse { line: 2, .. })));
        assert!(TraceStore::from_reader("a,b\n".as_bytes(), "h").is_err());
    }

    #[test]
    fn loads_directory() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), TRACE).unwrap();
        std::fs::write(
            dir.path().join("b.csv"),
            "timestamp,zone,intensity_gco2_kwh\n2024-04-14T00:00:00Z,US-NY,200\n",
        )
        .unwrap();
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let store = TraceStore::load(dir.path()).unwrap();
        assert_eq!(store.zones().map(|z| z.as_str()).collect::<Vec<_>>(), ["US-CAL", "US-NY", "US-TEX"]);
    }
}
