//! Plot-ready CSV views over stored report lines.

use std::collections::BTreeMap;
use std::io::Write;

use super::ReportLine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Table {
    /// One row per report: path average and hop counts.
    PerTick,
    /// One row per hop per report, grouped by zone.
    PerHop,
    /// Distribution of hop intensities per zone (boxplot five-number summary).
    Zones,
    /// Path averages in the trace-file format, for feeding back into `schedule`.
    Series,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_table<W: Write>(table: Table, lines: &[ReportLine], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match table {
        Table::PerTick => {
            w.write_record(["timestamp", "source", "destination", "average_intensity", "known_hops", "unknown_hops"])?;
            for l in lines {
                w.write_record([
                    l.timestamp.to_rfc3339(),
                    l.source.to_string(),
                    l.destination.to_string(),
                    opt(l.average_intensity),
                    l.known_hops.to_string(),
                    l.unknown_hops.to_string(),
                ])?;
            }
        }
        Table::PerHop => {
            w.write_record(["zone", "timestamp", "destination", "ttl", "ip", "intensity"])?;
            let mut rows = Vec::new();
            for l in lines {
                for h in &l.hops {
                    rows.push((h.zone.as_ref().map(|z| z.to_string()).unwrap_or_default(), l.timestamp, l, h));
                }
            }
            // stable: within a zone, keep report then hop order
            rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
            for (zone, ts, l, h) in rows {
                w.write_record([
                    zone,
                    ts.to_rfc3339(),
                    l.destination.to_string(),
                    h.ttl.map(|t| t.to_string()).unwrap_or_else(|| "dst".into()),
                    h.ip.map(|ip| ip.to_string()).unwrap_or_default(),
                    opt(h.intensity),
                ])?;
            }
        }
        Table::Zones => {
            w.write_record(["zone", "samples", "min", "q1", "median", "q3", "max", "mean"])?;
            let mut by_zone: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for l in lines {
                for h in &l.hops {
                    if let (Some(z), Some(v)) = (&h.zone, h.intensity) {
                        by_zone.entry(z.to_string()).or_default().push(v);
                    }
                }
            }
            for (zone, mut values) in by_zone {
                values.sort_by(f64::total_cmp);
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                w.write_record([
                    zone,
                    values.len().to_string(),
                    values[0].to_string(),
                    quantile(&values, 0.25).to_string(),
                    quantile(&values, 0.5).to_string(),
                    quantile(&values, 0.75).to_string(),
                    values[values.len() - 1].to_string(),
                    mean.to_string(),
                ])?;
            }
        }
        Table::Series => {
            w.write_record(["timestamp", "zone", "intensity_gco2_kwh"])?;
            for l in lines {
                if let Some(avg) = l.average_intensity {
                    w.write_record([l.timestamp.to_rfc3339(), format!("path:{}", l.destination), avg.to_string()])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Linear-interpolation quantile of sorted, nonempty data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}
