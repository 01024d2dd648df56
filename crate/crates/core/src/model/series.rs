use serde::{Deserialize, Serialize};

use super::{add_seconds, seconds_between, ModelError, Timestamp, ZoneId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarbonSample {
    pub zone: ZoneId,
    pub timestamp: Timestamp,
    /// gCO2eq/kWh.
    pub intensity: f64,
}

/// Step-function carbon-intensity signal for one zone.
///
/// Each sample's value holds from its timestamp until the next sample. The
/// last sample holds until `end` when one is set, and indefinitely otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries")]
pub struct CarbonSeries {
    zone: ZoneId,
    samples: Vec<CarbonSample>,
    end: Option<Timestamp>,
}

#[derive(Deserialize)]
struct RawSeries {
    zone: ZoneId,
    samples: Vec<CarbonSample>,
    end: Option<Timestamp>,
}

impl TryFrom<RawSeries> for CarbonSeries {
    type Error = ModelError;

    fn try_from(r: RawSeries) -> Result<Self, Self::Error> {
        CarbonSeries::new(r.zone, r.samples, r.end)
    }
}

impl CarbonSeries {
    pub fn new(
        zone: ZoneId,
        samples: Vec<CarbonSample>,
        end: Option<Timestamp>,
    ) -> Result<Self, ModelError> {
        if samples.is_empty() {
            return Err(ModelError::InvalidSeries(format!("zone {zone}: no samples")));
        }
        if let Some(s) = samples.iter().find(|s| s.zone != zone) {
            return Err(ModelError::InvalidSeries(format!(
                "sample for zone {} in series for {zone}",
                s.zone
            )));
        }
        if let Some(s) = samples.iter().find(|s| !(s.intensity >= 0.0 && s.intensity.is_finite())) {
            return Err(ModelError::InvalidSeries(format!(
                "zone {zone}: bad intensity {} at {}",
                s.intensity, s.timestamp
            )));
        }
        if samples.windows(2).any(|w| w[0].timestamp >= w[1].timestamp) {
            return Err(ModelError::InvalidSeries(format!(
                "zone {zone}: timestamps must be strictly increasing"
            )));
        }
        if let Some(end) = end {
            if end <= samples[samples.len() - 1].timestamp {
                return Err(ModelError::InvalidSeries(format!(
                    "zone {zone}: end {end} must follow the last sample"
                )));
            }
        }
        Ok(Self { zone, samples, end })
    }

    /// Builds a series from `(timestamp, intensity)` pairs.
    pub fn from_points(
        zone: ZoneId,
        points: impl IntoIterator<Item = (Timestamp, f64)>,
        end: Option<Timestamp>,
    ) -> Result<Self, ModelError> {
        let samples = points
            .into_iter()
            .map(|(timestamp, intensity)| CarbonSample { zone: zone.clone(), timestamp, intensity })
            .collect();
        Self::new(zone, samples, end)
    }

    /// A single value holding from `start` onwards.
    pub fn constant(zone: ZoneId, start: Timestamp, intensity: f64) -> Result<Self, ModelError> {
        Self::from_points(zone, [(start, intensity)], None)
    }

    pub fn zone(&self) -> &ZoneId {
        &self.zone
    }

    pub fn samples(&self) -> &[CarbonSample] {
        &self.samples
    }

    pub fn start(&self) -> Timestamp {
        self.samples[0].timestamp
    }

    pub fn end(&self) -> Option<Timestamp> {
        self.end
    }

    pub fn covers(&self, t: Timestamp) -> bool {
        t >= self.start() && self.end.map_or(true, |e| t < e)
    }

    /// Value of the step containing `t`, or `None` outside coverage.
    pub fn value_at(&self, t: Timestamp) -> Option<f64> {
        if !self.covers(t) {
            return None;
        }
        let idx = self.samples.partition_point(|s| s.timestamp <= t);
        Some(self.samples[idx - 1].intensity)
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().map(|s| s.intensity).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().map(|s| s.intensity).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Integral over `[start, end)` divided by the window length.
    pub fn time_weighted_average(&self, start: Timestamp, end: Timestamp) -> Result<f64, ModelError> {
        if start >= end {
            return Err(ModelError::InvalidWindow);
        }
        if start < self.start() {
            return Err(ModelError::NoCoverage { zone: self.zone.clone(), at: start });
        }
        if let Some(series_end) = self.end {
            if end > series_end {
                return Err(ModelError::NoCoverage { zone: self.zone.clone(), at: end });
            }
        }
        // Offsets are taken from the first sample so that integer-second data
        // integrates without rounding.
        let origin = self.start();
        let a = seconds_between(origin, start);
        let b = seconds_between(origin, end);
        let first = self.samples.partition_point(|s| s.timestamp <= start) - 1;
        let mut integral = 0.0;
        for (i, s) in self.samples.iter().enumerate().skip(first) {
            let lo = seconds_between(origin, s.timestamp).max(a);
            let hi = match self.samples.get(i + 1) {
                Some(next) => seconds_between(origin, next.timestamp).min(b),
                None => b,
            };
            if hi <= lo {
                break;
            }
            integral += s.intensity * (hi - lo);
        }
        Ok(integral / (b - a))
    }

    /// Sample timestamps followed by the end, if bounded.
    pub fn breakpoints(&self) -> impl Iterator<Item = Timestamp> + '_ {
        self.samples.iter().map(|s| s.timestamp).chain(self.end)
    }

    /// Restricts to `[from, to)`, keeping step values.
    pub fn slice(&self, from: Timestamp, to: Timestamp) -> Result<Self, ModelError> {
        if from >= to {
            return Err(ModelError::InvalidWindow);
        }
        let first = self
            .value_at(from)
            .ok_or_else(|| ModelError::NoCoverage { zone: self.zone.clone(), at: from })?;
        let mut points = vec![(from, first)];
        points.extend(
            self.samples
                .iter()
                .filter(|s| s.timestamp > from && s.timestamp < to)
                .map(|s| (s.timestamp, s.intensity)),
        );
        let end = match self.end {
            Some(e) => Some(e.min(to)),
            None => Some(to),
        };
        Self::from_points(self.zone.clone(), points, end)
    }

    /// Infers a bounded end for a recorded trace: the last sample holds for as
    /// long as the final gap between samples. Single-sample traces stay open.
    pub fn with_inferred_end(mut self) -> Self {
        let n = self.samples.len();
        if n >= 2 {
            let gap = seconds_between(self.samples[n - 2].timestamp, self.samples[n - 1].timestamp);
            self.end = Some(add_seconds(self.samples[n - 1].timestamp, gap));
        }
        self
    }
}

/// Integral of the piecewise-constant `series` over `[window_start, window_end)`
/// divided by the window length.
pub fn time_weighted_average(
    series: &CarbonSeries,
    window_start: Timestamp,
    window_end: Timestamp,
) -> Result<f64, ModelError> {
    series.time_weighted_average(window_start, window_end)
}
