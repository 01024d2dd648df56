use std::net::IpAddr;

use serde::{Deserialize, Serialize};

use super::{GeoLocation, ModelError, NetworkPath, Timestamp, ZoneId};

/// Outcome of averaging per-hop intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathAverage {
    Known { average: f64, known: usize, unknown: usize },
    AllUnknown { unknown: usize },
}

impl PathAverage {
    pub fn average(&self) -> Option<f64> {
        match self {
            PathAverage::Known { average, .. } => Some(*average),
            PathAverage::AllUnknown { .. } => None,
        }
    }

    pub fn counts(&self) -> (usize, usize) {
        match *self {
            PathAverage::Known { known, unknown, .. } => (known, unknown),
            PathAverage::AllUnknown { unknown } => (0, unknown),
        }
    }
}

/// Mean of the known entries. Unknown entries are counted but excluded.
///
/// Values are summed in sorted order so the result does not depend on hop order.
pub fn path_average_intensity(per_hop: &[Option<f64>]) -> Result<PathAverage, ModelError> {
    if per_hop.is_empty() {
        return Err(ModelError::EmptyPath);
    }
    let mut known: Vec<f64> = per_hop.iter().flatten().copied().collect();
    let unknown = per_hop.len() - known.len();
    if known.is_empty() {
        return Ok(PathAverage::AllUnknown { unknown });
    }
    // offsets from the minimum, summed in sorted order: exact when all
    // entries agree and independent of hop order
    known.sort_by(f64::total_cmp);
    let lo = known[0];
    let average = lo + known.iter().map(|v| v - lo).sum::<f64>() / known.len() as f64;
    Ok(PathAverage::Known { average, known: known.len(), unknown })
}

/// Where an entry sits on the path. End systems bracket the probed hops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopPosition {
    Source,
    Hop(u8),
    Destination,
}

impl HopPosition {
    /// Source is TTL 0 and the destination end system has no finite TTL.
    pub fn ttl(&self) -> Option<u8> {
        match self {
            HopPosition::Source => Some(0),
            HopPosition::Hop(t) => Some(*t),
            HopPosition::Destination => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopCarbon {
    pub position: HopPosition,
    pub ip: Option<IpAddr>,
    pub location: Option<GeoLocation>,
    pub zone: Option<ZoneId>,
    /// gCO2eq/kWh, `None` when the hop could not be resolved.
    pub intensity: Option<f64>,
}

/// Per-hop carbon intensities of a path at one instant plus their aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawReport")]
pub struct PathCarbonReport {
    path: NetworkPath,
    at: Timestamp,
    per_hop: Vec<HopCarbon>,
    /// `None` when every entry is unknown.
    average_intensity: Option<f64>,
    known_hop_count: usize,
    unknown_hop_count: usize,
}

#[derive(Deserialize)]
struct RawReport {
    path: NetworkPath,
    at: Timestamp,
    per_hop: Vec<HopCarbon>,
    average_intensity: Option<f64>,
    known_hop_count: usize,
    unknown_hop_count: usize,
}

impl TryFrom<RawReport> for PathCarbonReport {
    type Error = ModelError;

    fn try_from(r: RawReport) -> Result<Self, Self::Error> {
        let rebuilt = PathCarbonReport::new(r.path, r.at, r.per_hop)?;
        let stored = (r.average_intensity, r.known_hop_count, r.unknown_hop_count);
        let derived = (rebuilt.average_intensity, rebuilt.known_hop_count, rebuilt.unknown_hop_count);
        if stored != derived {
            return Err(ModelError::InvalidPath(format!(
                "report aggregates {stored:?} disagree with per-hop entries {derived:?}"
            )));
        }
        Ok(rebuilt)
    }
}

impl PathCarbonReport {
    /// `per_hop` must hold the source end system, one entry per path hop,
    /// then the destination end system.
    pub fn new(path: NetworkPath, at: Timestamp, per_hop: Vec<HopCarbon>) -> Result<Self, ModelError> {
        let expected = path.hops().len() + 2;
        if per_hop.len() != expected {
            return Err(ModelError::InvalidPath(format!(
                "expected {expected} per-hop entries, got {}",
                per_hop.len()
            )));
        }
        let intensities: Vec<Option<f64>> = per_hop.iter().map(|h| h.intensity).collect();
        let aggregate = path_average_intensity(&intensities)?;
        let (known, unknown) = aggregate.counts();
        Ok(Self {
            path,
            at,
            per_hop,
            average_intensity: aggregate.average(),
            known_hop_count: known,
            unknown_hop_count: unknown,
        })
    }

    pub fn path(&self) -> &NetworkPath {
        &self.path
    }

    pub fn at(&self) -> Timestamp {
        self.at
    }

    pub fn per_hop(&self) -> &[HopCarbon] {
        &self.per_hop
    }

    pub fn average_intensity(&self) -> Option<f64> {
        self.average_intensity
    }

    pub fn is_all_unknown(&self) -> bool {
        self.average_intensity.is_none()
    }

    pub fn known_hop_count(&self) -> usize {
        self.known_hop_count
    }

    pub fn unknown_hop_count(&self) -> usize {
        self.unknown_hop_count
    }

    /// Probed hops, excluding the two end systems.
    pub fn hop_count(&self) -> usize {
        self.path.hops().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mean_of_known() {
        assert_eq!(
            path_average_intensity(&[Some(100.0), Some(200.0), Some(300.0)]).unwrap(),
            PathAverage::Known { average: 200.0, known: 3, unknown: 0 }
        );
        assert_eq!(
            path_average_intensity(&[Some(250.0), None, Some(350.0)]).unwrap(),
            PathAverage::Known { average: 300.0, known: 2, unknown: 1 }
        );
        assert_eq!(
            path_average_intensity(&[None, None]).unwrap(),
            PathAverage::AllUnknown { unknown: 2 }
        );
        assert_eq!(path_average_intensity(&[]), Err(ModelError::EmptyPath));
        assert_eq!(path_average_intensity(&[Some(488.6); 7]).unwrap().average(), Some(488.6));
    }

    proptest! {
        #[test]
        fn permutation_invariant(
            mut values in prop::collection::vec(prop::option::of(0.0f64..5000.0), 1..40),
            seed in any::<u64>(),
        ) {
            let before = path_average_intensity(&values).unwrap();
            // deterministic shuffle
            let mut s = seed;
            for i in (1..values.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                values.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(before, path_average_intensity(&values).unwrap());
        }
    }
}
