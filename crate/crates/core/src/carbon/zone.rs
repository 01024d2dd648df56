use std::path::Path;

use serde::Deserialize;

use super::CarbonError;
use crate::model::{GeoLocation, ZoneId};

const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Great-circle distance between two (lat, lon) points in degrees.
pub fn haversine_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Deserialize)]
struct Row {
    zone: String,
    lat: f64,
    lon: f64,
}

/// Zone centroids used to place coordinates that arrive without a zone.
#[derive(Debug, Clone, Default)]
pub struct ZoneMap {
    centroids: Vec<(ZoneId, GeoLocation)>,
}

impl ZoneMap {
    pub fn new(centroids: impl IntoIterator<Item = (ZoneId, f64, f64)>) -> Result<Self, CarbonError> {
        let centroids = centroids
            .into_iter()
            .map(|(z, lat, lon)| Ok((z, GeoLocation::new(lat, lon, None)?)))
            .collect::<Result<_, CarbonError>>()?;
        Ok(Self { centroids })
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    /// Reads the `zone,lat,lon` CSV format.
    pub fn from_reader<R: std::io::Read>(reader: R, origin: &str) -> Result<Self, CarbonError> {
        let parse = |line: u64, message: String| CarbonError::Parse { path: origin.to_string(), line, message };
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = csv.headers().map_err(|e| parse(1, e.to_string()))?.clone();
        if headers.is_empty() {
            return Ok(Self::default());
        }
        if headers.iter().collect::<Vec<_>>() != ["zone", "lat", "lon"] {
            return Err(parse(1, "expected header zone,lat,lon".into()));
        }
        let mut centroids = Vec::new();
        let mut record = csv::StringRecord::new();
        loop {
            match csv.read_record(&mut record) {
                Ok(true) => {}
                Ok(false) => break,
                Err(e) => return Err(parse(e.position().map_or(0, |p| p.line()), e.to_string())),
            }
            let line = record.position().map_or(0, |p| p.line());
            let row: Row = record.deserialize(Some(&headers)).map_err(|e| parse(line, e.to_string()))?;
            let zone = ZoneId::new(row.zone).map_err(|e| parse(line, e.to_string()))?;
            let loc = GeoLocation::new(row.lat, row.lon, None).map_err(|e| parse(line, e.to_string()))?;
            centroids.push((zone, loc));
        }
        Ok(Self { centroids })
    }

    pub fn load(path: &Path) -> Result<Self, CarbonError> {
        let f = std::fs::File::open(path)
            .map_err(|source| CarbonError::Io { path: path.display().to_string(), source })?;
        Self::from_reader(f, &path.display().to_string())
    }

    /// Nearest centroid by great-circle distance; equal distances resolve to
    /// the lexicographically smallest zone.
    pub fn nearest(&self, latitude: f64, longitude: f64) -> Option<&ZoneId> {
        self.centroids
            .iter()
            .map(|(z, c)| (haversine_km((latitude, longitude), (c.latitude(), c.longitude())), z))
            .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)))
            .map(|(_, z)| z)
    }
}

/// The location's own zone when present, else the nearest centroid's.
/// `None` only when the location has no zone and the map is empty.
pub fn zone_for_location(loc: &GeoLocation, zonemap: &ZoneMap) -> Option<ZoneId> {
    loc.zone()
        .cloned()
        .or_else(|| zonemap.nearest(loc.latitude(), loc.longitude()).cloned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(s: &str) -> ZoneId {
        ZoneId::new(s).unwrap()
    }

    #[test]
    fn explicit_zone_passes_through() {
        let map = ZoneMap::new([(z("US-NY"), 42.9, -75.5)]).unwrap();
        let loc = GeoLocation::new(34.0, -118.0, Some(z("US-CAL"))).unwrap();
        assert_eq!(zone_for_location(&loc, &map), Some(z("US-CAL")));
    }

    #[test]
    fn nearest_centroid() {
        // Buffalo-ish point: about 270 km from the NY centroid, over 2000 km from Texas.
        assert!(haversine_km((43.0, -78.8), (42.9, -75.5)) < 300.0);
        assert!(haversine_km((43.0, -78.8), (31.0, -99.0)) > 2000.0);
        let map = ZoneMap::new([(z("US-TEX"), 31.0, -99.0), (z("US-NY"), 42.9, -75.5)]).unwrap();
        let loc = GeoLocation::new(43.0, -78.8, None).unwrap();
        assert_eq!(zone_for_location(&loc, &map), Some(z("US-NY")));
    }

    #[test]
    fn equidistant_tie_is_lexicographic() {
        let map = ZoneMap::new([(z("B-EAST"), 0.0, 10.0), (z("A-WEST"), 0.0, -10.0)]).unwrap();
        let loc = GeoLocation::new(0.0, 0.0, None).unwrap();
        assert_eq!(zone_for_location(&loc, &map), Some(z("A-WEST")));
    }

    #[test]
    fn empty_map() {
        let loc = GeoLocation::new(0.0, 0.0, None).unwrap();
        assert_eq!(zone_for_location(&loc, &ZoneMap::default()), None);
    }

    #[test]
    fn haversine_known_distance() {
        // one degree of longitude on the equator
        let d = haversine_km((0.0, 0.0), (0.0, 1.0));
        assert!((d - EARTH_RADIUS_KM * std::f64::consts::PI / 180.0).abs() < 1e-9);
    }

    #[test]
    fn csv_map() {
        let map = ZoneMap::from_reader("zone,lat,lon\nUS-NY,42.9,-75.5\nUS-TEX,31.0,-99.0\n".as_bytes(), "m").unwrap();
        assert_eq!(map.len(), 2);
        assert!(ZoneMap::from_reader("zone,lat,lon\nUS-NY,142.9,-75.5\n".as_bytes(), "m").is_err());
    }

    proptest! {
        #[test]
        fn reorder_invariant(
            pts in prop::collection::vec((-90.0f64..90.0, -180.0f64..180.0), 1..12),
            lat in -90.0f64..90.0,
            lon in -180.0f64..180.0,
            rot in 0usize..12,
        ) {
            let entries: Vec<(ZoneId, f64, f64)> = pts
                .iter()
                .enumerate()
                .map(|(i, (a, b))| (z(&format!("Z{i:02}")), *a, *b))
                .collect();
            let mut rotated = entries.clone();
            rotated.rotate_left(rot % entries.len());
            rotated.reverse();
            let loc = GeoLocation::new(lat, lon, None).unwrap();
            prop_assert_eq!(
                zone_for_location(&loc, &ZoneMap::new(entries).unwrap()),
                zone_for_location(&loc, &ZoneMap::new(rotated).unwrap())
            );
        }
    }
}
