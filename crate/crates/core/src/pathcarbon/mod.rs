//! Per-hop carbon reports for a path, and the periodic monitor that turns
//! them into a path-level time series.

mod monitor;
mod sink;
pub mod tables;

pub use monitor::{monitor_path, MonitorConfig, MonitorError, MonitorSummary};
pub use sink::{HopLine, JsonlReportSink, ReportLine, ReportSink, SinkError};
pub use tables::{write_table, Table};

use std::net::IpAddr;

use crate::carbon::{zone_for_location, CarbonError, CarbonProvider, ZoneMap};
use crate::geo::{geolocate, GeoError, GeoProvider};
use crate::model::{HopCarbon, HopPosition, ModelError, NetworkPath, PathCarbonReport, Timestamp};

#[derive(Debug, thiserror::Error)]
pub enum PathCarbonError {
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Carbon(#[from] CarbonError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The providers a measurement needs.
#[derive(Clone, Copy)]
pub struct PathResolver<'a> {
    pub geo: &'a dyn GeoProvider,
    pub carbon: &'a dyn CarbonProvider,
    /// Centroids for locations whose provider gave no zone.
    pub zones: Option<&'a ZoneMap>,
    /// Ask carbon providers for current values rather than history.
    pub live: bool,
}

impl<'a> PathResolver<'a> {
    pub fn new(geo: &'a dyn GeoProvider, carbon: &'a dyn CarbonProvider) -> Self {
        Self { geo, carbon, zones: None, live: false }
    }

    pub fn with_zones(mut self, zones: &'a ZoneMap) -> Self {
        self.zones = Some(zones);
        self
    }

    pub fn live(mut self, live: bool) -> Self {
        self.live = live;
        self
    }

    fn resolve(&self, position: HopPosition, ip: Option<IpAddr>, at: Timestamp) -> Result<HopCarbon, PathCarbonError> {
        let location = match ip {
            Some(ip) => geolocate(ip, self.geo)?,
            None => None,
        };
        let zone = location.as_ref().and_then(|loc| match self.zones {
            Some(map) => zone_for_location(loc, map),
            None => loc.zone().cloned(),
        });
        let intensity = match &zone {
            Some(z) => self.carbon.intensity(z, at, self.live)?,
            None => None,
        };
        Ok(HopCarbon { position, ip, location, zone, intensity })
    }
}

/// Geolocates and resolves every hop plus both end systems at instant `at`.
///
/// Unresponsive hops, non-public addresses and lookups that miss become
/// unknown entries; provider failures abort the measurement.
pub fn measure_path_carbon(
    path: &NetworkPath,
    at: Timestamp,
    resolver: &PathResolver<'_>,
) -> Result<PathCarbonReport, PathCarbonError> {
    let mut per_hop = Vec::with_capacity(path.hops().len() + 2);
    per_hop.push(resolver.resolve(HopPosition::Source, Some(path.source_host()), at)?);
    for hop in path.hops() {
        per_hop.push(resolver.resolve(HopPosition::Hop(hop.ttl()), hop.ip(), at)?);
    }
    per_hop.push(resolver.resolve(HopPosition::Destination, Some(path.destination_host()), at)?);
    Ok(PathCarbonReport::new(path.clone(), at, per_hop)?)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::carbon::TraceStore;
    use crate::geo::GeoDatabase;
    use crate::model::{CarbonSeries, Hop, ZoneId};
    use chrono::{TimeZone, Utc};

    pub fn t0() -> Timestamp {
        Utc.with_ymd_and_hms(2024, 4, 14, 0, 0, 0).unwrap()
    }

    pub fn ip(s: &str) -> IpAddr {
        s.parse().unwrap()
    }

    /// Source in Z50, routers in Z100/Z200/Z300, destination in Z350.
    pub fn geo() -> GeoDatabase {
        GeoDatabase::from_reader(
            "cidr,lat,lon,zone\n\
             192.0.2.0/24,42.9,-78.8,Z50\n\
             198.51.100.1/32,41.0,-80.0,Z100\n\
             198.51.100.2/32,39.0,-85.0,Z200\n\
             198.51.100.3/32,35.0,-92.0,Z300\n\
             203.0.113.0/24,30.3,-97.7,Z350\n"
                .as_bytes(),
            "fixture",
        )
        .unwrap()
    }

    pub fn traces() -> TraceStore {
        let mut store = TraceStore::new();
        for (z, v) in [("Z50", 50.0), ("Z100", 100.0), ("Z200", 200.0), ("Z300", 300.0), ("Z350", 350.0)] {
            store.insert(CarbonSeries::constant(ZoneId::new(z).unwrap(), t0(), v).unwrap());
        }
        store
    }

    /// Three routers; the destination itself never answers.
    pub fn path(second_hop: &str) -> NetworkPath {
        NetworkPath::new(
            ip("192.0.2.10"),
            ip("203.0.113.9"),
            vec![
                Hop::responsive(1, ip("198.51.100.1"), 3.0).unwrap(),
                Hop::responsive(2, ip(second_hop), 8.0).unwrap(),
                Hop::responsive(3, ip("198.51.100.3"), 15.0).unwrap(),
            ],
            t0(),
            false,
        )
        .unwrap()
    }
}
