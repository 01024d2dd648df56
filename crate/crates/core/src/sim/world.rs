use std::collections::{BTreeMap, BTreeSet};
use std::net::IpAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::carbon::{synth_series, SynthParams, TraceStore};
use crate::clock::SimClock;
use crate::discovery::{discover_path, ProbeConfig, SimulatedProber, TopologyEntry};
use crate::geo::{GeoError, GeoProvider};
use crate::model::{classify, CarbonSeries, GeoLocation, Hop, IpClass, NetworkPath, Timestamp, ZoneId};
use crate::pathcarbon::{measure_path_carbon, PathResolver};

pub const DEFAULT_TICK_SECS: u64 = 60;

fn default_tick() -> u64 {
    DEFAULT_TICK_SECS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockSpec {
    pub start: Timestamp,
    #[serde(default = "default_tick")]
    pub tick_seconds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostSpec {
    pub ip: IpAddr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub from: String,
    pub to: String,
    pub hops: Vec<TopologyEntry>,
}

/// Zone assignment of one address. Coordinates only matter for display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub zone: ZoneId,
    #[serde(default)]
    pub lat: f64,
    #[serde(default)]
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TraceSpec {
    /// A trace CSV (or directory of them), relative to the world file.
    File(PathBuf),
    Inline {
        zone: ZoneId,
        points: Vec<(Timestamp, f64)>,
        #[serde(default)]
        end: Option<Timestamp>,
    },
    Synth {
        zone: ZoneId,
        /// Defaults to the clock start.
        #[serde(default)]
        start: Option<Timestamp>,
        hours: u32,
        #[serde(flatten)]
        params: SynthParams,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtnSpec {
    pub id: String,
    pub host: String,
    pub nic_speed_bps: f64,
}

/// The world description file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub clock: ClockSpec,
    pub hosts: BTreeMap<String, HostSpec>,
    #[serde(default)]
    pub topologies: Vec<TopologySpec>,
    /// `null` marks an address known to have no zone.
    #[serde(default)]
    pub zones: BTreeMap<IpAddr, Option<ZoneSpec>>,
    #[serde(default)]
    pub traces: Vec<TraceSpec>,
    #[serde(default)]
    pub ftns: Vec<FtnSpec>,
}

#[derive(Debug, Clone)]
pub struct World {
    start: Timestamp,
    tick_seconds: u64,
    hosts: BTreeMap<String, IpAddr>,
    topologies: BTreeMap<(String, String), Vec<TopologyEntry>>,
    locations: BTreeMap<IpAddr, Option<GeoLocation>>,
    traces: TraceStore,
    ftns: BTreeMap<String, FtnSpec>,
}

impl World {
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Io { path: path.display().to_string(), source: e })?;
        let spec: WorldSpec = serde_json::from_str(&text)
            .map_err(|e| SimError::Parse { path: path.display().to_string(), message: e.to_string() })?;
        Self::build(spec, path.parent().unwrap_or(Path::new(".")))
    }

    /// Validates `spec`; trace file paths resolve against `base_dir`.
    pub fn build(spec: WorldSpec, base_dir: &Path) -> Result<Self, SimError> {
        let invalid = |m: String| Err(SimError::InvalidWorld(m));
        if spec.clock.tick_seconds == 0 {
            return invalid("clock.tick_seconds must be positive".into());
        }
        let hosts: BTreeMap<String, IpAddr> = spec.hosts.into_iter().map(|(k, v)| (k, v.ip)).collect();

        let mut locations = BTreeMap::new();
        for (ip, z) in spec.zones {
            let loc = match z {
                Some(z) => Some(GeoLocation::new(z.lat, z.lon, Some(z.zone))?),
                None => None,
            };
            locations.insert(ip, loc);
        }
        let needs_zone = |ip: &IpAddr| classify(*ip) == IpClass::Public && !locations.contains_key(ip);

        for (name, ip) in &hosts {
            if needs_zone(ip) {
                return invalid(format!("host {name} ({ip}) has no zone entry"));
            }
        }
        let mut topologies = BTreeMap::new();
        for t in spec.topologies {
            for end in [&t.from, &t.to] {
                if !hosts.contains_key(end) {
                    return Err(SimError::UnknownHost(end.clone()));
                }
            }
            if let Some(e) = t.hops.iter().find(|e| !e.drop && needs_zone(&e.ip)) {
                return invalid(format!("hop {} on {} -> {} has no zone entry", e.ip, t.from, t.to));
            }
            if t.hops.len() > u8::MAX as usize {
                return invalid(format!("topology {} -> {} is longer than {} hops", t.from, t.to, u8::MAX));
            }
            let key = (t.from.clone(), t.to.clone());
            if topologies.insert(key, t.hops).is_some() {
                return invalid(format!("duplicate topology {} -> {}", t.from, t.to));
            }
        }

        let mut traces = TraceStore::new();
        for t in spec.traces {
            let loaded = match t {
                TraceSpec::File(p) => {
                    let p = if p.is_absolute() { p } else { base_dir.join(p) };
                    TraceStore::load(&p)?.into_series().collect()
                }
                TraceSpec::Inline { zone, points, end } => vec![CarbonSeries::from_points(zone, points, end)?],
                TraceSpec::Synth { zone, start, hours, params } => {
                    vec![synth_series(zone, start.unwrap_or(spec.clock.start), hours, params)?]
                }
            };
            for s in loaded {
                if traces.get(s.zone()).is_some() {
                    return invalid(format!("zone {} has more than one trace", s.zone()));
                }
                traces.insert(s);
            }
        }

        let mut ftns = BTreeMap::new();
        for f in spec.ftns {
            if !hosts.contains_key(&f.host) {
                return Err(SimError::UnknownHost(f.host));
            }
            if !(f.nic_speed_bps > 0.0 && f.nic_speed_bps.is_finite()) {
                return invalid(format!("ftn {}: nic_speed_bps must be positive", f.id));
            }
            if ftns.contains_key(&f.id) {
                return invalid(format!("duplicate ftn {}", f.id));
            }
            ftns.insert(f.id.clone(), f);
        }

        Ok(Self {
            start: spec.clock.start,
            tick_seconds: spec.clock.tick_seconds,
            hosts,
            topologies,
            locations,
            traces,
            ftns,
        })
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    pub fn tick_seconds(&self) -> u64 {
        self.tick_seconds
    }

    pub fn traces(&self) -> &TraceStore {
        &self.traces
    }

    pub fn host_ip(&self, name: &str) -> Result<IpAddr, SimError> {
        self.hosts.get(name).copied().ok_or_else(|| SimError::UnknownHost(name.into()))
    }

    pub fn ftn(&self, id: &str) -> Result<&FtnSpec, SimError> {
        self.ftns.get(id).ok_or_else(|| SimError::UnknownFtn(id.into()))
    }

    pub fn ftn_ids(&self) -> impl Iterator<Item = &str> {
        self.ftns.keys().map(String::as_str)
    }

    pub fn resolver(&self) -> PathResolver<'_> {
        PathResolver::new(self, &self.traces)
    }

    /// Traceroute from one host to another over the world's topology table.
    pub fn discover(&self, from: &str, to: &str, at: Timestamp) -> Result<NetworkPath, SimError> {
        let (src, dst) = (self.host_ip(from)?, self.host_ip(to)?);
        if from == to {
            return Ok(NetworkPath::new(src, dst, Vec::new(), at, true)?);
        }
        let hops = self
            .topologies
            .get(&(from.to_string(), to.to_string()))
            .ok_or_else(|| SimError::MissingTopology { from: from.into(), to: to.into() })?;
        let config = ProbeConfig { max_ttl: hops.len().max(1) as u8, ..ProbeConfig::default() };
        let prober = SimulatedProber::new(src, hops.clone());
        Ok(discover_path(dst, &config, &prober, &SimClock::new(at))?)
    }

    /// The end-to-end path a transfer takes: source to the transfer node, then
    /// on to the destination. Legs between identical hosts are skipped.
    pub fn route(&self, source: &str, ftn: Option<&str>, destination: &str, at: Timestamp) -> Result<NetworkPath, SimError> {
        let mut stops = vec![source];
        if let Some(f) = ftn {
            stops.push(self.ftn(f)?.host.as_str());
        }
        stops.push(destination);
        stops.dedup();

        let (src, dst) = (self.host_ip(source)?, self.host_ip(destination)?);
        let mut hops = Vec::new();
        let mut reached = true;
        let mut offset: u8 = 0;
        for leg in stops.windows(2) {
            let path = self.discover(leg[0], leg[1], at)?;
            for h in path.hops() {
                let ttl = offset.checked_add(h.ttl()).ok_or_else(|| {
                    SimError::InvalidWorld(format!("route {} is longer than {} hops", stops.join(" -> "), u8::MAX))
                })?;
                hops.push(match (h.ip(), h.rtt_ms()) {
                    (Some(ip), Some(rtt)) => Hop::responsive(ttl, ip, rtt)?,
                    _ => Hop::unresponsive(ttl)?,
                });
            }
            offset = hops.last().map_or(offset, |h: &Hop| h.ttl());
            reached = path.reached();
        }
        Ok(NetworkPath::new(src, dst, hops, at, reached)?)
    }

    /// Path-average intensity of `path` as a step series, exact at every
    /// breakpoint of the traces involved. Coverage is the intersection of
    /// those traces. `None` when no hop has a trace.
    pub fn path_series(&self, path: &NetworkPath, label: &str) -> Result<Option<CarbonSeries>, SimError> {
        let ips = std::iter::once(path.source_host())
            .chain(path.hops().iter().filter_map(|h| h.ip()))
            .chain(std::iter::once(path.destination_host()));
        let zones: BTreeSet<&ZoneId> = ips
            .filter_map(|ip| self.locations.get(&ip).and_then(|l| l.as_ref()).and_then(|l| l.zone()))
            .collect();
        let series: Vec<&CarbonSeries> = zones.iter().filter_map(|z| self.traces.get(z)).collect();
        let Some(start) = series.iter().map(|s| s.start()).max() else {
            return Ok(None);
        };
        let end = series.iter().filter_map(|s| s.end()).min();
        if end.is_some_and(|e| e <= start) {
            return Err(SimError::NoCommonCoverage(label.into()));
        }
        let mut at: BTreeSet<Timestamp> = series
            .iter()
            .flat_map(|s| s.breakpoints())
            .filter(|t| *t > start && end.map_or(true, |e| *t < e))
            .collect();
        at.insert(start);

        let resolver = self.resolver();
        let mut points = Vec::with_capacity(at.len());
        for t in at {
            let report = measure_path_carbon(path, t, &resolver)?;
            let avg = report.average_intensity().ok_or_else(|| SimError::UnknownPathIntensity(label.into()))?;
            points.push((t, avg));
        }
        let zone = ZoneId::new(label).map_err(SimError::Model)?;
        Ok(Some(CarbonSeries::from_points(zone, points, end)?))
    }
}

impl GeoProvider for World {
    fn lookup(&self, ip: IpAddr) -> Result<Option<GeoLocation>, GeoError> {
        Ok(self.locations.get(&ip).cloned().flatten())
    }
}
