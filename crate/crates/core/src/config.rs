//! Tool configuration: which providers to use, probe and monitor defaults,
//! and where the store lives. Read from a JSON file named by `--config` or
//! by the `CARBONPATH_CONFIG` environment variable.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::carbon::{CarbonCache, CarbonError, CarbonProvider, ElectricityMapsProvider, TraceStore, ZoneMap};
use crate::clock::Clock;
use crate::discovery::{ProbeConfig, Prober, SimulatedProber, Topology};
use crate::geo::{load_geo_database, GeoCache, GeoError, GeoProvider, IpApiProvider};
use crate::http::HttpFetch;
use crate::metrics::{GeneratedSource, MetricsSource, Reading, ScriptedSource};
use crate::pathcarbon::MonitorConfig;

pub const CONFIG_ENV: &str = "CARBONPATH_CONFIG";
pub const DEFAULT_METRICS_SEED: u64 = 42;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("no config given (use --config or set {CONFIG_ENV})")]
    Missing,
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("config: {0}")]
    Invalid(String),
    #[error("config: {what} {path} does not exist")]
    MissingPath { what: &'static str, path: String },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnlineEndpoint {
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the API token.
    #[serde(default)]
    pub token_env: Option<String>,
}

/// Set exactly one of the two.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoSection {
    /// `cidr,lat,lon,zone` CSV.
    #[serde(default)]
    pub offline: Option<PathBuf>,
    #[serde(default)]
    pub online: Option<OnlineEndpoint>,
}

/// Set exactly one of the two.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarbonSection {
    /// Trace CSV or directory of them.
    #[serde(default)]
    pub traces: Option<PathBuf>,
    #[serde(default)]
    pub online: Option<OnlineEndpoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProberSection {
    /// JSON `{source, hops}` topology file.
    Simulated(PathBuf),
    /// Raw-socket probing; needs the `raw-probe` feature and privileges.
    Raw {
        #[serde(default)]
        source: Option<std::net::Ipv4Addr>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricsSection {
    Generated {
        #[serde(default = "default_seed")]
        seed: u64,
    },
    /// JSON array of readings replayed in order.
    Scripted(PathBuf),
    Procfs {
        #[serde(default)]
        interface: Option<String>,
    },
}

fn default_seed() -> u64 {
    DEFAULT_METRICS_SEED
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection::Generated { seed: DEFAULT_METRICS_SEED }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub geo: GeoSection,
    #[serde(default)]
    pub carbon: CarbonSection,
    /// `zone,lat,lon` centroids, used when the geo provider gives no zone.
    #[serde(default)]
    pub zonemap: Option<PathBuf>,
    #[serde(default)]
    pub prober: Option<ProberSection>,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub store_dir: Option<PathBuf>,
}

impl Config {
    /// `flag` wins over the environment variable.
    pub fn locate(flag: Option<&Path>) -> Result<PathBuf, ConfigError> {
        match flag {
            Some(p) => Ok(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV).map(PathBuf::from).ok_or(ConfigError::Missing),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), source: e })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")), &path.display().to_string())
    }

    /// Parses, resolves relative paths against `base_dir` and validates.
    pub fn parse(text: &str, base_dir: &Path, origin: &str) -> Result<Self, ConfigError> {
        let mut c: Config = serde_json::from_str(text)
            .map_err(|e| ConfigError::Parse { path: origin.into(), message: e.to_string() })?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        c.geo.offline.iter_mut().for_each(resolve);
        c.carbon.traces.iter_mut().for_each(resolve);
        c.zonemap.iter_mut().for_each(resolve);
        c.store_dir.iter_mut().for_each(resolve);
        match &mut c.prober {
            Some(ProberSection::Simulated(p)) => resolve(p),
            _ => {}
        }
        if let MetricsSection::Scripted(p) = &mut c.metrics {
            resolve(p);
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let exactly_one = |kind: &str, a: bool, b: bool| match (a, b) {
            (true, false) | (false, true) => Ok(()),
            (false, false) => Err(ConfigError::Invalid(format!("no {kind} provider configured"))),
            (true, true) => Err(ConfigError::Invalid(format!("both offline and online {kind} providers configured"))),
        };
        exactly_one("geo", self.geo.offline.is_some(), self.geo.online.is_some())?;
        exactly_one("carbon", self.carbon.traces.is_some(), self.carbon.online.is_some())?;
        if self.geo.online.is_some() && self.zonemap.is_none() {
            return Err(ConfigError::Invalid("the online geo provider returns no zones; set zonemap".into()));
        }
        if let Some(online) = &self.carbon.online {
            if online.token_env.as_deref().is_some_and(str::is_empty) {
                return Err(ConfigError::Invalid("carbon.online.token_env is empty".into()));
            }
        }
        let exists = |what, p: &Option<PathBuf>| match p {
            Some(p) if !p.exists() => Err(ConfigError::MissingPath { what, path: p.display().to_string() }),
            _ => Ok(()),
        };
        exists("geo database", &self.geo.offline)?;
        exists("trace path", &self.carbon.traces)?;
        exists("zone map", &self.zonemap)?;
        if let Some(ProberSection::Simulated(p)) = &self.prober {
            exists("topology", &Some(p.clone()))?;
        }
        if let MetricsSection::Scripted(p) = &self.metrics {
            exists("metrics script", &Some(p.clone()))?;
        }
        self.probe.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.monitor.interval_secs == 0 {
            return Err(ConfigError::Invalid("monitor.interval_secs must be positive".into()));
        }
        Ok(())
    }

    /// The configured geolocation provider behind a cache.
    pub fn geo_provider(&self, clock: Arc<dyn Clock>) -> Result<Box<dyn GeoProvider>, GeoError> {
        if let Some(path) = &self.geo.offline {
            return Ok(Box::new(load_geo_database(path)?));
        }
        let endpoint = self
            .geo
            .online
            .as_ref()
            .and_then(|o| o.endpoint.clone())
            .unwrap_or_else(|| IpApiProvider::<HttpFetch>::DEFAULT_ENDPOINT.into());
        Ok(Box::new(GeoCache::new(IpApiProvider::new(endpoint, HttpFetch::new()), clock)))
    }

    pub fn carbon_provider(&self, clock: Arc<dyn Clock>) -> Result<Box<dyn CarbonProvider>, CarbonError> {
        if let Some(path) = &self.carbon.traces {
            return Ok(Box::new(TraceStore::load(path)?));
        }
        let online = self.carbon.online.clone().unwrap_or_default();
        let endpoint = online
            .endpoint
            .unwrap_or_else(|| ElectricityMapsProvider::<HttpFetch>::DEFAULT_ENDPOINT.into());
        let live = ElectricityMapsProvider::new(endpoint, online.token_env, HttpFetch::new());
        Ok(Box::new(CarbonCache::new(live, clock)))
    }

    pub fn zone_map(&self) -> Result<Option<ZoneMap>, CarbonError> {
        self.zonemap.as_deref().map(ZoneMap::load).transpose()
    }

    pub fn prober(&self) -> Result<Box<dyn Prober>, ConfigError> {
        match &self.prober {
            None => Err(ConfigError::Invalid("no prober configured".into())),
            Some(ProberSection::Simulated(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::Io { path: path.display().to_string(), source: e })?;
                let topology: Topology = serde_json::from_str(&text)
                    .map_err(|e| ConfigError::Parse { path: path.display().to_string(), message: e.to_string() })?;
                Ok(Box::new(SimulatedProber::from_topology(topology)))
            }
            #[cfg(all(feature = "raw-probe", unix))]
            Some(ProberSection::Raw { source }) => crate::discovery::RawProber::new(*source)
                .map(|p| Box::new(p) as Box<dyn Prober>)
                .map_err(|e| ConfigError::Invalid(e.to_string())),
            #[cfg(not(all(feature = "raw-probe", unix)))]
            Some(ProberSection::Raw { .. }) => {
                Err(ConfigError::Invalid("raw probing needs a build with the raw-probe feature".into()))
            }
        }
    }

    /// `seed` overrides a configured generator seed.
    pub fn metrics_source(&self, seed: Option<u64>) -> Result<Box<dyn MetricsSource>, ConfigError> {
        match &self.metrics {
            MetricsSection::Generated { seed: s } => Ok(Box::new(GeneratedSource::new(seed.unwrap_or(*s)))),
            MetricsSection::Scripted(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::Io { path: path.display().to_string(), source: e })?;
                let readings: Vec<Reading> = serde_json::from_str(&text)
                    .map_err(|e| ConfigError::Parse { path: path.display().to_string(), message: e.to_string() })?;
                Ok(Box::new(ScriptedSource::new(readings)))
            }
            #[cfg(target_os = "linux")]
            MetricsSection::Procfs { interface } => Ok(Box::new(crate::metrics::ProcSource::new(interface.clone()))),
            #[cfg(not(target_os = "linux"))]
            MetricsSection::Procfs { .. } => Err(ConfigError::Invalid("procfs metrics need Linux".into())),
        }
    }
}
