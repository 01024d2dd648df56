//! Command-line front end. Standard output carries only JSON or CSV;
//! diagnostics go to standard error as single lines.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::carbon::{CarbonError, TraceStore};
use crate::clock::{Clock, SimClock, SystemClock};
use crate::config::{Config, ConfigError, CONFIG_ENV, DEFAULT_METRICS_SEED};
use crate::discovery::{discover_path, DiscoveryError};
use crate::geo::GeoError;
use crate::metrics::{emit, GeneratedSource, MetricsSource, SampleError, Sampler};
use crate::model::{PathCarbonReport, Timestamp, TransferJob, ZoneId};
use crate::pathcarbon::{
    measure_path_carbon, monitor_path, write_table, JsonlReportSink, MonitorConfig, MonitorError, PathCarbonError,
    PathResolver, ReportLine, ReportSink, SinkError, Table,
};
use crate::scheduler::{
    plan_overlay_candidates, schedule_space_shift_candidates, schedule_time_shift, Candidate, Decision,
    DecisionRecord, SchedulerError, DEFAULT_STEP_SECS,
};
use crate::sim::{run_experiment, write_steps_csv, Scenario, SimError, TraceSpec, World, WorldSpec};
use crate::store::{ScanFilter, Store, StoreError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_PROVIDER: u8 = 2;
pub const EXIT_DATA: u8 = 3;

const AFTER_HELP: &str = "\
Exit codes: 0 success, 1 usage error, 2 provider error, 3 data error.

The config file is JSON; pass it with --config or set CARBONPATH_CONFIG.
Defaults: probe max_ttl 30, 3 probes per TTL, 1000 ms timeout; monitor
interval 3600 s; schedule step 300 s; simulation tick 60 s; metrics seed 42.
Provider API tokens are read from the environment variable named in the
config and are never written anywhere.";

#[derive(Debug, Parser)]
#[command(name = "carbonpath", version, about = "Carbon intensity of network paths and carbon-aware transfer scheduling")]
#[command(after_help = AFTER_HELP)]
pub struct Cli {
    /// JSON config file (falls back to $CARBONPATH_CONFIG)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    Time,
    Space,
    Overlay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discover the hop path to DEST and print it as JSON
    Trace { dest: String },
    /// Measure the carbon intensity of the path to DEST
    CarbonPath {
        dest: String,
        /// Historical instant (RFC 3339); default is now, using live values
        #[arg(long)]
        at: Option<Timestamp>,
    },
    /// Measure the path to DEST every interval, one JSON line per tick
    Monitor {
        dest: String,
        /// Seconds between ticks (default from config, else 3600)
        #[arg(long)]
        interval: Option<u64>,
        /// Total seconds to run (default from config, else until interrupted)
        #[arg(long)]
        duration: Option<u64>,
        /// Run on a simulated clock from --at against recorded traces
        #[arg(long, requires = "at")]
        replay: bool,
        /// Replay start (RFC 3339)
        #[arg(long, requires = "replay")]
        at: Option<Timestamp>,
    },
    /// Decide when, from where or through which node to run a transfer
    Schedule {
        /// JSON request: the job plus the evidence the policy needs
        request: PathBuf,
        #[arg(long, value_enum)]
        policy: Policy,
        /// Store directory for the decision (default from config)
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Run a scheduling experiment in a simulated world
    Simulate {
        world: PathBuf,
        scenario: PathBuf,
        /// Override the seed of every synthetic trace in the world
        #[arg(long)]
        seed: Option<u64>,
        /// Override the world's tick length in seconds
        #[arg(long)]
        tick: Option<u64>,
        /// Also write the per-step time series as CSV to this file
        #[arg(long, value_name = "PATH")]
        steps_csv: Option<PathBuf>,
    },
    /// Sample host, network and transfer metrics as JSON lines
    Metrics {
        #[arg(long, conflicts_with = "watch", required_unless_present = "watch")]
        once: bool,
        #[arg(long)]
        watch: bool,
        /// Number of samples with --watch (default unlimited)
        #[arg(long, requires = "watch")]
        count: Option<u64>,
        /// Seconds between samples with --watch
        #[arg(long, default_value_t = 1)]
        interval: u64,
        /// Seed for the generated source (default 42)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Export stored path reports as plot-ready tables
    Report {
        store: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long, value_enum, default_value = "per-tick")]
        table: Table,
        /// Only reports at or after this instant
        #[arg(long)]
        from: Option<Timestamp>,
        /// Only reports before this instant
        #[arg(long)]
        to: Option<Timestamp>,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(m: impl ToString) -> Self {
        Self { code: EXIT_USAGE, message: m.to_string() }
    }
    pub fn provider(m: impl ToString) -> Self {
        Self { code: EXIT_PROVIDER, message: m.to_string() }
    }
    pub fn data(m: impl ToString) -> Self {
        Self { code: EXIT_DATA, message: m.to_string() }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Missing => Self::usage(e),
            _ => Self::data(e),
        }
    }
}

impl From<GeoError> for CliError {
    fn from(e: GeoError) -> Self {
        match e {
            GeoError::Provider(_) | GeoError::Fetch(_) => Self::provider(e),
            _ => Self::data(e),
        }
    }
}

impl From<CarbonError> for CliError {
    fn from(e: CarbonError) -> Self {
        match e {
            CarbonError::Provider(_) | CarbonError::Fetch(_) => Self::provider(e),
            _ => Self::data(e),
        }
    }
}

impl From<DiscoveryError> for CliError {
    fn from(e: DiscoveryError) -> Self {
        match e {
            DiscoveryError::Probe(_) => Self::provider(e),
            _ => Self::data(e),
        }
    }
}

impl From<PathCarbonError> for CliError {
    fn from(e: PathCarbonError) -> Self {
        match e {
            PathCarbonError::Geo(g) => g.into(),
            PathCarbonError::Carbon(c) => c.into(),
            PathCarbonError::Model(m) => Self::data(m),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Carbon(c) => c.into(),
            SimError::Discovery(d) => d.into(),
            SimError::PathCarbon(p) => p.into(),
            _ => Self::data(e),
        }
    }
}

impl From<SampleError> for CliError {
    fn from(e: SampleError) -> Self {
        match e {
            SampleError::Source(_) => Self::provider(e),
            _ => Self::data(e),
        }
    }
}

macro_rules! data_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::data(e)
            }
        }
    )*};
}

impl CliError {
    /// A reader closing our stdout early is not an error.
    fn closed_pipe() -> Self {
        Self { code: EXIT_OK, message: String::new() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        match e.kind() {
            std::io::ErrorKind::BrokenPipe => Self::closed_pipe(),
            _ => Self::data(e),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        match e.io_error_kind() {
            Some(std::io::ErrorKind::BrokenPipe) => Self::closed_pipe(),
            _ => Self::data(e),
        }
    }
}

data_errors!(
    csv::Error,
    StoreError,
    SchedulerError,
    MonitorError,
    SinkError,
    crate::metrics::SinkError,
    crate::model::ModelError
);

/// Logs go to standard error, filtered by `RUST_LOG` (default `warn`).
pub fn init_logging() {
    use tracing_subscriber::EnvFilter;
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) if e.message.is_empty() => e.code,
        Err(e) => {
            let line = e.message.lines().map(str::trim).collect::<Vec<_>>().join("; ");
            let _ = writeln!(err, "carbonpath: {line}");
            e.code
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let config_flag = cli.config;
    let config = || -> Result<Config, CliError> { Ok(Config::load(&Config::locate(config_flag.as_deref())?)?) };
    // optional config: only when one is named
    let maybe_config = || -> Result<Option<Config>, CliError> {
        if config_flag.is_some() || std::env::var_os(CONFIG_ENV).is_some() {
            config().map(Some)
        } else {
            Ok(None)
        }
    };

    match cli.command {
        Command::Trace { dest } => {
            let cfg = config()?;
            let prober = cfg.prober()?;
            let path = discover_path(resolve_dest(&dest)?, &cfg.probe, &*prober, &SystemClock)?;
            write_json(out, &path)
        }
        Command::CarbonPath { dest, at } => {
            let cfg = config()?;
            let clock: Arc<dyn Clock> = Arc::new(SystemClock);
            let geo = cfg.geo_provider(clock.clone())?;
            let carbon = cfg.carbon_provider(clock.clone())?;
            let zones = cfg.zone_map()?;
            let mut resolver = PathResolver::new(&*geo, &*carbon).live(at.is_none());
            if let Some(z) = &zones {
                resolver = resolver.with_zones(z);
            }
            let prober = cfg.prober()?;
            let path = discover_path(resolve_dest(&dest)?, &cfg.probe, &*prober, &*clock)?;
            let report = measure_path_carbon(&path, at.unwrap_or_else(|| clock.now()), &resolver)?;
            if let Some(dir) = &cfg.store_dir {
                Store::open(dir)?.append(&report)?;
            }
            write_json(out, &report)
        }
        Command::Monitor { dest, interval, duration, replay, at } => {
            let cfg = config()?;
            let monitor = MonitorConfig {
                interval_secs: interval.unwrap_or(cfg.monitor.interval_secs),
                duration_secs: duration.or(cfg.monitor.duration_secs),
            };
            let clock: Arc<dyn Clock> = match (replay, at) {
                (true, Some(start)) => {
                    if monitor.duration_secs.is_none() {
                        return Err(CliError::usage("--replay needs a --duration"));
                    }
                    Arc::new(SimClock::new(start))
                }
                _ => Arc::new(SystemClock),
            };
            let geo = cfg.geo_provider(clock.clone())?;
            let carbon = cfg.carbon_provider(clock.clone())?;
            let zones = cfg.zone_map()?;
            let mut resolver = PathResolver::new(&*geo, &*carbon).live(!replay);
            if let Some(z) = &zones {
                resolver = resolver.with_zones(z);
            }
            let prober = cfg.prober()?;
            let store = cfg.store_dir.as_deref().map(Store::open).transpose()?;
            let mut sink = TeeSink { out: JsonlReportSink::new(out), store };
            let summary = monitor_path(resolve_dest(&dest)?, &cfg.probe, &monitor, &resolver, &*prober, &*clock, &mut sink)?;
            tracing::info!(ticks = summary.ticks, emitted = summary.emitted, skipped = summary.skipped, "monitor finished");
            Ok(())
        }
        Command::Schedule { request, policy, store } => {
            let decision = schedule(&request, policy)?;
            let store_dir = match store {
                Some(s) => Some(s),
                None => maybe_config()?.and_then(|c| c.store_dir),
            };
            if let Some(dir) = store_dir {
                let record = DecisionRecord { decided_at: SystemClock.now(), decision: decision.clone() };
                Store::open(dir)?.append(&record)?;
            }
            write_json(out, &decision)
        }
        Command::Simulate { world, scenario, seed, tick, steps_csv } => {
            let mut spec: WorldSpec = read_json(&world)?;
            if let Some(seed) = seed {
                for t in &mut spec.traces {
                    if let TraceSpec::Synth { params, .. } = t {
                        params.seed = seed;
                    }
                }
            }
            if let Some(tick) = tick {
                spec.clock.tick_seconds = tick;
            }
            let world = World::build(spec, world.parent().unwrap_or(Path::new(".")))?;
            let scenario: Scenario = read_json(&scenario)?;
            let report = run_experiment(&world, &scenario)?;
            if let Some(path) = steps_csv {
                let file = std::fs::File::create(&path)
                    .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
                write_steps_csv(&report, file)?;
            }
            write_json(out, &report)
        }
        Command::Metrics { once, watch: _, count, interval, seed } => {
            let cfg = maybe_config()?;
            let source: Box<dyn MetricsSource> = match &cfg {
                Some(c) => c.metrics_source(seed)?,
                None => Box::new(GeneratedSource::new(seed.unwrap_or(DEFAULT_METRICS_SEED))),
            };
            let store = cfg.as_ref().and_then(|c| c.store_dir.as_deref()).map(Store::open).transpose()?;
            let mut sampler = Sampler::new(source);
            let clock = SystemClock;
            let limit = if once { Some(1) } else { count };
            let start = clock.now();
            let mut k: u64 = 0;
            while limit.map_or(true, |n| k < n) {
                if k > 0 {
                    clock.sleep_until(start + chrono::Duration::seconds((k.saturating_mul(interval)) as i64));
                }
                k += 1;
                match sampler.sample(&clock) {
                    Ok(snap) => {
                        emit(&snap, out)?;
                        if let Some(s) = &store {
                            s.append(&snap)?;
                        }
                    }
                    Err(SampleError::Invariant(m)) if !once => {
                        let _ = writeln!(err, "carbonpath: warning: skipped sample: {m}");
                    }
                    Err(SampleError::Exhausted) if k > 1 => break,
                    Err(e) => return Err(e.into()),
                }
            }
            Ok(())
        }
        Command::Report { store, format: Format::Csv, table, from, to } => {
            if !store.is_dir() {
                return Err(CliError::data(format!("store {} does not exist", store.display())));
            }
            let scan = Store::open(&store)?.scan::<PathCarbonReport>(&ScanFilter { from, to, job_uuid: None })?;
            for w in &scan.warnings {
                let _ = writeln!(err, "carbonpath: warning: {w}");
            }
            let lines: Vec<ReportLine> = scan.records.iter().map(ReportLine::from).collect();
            write_table(table, &lines, out)?;
            Ok(())
        }
    }
}

struct TeeSink<W> {
    out: JsonlReportSink<W>,
    store: Option<Store>,
}

impl<W: Write> ReportSink for TeeSink<W> {
    fn append(&mut self, report: &PathCarbonReport) -> Result<(), SinkError> {
        self.out.append(report)?;
        if let Some(s) = &self.store {
            s.append(report).map_err(|e| SinkError::Io(std::io::Error::other(e.to_string())))?;
        }
        Ok(())
    }
}

fn write_json<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn resolve_dest(dest: &str) -> Result<IpAddr, CliError> {
    if let Ok(ip) = dest.parse() {
        return Ok(ip);
    }
    (dest, 0)
        .to_socket_addrs()
        .map_err(|e| CliError::provider(format!("resolving {dest}: {e}")))?
        .next()
        .map(|a| a.ip())
        .ok_or_else(|| CliError::provider(format!("{dest} has no address")))
}

/// Input of the `schedule` command. Paths are relative to the request file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleRequest {
    pub job: TransferJob,
    /// Time policy: trace CSV holding the path (or zone) series.
    #[serde(default)]
    pub trace: Option<PathBuf>,
    /// Series to use from `trace`; optional when it holds only one.
    #[serde(default)]
    pub zone: Option<ZoneId>,
    #[serde(default)]
    pub step_seconds: Option<u64>,
    /// Space and overlay policies: scored options given inline...
    #[serde(default)]
    pub candidates: Vec<Candidate>,
    /// ...or as path reports written by `carbon-path`, keyed by option id.
    #[serde(default)]
    pub reports: BTreeMap<String, PathBuf>,
    /// Overlay policy: migration threshold.
    #[serde(default)]
    pub threshold: Option<f64>,
}

fn schedule(path: &Path, policy: Policy) -> Result<Decision, CliError> {
    let req: ScheduleRequest = read_json(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    match policy {
        Policy::Time => {
            let trace = req.trace.ok_or_else(|| CliError::data("time policy needs a trace"))?;
            let traces = TraceStore::load(&base.join(trace))?;
            let zone = match req.zone {
                Some(z) => z,
                None if traces.len() == 1 => traces.zones().next().cloned().expect("one zone"),
                None => return Err(CliError::data("trace holds several zones; name one with zone")),
            };
            let series = traces.get(&zone).ok_or_else(|| CliError::data(format!("trace has no zone {zone}")))?;
            let d = schedule_time_shift(&req.job, series, req.step_seconds.unwrap_or(DEFAULT_STEP_SECS))?;
            Ok(Decision::TimeShift(d))
        }
        Policy::Space | Policy::Overlay => {
            let mut candidates = req.candidates;
            for (id, file) in &req.reports {
                let report: PathCarbonReport = read_json(&base.join(file))?;
                candidates.push(Candidate::from_report(id.clone(), &report));
            }
            if policy == Policy::Space {
                Ok(Decision::SpaceShift(schedule_space_shift_candidates(&req.job, candidates)?))
            } else {
                Ok(Decision::Overlay(plan_overlay_candidates(&req.job, candidates, req.threshold)?))
            }
        }
    }
}
