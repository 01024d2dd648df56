//! TTL-limited path discovery.
//!
//! Packet I/O lives behind [`Prober`]; [`discover_path`] only decides which
//! TTLs to probe and how to reduce each TTL's probe answers to a single hop.

mod simulated;
#[cfg(feature = "raw-probe")]
mod raw;

pub use simulated::{SimulatedProber, Topology, TopologyEntry};
#[cfg(feature = "raw-probe")]
pub use raw::RawProber;

use std::net::IpAddr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::model::{Hop, ModelError, NetworkPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    #[default]
    Icmp,
    Udp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub max_ttl: u8,
    pub probes_per_ttl: u8,
    pub per_probe_timeout_ms: u64,
    pub probe_kind: ProbeKind,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { max_ttl: 30, probes_per_ttl: 3, per_probe_timeout_ms: 1000, probe_kind: ProbeKind::Icmp }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<(), DiscoveryError> {
        if self.max_ttl == 0 {
            return Err(DiscoveryError::InvalidConfig("max_ttl must be at least 1".into()));
        }
        if self.probes_per_ttl == 0 {
            return Err(DiscoveryError::InvalidConfig("probes_per_ttl must be at least 1".into()));
        }
        if self.per_probe_timeout_ms == 0 {
            return Err(DiscoveryError::InvalidConfig("per_probe_timeout_ms must be positive".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.per_probe_timeout_ms)
    }
}

/// Answer to a single probe. A timeout carries neither responder nor rtt.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResponse {
    pub ttl: u8,
    pub responder: Option<IpAddr>,
    pub rtt_ms: Option<f64>,
}

impl ProbeResponse {
    pub fn answered(ttl: u8, responder: IpAddr, rtt_ms: f64) -> Self {
        Self { ttl, responder: Some(responder), rtt_ms: Some(rtt_ms) }
    }

    pub fn timeout(ttl: u8) -> Self {
        Self { ttl, responder: None, rtt_ms: None }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProbeError {
    #[error("probe I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Debug, thiserror::Error)]
pub enum DiscoveryError {
    #[error("invalid probe config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub trait Prober: Send + Sync {
    /// Address of the probing host (the source end system).
    fn source(&self) -> IpAddr;

    /// Sends one probe with IP TTL `ttl` towards `destination` and waits for
    /// the answer or the configured timeout. `seq` distinguishes probes
    /// within a TTL round.
    fn probe(
        &self,
        destination: IpAddr,
        ttl: u8,
        seq: u16,
        config: &ProbeConfig,
    ) -> Result<ProbeResponse, ProbeError>;
}

impl<P: Prober + ?Sized> Prober for &P {
    fn source(&self) -> IpAddr {
        (**self).source()
    }

    fn probe(&self, d: IpAddr, ttl: u8, seq: u16, c: &ProbeConfig) -> Result<ProbeResponse, ProbeError> {
        (**self).probe(d, ttl, seq, c)
    }
}

/// Walks TTL 1, 2, ... until `destination` answers or `max_ttl` is spent.
///
/// Each TTL is probed `probes_per_ttl` times; the most frequent responder
/// wins (ties go to whichever answered first) and the hop rtt is the
/// minimum over that responder's probes. A path that never reaches the
/// destination is returned with `reached() == false`.
pub fn discover_path(
    destination: IpAddr,
    config: &ProbeConfig,
    prober: &dyn Prober,
    clock: &dyn Clock,
) -> Result<NetworkPath, DiscoveryError> {
    config.validate()?;
    let source = prober.source();
    let discovered_at = clock.now();
    if destination == source {
        return Ok(NetworkPath::new(source, destination, Vec::new(), discovered_at, true)?);
    }

    let mut hops = Vec::new();
    let mut reached = false;
    let mut seq: u16 = 0;
    for ttl in 1..=config.max_ttl {
        let mut answers = Vec::with_capacity(config.probes_per_ttl as usize);
        for _ in 0..config.probes_per_ttl {
            answers.push(prober.probe(destination, ttl, seq, config)?);
            seq = seq.wrapping_add(1);
        }
        let hop = reduce_round(ttl, &answers)?;
        let arrived = hop.ip() == Some(destination);
        hops.push(hop);
        if arrived {
            reached = true;
            break;
        }
    }
    Ok(NetworkPath::new(source, destination, hops, discovered_at, reached)?)
}

fn reduce_round(ttl: u8, answers: &[ProbeResponse]) -> Result<Hop, ModelError> {
    // (responder, votes, best rtt) in first-answer order
    let mut tally: Vec<(IpAddr, usize, f64)> = Vec::new();
    for a in answers {
        let (Some(ip), Some(rtt)) = (a.responder, a.rtt_ms) else {
            continue;
        };
        match tally.iter_mut().find(|(seen, _, _)| *seen == ip) {
            Some(entry) => {
                entry.1 += 1;
                entry.2 = entry.2.min(rtt);
            }
            None => tally.push((ip, 1, rtt)),
        }
    }
    let mut best: Option<&(IpAddr, usize, f64)> = None;
    for entry in &tally {
        if best.map_or(true, |b| entry.1 > b.1) {
            best = Some(entry);
        }
    }
    match best {
        Some(&(ip, _, rtt)) => Hop::responsive(ttl, ip, rtt),
        None => Hop::unresponsive(ttl),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::SimClock;
    use chrono::{TimeZone, Utc};
    use std::sync::Mutex;

    fn ip(s: &str) -> IpAddr {
        s.parse().unwrap()
    }

    fn clock() -> SimClock {
        SimClock::new(Utc.with_ymd_and_hms(2024, 4, 14, 0, 0, 0).unwrap())
    }

    /// Answers from a fixed script, cycling per TTL.
    struct Scripted {
        rounds: Vec<Vec<Option<(&'static str, f64)>>>,
        calls: Mutex<usize>,
    }

    impl Prober for Scripted {
        fn source(&self) -> IpAddr {
            ip("192.0.2.1")
        }

        fn probe(&self, _: IpAddr, ttl: u8, _: u16, _: &ProbeConfig) -> Result<ProbeResponse, ProbeError> {
            let mut calls = self.calls.lock().unwrap();
            let round = &self.rounds[ttl as usize - 1];
            let answer = round[*calls % round.len()];
            *calls += 1;
            Ok(match answer {
                Some((who, rtt)) => ProbeResponse::answered(ttl, ip(who), rtt),
                None => ProbeResponse::timeout(ttl),
            })
        }
    }

    #[test]
    fn majority_vote_and_min_rtt() {
        let p = Scripted {
            rounds: vec![
                vec![Some(("198.51.100.2", 9.0)), Some(("198.51.100.3", 1.0)), Some(("198.51.100.2", 4.0))],
                vec![Some(("198.51.100.9", 7.0)), None, Some(("198.51.100.9", 6.5))],
            ],
            calls: Mutex::new(0),
        };
        let path = discover_path(ip("198.51.100.9"), &ProbeConfig::default(), &p, &clock()).unwrap();
        assert!(path.reached());
        assert_eq!(path.hops().len(), 2);
        assert_eq!(path.hops()[0].ip(), Some(ip("198.51.100.2")));
        assert_eq!(path.hops()[0].rtt_ms(), Some(4.0));
        assert_eq!(path.hops()[1].rtt_ms(), Some(6.5));
    }

    #[test]
    fn vote_tie_goes_to_first_answer() {
        let p = Scripted {
            rounds: vec![vec![None, Some(("198.51.100.7", 3.0)), Some(("198.51.100.8", 1.0))]],
            calls: Mutex::new(0),
        };
        let cfg = ProbeConfig { max_ttl: 1, ..ProbeConfig::default() };
        let path = discover_path(ip("198.51.100.99"), &cfg, &p, &clock()).unwrap();
        assert!(!path.reached());
        assert_eq!(path.hops()[0].ip(), Some(ip("198.51.100.7")));
    }

    #[test]
    fn config_validation() {
        let p = SimulatedProber::new(ip("192.0.2.1"), Vec::new());
        for cfg in [
            ProbeConfig { max_ttl: 0, ..Default::default() },
            ProbeConfig { probes_per_ttl: 0, ..Default::default() },
            ProbeConfig { per_probe_timeout_ms: 0, ..Default::default() },
        ] {
            assert!(matches!(
                discover_path(ip("198.51.100.1"), &cfg, &p, &clock()),
                Err(DiscoveryError::InvalidConfig(_))
            ));
        }
    }

    struct Broken;

    impl Prober for Broken {
        fn source(&self) -> IpAddr {
            ip("192.0.2.1")
        }

        fn probe(&self, _: IpAddr, _: u8, _: u16, _: &ProbeConfig) -> Result<ProbeResponse, ProbeError> {
            Err(std::io::Error::new(std::io::ErrorKind::PermissionDenied, "no raw sockets").into())
        }
    }

    #[test]
    fn prober_failure_is_an_error() {
        let err = discover_path(ip("198.51.100.1"), &ProbeConfig::default(), &Broken, &clock());
        assert!(matches!(err, Err(DiscoveryError::Probe(_))));
    }
}
