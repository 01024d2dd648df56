use std::net::IpAddr;

use serde::{Deserialize, Serialize};

use super::{ProbeConfig, ProbeError, ProbeResponse, Prober};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyEntry {
    pub ip: IpAddr,
    #[serde(default)]
    pub rtt_ms: f64,
    /// The router silently drops probes that expire at it.
    #[serde(default)]
    pub drop: bool,
}

/// Hop table for a simulated route; entry `k - 1` answers TTL-`k` probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub source: IpAddr,
    pub hops: Vec<TopologyEntry>,
}

/// Deterministic prober backed by a [`Topology`].
#[derive(Debug, Clone)]
pub struct SimulatedProber {
    topology: Topology,
}

impl SimulatedProber {
    pub fn new(source: IpAddr, hops: Vec<TopologyEntry>) -> Self {
        Self { topology: Topology { source, hops } }
    }

    pub fn from_topology(topology: Topology) -> Self {
        Self { topology }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }
}

impl Prober for SimulatedProber {
    fn source(&self) -> IpAddr {
        self.topology.source
    }

    fn probe(&self, _destination: IpAddr, ttl: u8, _seq: u16, _: &ProbeConfig) -> Result<ProbeResponse, ProbeError> {
        let entry = (ttl as usize).checked_sub(1).and_then(|i| self.topology.hops.get(i));
        Ok(match entry {
            Some(e) if !e.drop => ProbeResponse::answered(ttl, e.ip, e.rtt_ms),
            _ => ProbeResponse::timeout(ttl),
        })
    }
}
