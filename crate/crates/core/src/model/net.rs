use std::net::IpAddr;

use serde::{Deserialize, Serialize};

use super::{ModelError, Timestamp, ZoneId};

/// Routing class of an address. Only `Public` addresses are worth geolocating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IpClass {
    Public,
    Private,
    Reserved,
    Loopback,
}

/// Classifies an address by its block: RFC 1918 and RFC 4193 ranges are
/// private; loopback blocks are loopback; unspecified, link-local, shared
/// (100.64/10), multicast, broadcast and the 240/4 block are reserved.
/// Documentation ranges are deliberately left public so fixtures can use them.
pub fn classify(ip: IpAddr) -> IpClass {
    match ip {
        IpAddr::V4(v4) => {
            let o = v4.octets();
            if v4.is_loopback() {
                IpClass::Loopback
            } else if v4.is_private() {
                IpClass::Private
            } else if v4.is_unspecified()
                || o[0] == 0
                || v4.is_link_local()
                || v4.is_multicast()
                || v4.is_broadcast()
                || o[0] >= 240
                || (o[0] == 100 && (o[1] & 0xc0) == 64)
            {
                IpClass::Reserved
            } else {
                IpClass::Public
            }
        }
        IpAddr::V6(v6) => {
            if let Some(v4) = v6.to_ipv4_mapped() {
                return classify(IpAddr::V4(v4));
            }
            let seg0 = v6.segments()[0];
            if v6.is_loopback() {
                IpClass::Loopback
            } else if (seg0 & 0xfe00) == 0xfc00 {
                IpClass::Private
            } else if v6.is_unspecified() || (seg0 & 0xffc0) == 0xfe80 || v6.is_multicast() {
                IpClass::Reserved
            } else {
                IpClass::Public
            }
        }
    }
}

/// One TTL step of a discovered path. `ip` and `rtt_ms` are both present for a
/// responsive hop and both absent for an unresponsive one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHop")]
pub struct Hop {
    ttl: u8,
    ip: Option<IpAddr>,
    rtt_ms: Option<f64>,
}

#[derive(Deserialize)]
struct RawHop {
    ttl: u8,
    ip: Option<IpAddr>,
    rtt_ms: Option<f64>,
}

impl TryFrom<RawHop> for Hop {
    type Error = ModelError;

    fn try_from(raw: RawHop) -> Result<Self, Self::Error> {
        match (raw.ip, raw.rtt_ms) {
            (Some(ip), Some(rtt)) => Hop::responsive(raw.ttl, ip, rtt),
            (None, None) => Hop::unresponsive(raw.ttl),
            _ => Err(ModelError::InvalidHop(format!(
                "ttl {}: ip and rtt_ms must be both present or both absent",
                raw.ttl
            ))),
        }
    }
}

impl Hop {
    pub fn responsive(ttl: u8, ip: IpAddr, rtt_ms: f64) -> Result<Self, ModelError> {
        if ttl == 0 {
            return Err(ModelError::InvalidHop("ttl must be at least 1".into()));
        }
        if !(rtt_ms >= 0.0 && rtt_ms.is_finite()) {
            return Err(ModelError::InvalidHop(format!("ttl {ttl}: bad rtt {rtt_ms}")));
        }
        Ok(Self { ttl, ip: Some(ip), rtt_ms: Some(rtt_ms) })
    }

    pub fn unresponsive(ttl: u8) -> Result<Self, ModelError> {
        if ttl == 0 {
            return Err(ModelError::InvalidHop("ttl must be at least 1".into()));
        }
        Ok(Self { ttl, ip: None, rtt_ms: None })
    }

    pub fn ttl(&self) -> u8 {
        self.ttl
    }

    pub fn ip(&self) -> Option<IpAddr> {
        self.ip
    }

    pub fn rtt_ms(&self) -> Option<f64> {
        self.rtt_ms
    }

    pub fn is_responsive(&self) -> bool {
        self.ip.is_some()
    }
}

/// Hop-by-hop route from the probing host to a destination.
///
/// `reached` is false when the destination never answered within the probe
/// budget; such partial paths are still valid input for carbon measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPath")]
pub struct NetworkPath {
    source_host: IpAddr,
    destination_host: IpAddr,
    hops: Vec<Hop>,
    discovered_at: Timestamp,
    reached: bool,
}

#[derive(Deserialize)]
struct RawPath {
    source_host: IpAddr,
    destination_host: IpAddr,
    hops: Vec<Hop>,
    discovered_at: Timestamp,
    reached: bool,
}

impl TryFrom<RawPath> for NetworkPath {
    type Error = ModelError;

    fn try_from(r: RawPath) -> Result<Self, Self::Error> {
        NetworkPath::new(r.source_host, r.destination_host, r.hops, r.discovered_at, r.reached)
    }
}

impl NetworkPath {
    pub fn new(
        source_host: IpAddr,
        destination_host: IpAddr,
        hops: Vec<Hop>,
        discovered_at: Timestamp,
        reached: bool,
    ) -> Result<Self, ModelError> {
        if hops.windows(2).any(|w| w[0].ttl >= w[1].ttl) {
            return Err(ModelError::InvalidPath("hop ttls must be strictly increasing".into()));
        }
        if reached {
            let last = hops.iter().rev().find_map(|h| h.ip);
            if let Some(last) = last {
                if last != destination_host {
                    return Err(ModelError::InvalidPath(format!(
                        "path marked reached but last responder {last} is not {destination_host}"
                    )));
                }
            }
        }
        Ok(Self { source_host, destination_host, hops, discovered_at, reached })
    }

    pub fn source_host(&self) -> IpAddr {
        self.source_host
    }

    pub fn destination_host(&self) -> IpAddr {
        self.destination_host
    }

    pub fn hops(&self) -> &[Hop] {
        &self.hops
    }

    pub fn discovered_at(&self) -> Timestamp {
        self.discovered_at
    }

    pub fn reached(&self) -> bool {
        self.reached
    }
}

/// Coordinates of a host plus, when the provider knows it, its grid zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLocation")]
pub struct GeoLocation {
    latitude: f64,
    longitude: f64,
    zone: Option<ZoneId>,
}

#[derive(Deserialize)]
struct RawLocation {
    latitude: f64,
    longitude: f64,
    zone: Option<ZoneId>,
}

impl TryFrom<RawLocation> for GeoLocation {
    type Error = ModelError;

    fn try_from(r: RawLocation) -> Result<Self, Self::Error> {
        GeoLocation::new(r.latitude, r.longitude, r.zone)
    }
}

impl GeoLocation {
    pub fn new(latitude: f64, longitude: f64, zone: Option<ZoneId>) -> Result<Self, ModelError> {
        if !(-90.0..=90.0).contains(&latitude) {
            return Err(ModelError::InvalidLocation(format!("latitude {latitude} out of range")));
        }
        if !(-180.0..=180.0).contains(&longitude) {
            return Err(ModelError::InvalidLocation(format!("longitude {longitude} out of range")));
        }
        Ok(Self { latitude, longitude, zone })
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }

    pub fn zone(&self) -> Option<&ZoneId> {
        self.zone.as_ref()
    }

    pub fn with_zone(mut self, zone: ZoneId) -> Self {
        self.zone = Some(zone);
        self
    }
}
