use std::collections::HashMap;
use std::net::IpAddr;
use std::path::Path;

use ipnet::IpNet;
use serde::Deserialize;

use super::{GeoError, GeoProvider};
use crate::model::{GeoLocation, ZoneId};

#[derive(Debug, Clone, PartialEq)]
pub struct GeoRecord {
    pub cidr: IpNet,
    pub location: GeoLocation,
}

#[derive(Deserialize)]
struct Row {
    cidr: String,
    lat: f64,
    lon: f64,
    zone: Option<String>,
}

/// Longest-prefix-match index over CIDR blocks.
///
/// Blocks are bucketed by prefix length; a lookup masks the address at each
/// length, most specific first, so it costs at most 33 (IPv4) or 129 (IPv6)
/// hash probes.
#[derive(Debug, Default, Clone)]
pub struct GeoDatabase {
    v4: Vec<(u8, HashMap<u32, GeoLocation>)>,
    v6: Vec<(u8, HashMap<u128, GeoLocation>)>,
    len: usize,
}

fn mask4(addr: u32, len: u8) -> u32 {
    if len == 0 { 0 } else { addr & (u32::MAX << (32 - len as u32)) }
}

fn mask6(addr: u128, len: u8) -> u128 {
    if len == 0 { 0 } else { addr & (u128::MAX << (128 - len as u32)) }
}

fn bucket<K>(buckets: &mut Vec<(u8, HashMap<K, GeoLocation>)>, len: u8) -> &mut HashMap<K, GeoLocation> {
    let pos = match buckets.binary_search_by(|(l, _)| len.cmp(l)) {
        Ok(pos) => pos,
        Err(pos) => {
            buckets.insert(pos, (len, HashMap::new()));
            pos
        }
    };
    &mut buckets[pos].1
}

impl GeoDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a block; host bits are ignored and a repeated block replaces
    /// the earlier record.
    pub fn insert(&mut self, record: GeoRecord) {
        let net = record.cidr.trunc();
        let replaced = match net {
            IpNet::V4(n) => bucket(&mut self.v4, n.prefix_len())
                .insert(u32::from(n.network()), record.location),
            IpNet::V6(n) => bucket(&mut self.v6, n.prefix_len())
                .insert(u128::from(n.network()), record.location),
        };
        if replaced.is_none() {
            self.len += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn longest_match(&self, ip: IpAddr) -> Option<&GeoLocation> {
        match ip {
            IpAddr::V4(v4) => {
                let a = u32::from(v4);
                self.v4.iter().find_map(|(len, m)| m.get(&mask4(a, *len)))
            }
            IpAddr::V6(v6) => {
                let a = u128::from(v6);
                self.v6.iter().find_map(|(len, m)| m.get(&mask6(a, *len)))
            }
        }
    }

    /// Parses the `cidr,lat,lon,zone` CSV format.
    pub fn from_reader<R: std::io::Read>(reader: R, origin: &str) -> Result<Self, GeoError> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = csv.headers().map_err(|e| parse_err(origin, 1, e.to_string()))?.clone();
        let mut db = Self::new();
        if headers.is_empty() {
            return Ok(db);
        }
        if headers.iter().collect::<Vec<_>>() != ["cidr", "lat", "lon", "zone"] {
            return Err(parse_err(origin, 1, format!("expected header cidr,lat,lon,zone, got {}", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut record = csv::StringRecord::new();
        loop {
            match csv.read_record(&mut record) {
                Ok(true) => {}
                Ok(false) => break,
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line());
                    return Err(parse_err(origin, line, e.to_string()));
                }
            }
            let line = record.position().map_or(0, |p| p.line());
            let row: Row = record.deserialize(Some(&headers)).map_err(|e| parse_err(origin, line, e.to_string()))?;
            let cidr: IpNet = row.cidr.parse().map_err(|e| parse_err(origin, line, format!("bad cidr {:?}: {e}", row.cidr)))?;
            let zone = match row.zone.filter(|z| !z.is_empty()) {
                Some(z) => Some(ZoneId::new(z).map_err(|e| parse_err(origin, line, e.to_string()))?),
                None => None,
            };
            let location = GeoLocation::new(row.lat, row.lon, zone)
                .map_err(|e| parse_err(origin, line, e.to_string()))?;
            db.insert(GeoRecord { cidr, location });
        }
        Ok(db)
    }
}

fn parse_err(origin: &str, line: u64, message: String) -> GeoError {
    GeoError::Parse { path: origin.to_string(), line, message }
}

/// Loads an offline CSV database into a longest-prefix-match provider.
pub fn load_geo_database(path: &Path) -> Result<GeoDatabase, GeoError> {
    let file = std::fs::File::open(path)
        .map_err(|source| GeoError::Io { path: path.display().to_string(), source })?;
    GeoDatabase::from_reader(file, &path.display().to_string())
}

impl GeoProvider for GeoDatabase {
    fn lookup(&self, ip: IpAddr) -> Result<Option<GeoLocation>, GeoError> {
        Ok(self.longest_match(ip).cloned())
    }
}
