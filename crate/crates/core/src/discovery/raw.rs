//! Raw-socket prober for live paths (IPv4 only). Needs CAP_NET_RAW.

use std::io::Read;
use std::net::{IpAddr, Ipv4Addr, SocketAddr, SocketAddrV4, UdpSocket};
use std::time::Instant;

use socket2::{Domain, Protocol, Socket, Type};

use super::{ProbeConfig, ProbeError, ProbeKind, ProbeResponse, Prober};

const BASE_PORT: u16 = 33434;
const ICMP_ECHO_REPLY: u8 = 0;
const ICMP_UNREACHABLE: u8 = 3;
const ICMP_ECHO_REQUEST: u8 = 8;
const ICMP_TIME_EXCEEDED: u8 = 11;

pub struct RawProber {
    source: Ipv4Addr,
    ident: u16,
}

impl RawProber {
    /// Uses `source` when given, otherwise the address the kernel would pick
    /// for a public destination.
    pub fn new(source: Option<Ipv4Addr>) -> Result<Self, ProbeError> {
        let source = match source {
            Some(s) => s,
            None => {
                let s = UdpSocket::bind("0.0.0.0:0")?;
                s.connect("192.0.2.1:53")?;
                match s.local_addr()?.ip() {
                    IpAddr::V4(v4) => v4,
                    IpAddr::V6(_) => return Err(ProbeError::Unsupported("no IPv4 source address".into())),
                }
            }
        };
        Ok(Self { source, ident: (std::process::id() & 0xffff) as u16 })
    }

    fn icmp_listener(config: &ProbeConfig) -> Result<Socket, ProbeError> {
        let sock = Socket::new(Domain::IPV4, Type::RAW, Some(Protocol::ICMPV4))?;
        sock.set_read_timeout(Some(config.timeout()))?;
        Ok(sock)
    }
}

fn checksum(data: &[u8]) -> u16 {
    let mut sum = 0u32;
    for chunk in data.chunks(2) {
        let word = u16::from_be_bytes([chunk[0], *chunk.get(1).unwrap_or(&0)]);
        sum = sum.wrapping_add(word as u32);
    }
    while sum >> 16 != 0 {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}

fn echo_request(ident: u16, seq: u16) -> [u8; 16] {
    let mut pkt = [0u8; 16];
    pkt[0] = ICMP_ECHO_REQUEST;
    pkt[4..6].copy_from_slice(&ident.to_be_bytes());
    pkt[6..8].copy_from_slice(&seq.to_be_bytes());
    let sum = checksum(&pkt);
    pkt[2..4].copy_from_slice(&sum.to_be_bytes());
    pkt
}

/// What a received ICMP datagram says about one of our probes.
enum Matched {
    Responder(Ipv4Addr),
    Unrelated,
}

fn ip_payload(packet: &[u8]) -> Option<(&[u8], u8, Ipv4Addr)> {
    let ihl = (*packet.first()? & 0x0f) as usize * 4;
    if packet.len() < ihl || ihl < 20 {
        return None;
    }
    let src = Ipv4Addr::new(packet[12], packet[13], packet[14], packet[15]);
    Some((&packet[ihl..], packet[9], src))
}

fn match_reply(packet: &[u8], kind: ProbeKind, ident: u16, seq: u16, udp_ports: (u16, u16)) -> Matched {
    let Some((icmp, _, from)) = ip_payload(packet) else { return Matched::Unrelated };
    if icmp.len() < 8 {
        return Matched::Unrelated;
    }
    match icmp[0] {
        ICMP_ECHO_REPLY if kind == ProbeKind::Icmp => {
            let id = u16::from_be_bytes([icmp[4], icmp[5]]);
            let sq = u16::from_be_bytes([icmp[6], icmp[7]]);
            if id == ident && sq == seq {
                return Matched::Responder(from);
            }
            Matched::Unrelated
        }
        ICMP_TIME_EXCEEDED | ICMP_UNREACHABLE => {
            let Some((inner, proto, _)) = ip_payload(&icmp[8..]) else { return Matched::Unrelated };
            if inner.len() < 8 {
                return Matched::Unrelated;
            }
            let a = u16::from_be_bytes([inner[0], inner[1]]);
            let b = u16::from_be_bytes([inner[2], inner[3]]);
            let ours = match kind {
                ProbeKind::Icmp => proto == 1 && u16::from_be_bytes([inner[4], inner[5]]) == ident
                    && u16::from_be_bytes([inner[6], inner[7]]) == seq,
                ProbeKind::Udp => proto == 17 && (a, b) == udp_ports,
            };
            if ours {
                Matched::Responder(from)
            } else {
                Matched::Unrelated
            }
        }
        _ => Matched::Unrelated,
    }
}

impl Prober for RawProber {
    fn source(&self) -> IpAddr {
        IpAddr::V4(self.source)
    }

    fn probe(&self, destination: IpAddr, ttl: u8, seq: u16, config: &ProbeConfig) -> Result<ProbeResponse, ProbeError> {
        let IpAddr::V4(dst) = destination else {
            return Err(ProbeError::Unsupported("raw prober handles IPv4 only".into()));
        };
        let listener = Self::icmp_listener(config)?;
        let sent_at = Instant::now();
        let mut udp_ports = (0, 0);
        match config.probe_kind {
            ProbeKind::Icmp => {
                listener.set_ttl(ttl as u32)?;
                let to = SocketAddr::V4(SocketAddrV4::new(dst, 0));
                listener.send_to(&echo_request(self.ident, seq), &to.into())?;
            }
            ProbeKind::Udp => {
                let sock = UdpSocket::bind(SocketAddrV4::new(self.source, 0))?;
                sock.set_ttl(ttl as u32)?;
                let port = BASE_PORT.wrapping_add(seq);
                sock.send_to(&[0u8; 12], SocketAddrV4::new(dst, port))?;
                udp_ports = (sock.local_addr()?.port(), port);
            }
        }

        let mut buf = [0u8; 1500];
        loop {
            let elapsed = sent_at.elapsed();
            if elapsed >= config.timeout() {
                return Ok(ProbeResponse::timeout(ttl));
            }
            listener.set_read_timeout(Some(config.timeout() - elapsed))?;
            let n = match (&listener).read(&mut buf) {
                Ok(n) => n,
                Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {
                    return Ok(ProbeResponse::timeout(ttl));
                }
                Err(e) => return Err(e.into()),
            };
            if let Matched::Responder(from) = match_reply(&buf[..n], config.probe_kind, self.ident, seq, udp_ports) {
                let rtt = sent_at.elapsed().as_secs_f64() * 1e3;
                return Ok(ProbeResponse::answered(ttl, IpAddr::V4(from), rtt));
            }
        }
    }
}
