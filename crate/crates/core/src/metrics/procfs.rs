//! Linux `/proc` and `/sys` backed source.

use std::fs;
use std::time::Instant;

use super::{HostMetrics, MetricsSource, NetworkMetrics, Reading, SampleError};

pub struct ProcSource {
    interface: Option<String>,
    prev_cpu: Option<(u64, u64)>,
    prev_bytes: Option<(Instant, u64, u64)>,
}

fn read(path: &str) -> Result<String, SampleError> {
    fs::read_to_string(path).map_err(|e| SampleError::Source(format!("{path}: {e}")))
}

fn meminfo_kib(text: &str, key: &str) -> Option<u64> {
    text.lines()
        .find(|l| l.starts_with(key) && l[key.len()..].starts_with(':'))
        .and_then(|l| l.split_whitespace().nth(1))
        .and_then(|v| v.parse().ok())
}

/// (busy, total) jiffies from the aggregate `cpu` line.
fn cpu_times(stat: &str) -> Option<(u64, u64)> {
    let fields: Vec<u64> = stat
        .lines()
        .find(|l| l.starts_with("cpu "))?
        .split_whitespace()
        .skip(1)
        .filter_map(|v| v.parse().ok())
        .collect();
    let total: u64 = fields.iter().sum();
    let idle = fields.get(3).copied().unwrap_or(0) + fields.get(4).copied().unwrap_or(0);
    Some((total - idle, total))
}

struct DevCounters {
    name: String,
    rx_bytes: u64,
    rx_packets: u64,
    rx_errs: u64,
    rx_drop: u64,
    tx_bytes: u64,
    tx_packets: u64,
    tx_errs: u64,
    tx_drop: u64,
}

fn net_dev(text: &str) -> Vec<DevCounters> {
    text.lines()
        .skip(2)
        .filter_map(|line| {
            let (name, rest) = line.split_once(':')?;
            let v: Vec<u64> = rest.split_whitespace().filter_map(|x| x.parse().ok()).collect();
            if v.len() < 16 {
                return None;
            }
            Some(DevCounters {
                name: name.trim().to_string(),
                rx_bytes: v[0],
                rx_packets: v[1],
                rx_errs: v[2],
                rx_drop: v[3],
                tx_bytes: v[8],
                tx_packets: v[9],
                tx_errs: v[10],
                tx_drop: v[11],
            })
        })
        .collect()
}

fn sys_num(path: String) -> Option<i64> {
    fs::read_to_string(path).ok()?.trim().parse().ok()
}

impl ProcSource {
    /// Watches `interface`, or the first non-loopback device when `None`.
    pub fn new(interface: Option<String>) -> Self {
        Self { interface, prev_cpu: None, prev_bytes: None }
    }
}

impl MetricsSource for ProcSource {
    fn read(&mut self) -> Result<Reading, SampleError> {
        let mem = read("/proc/meminfo")?;
        let total = meminfo_kib(&mem, "MemTotal").ok_or_else(|| SampleError::Source("no MemTotal".into()))? * 1024;
        let free = meminfo_kib(&mem, "MemFree").unwrap_or(0) * 1024;
        let available = meminfo_kib(&mem, "MemAvailable").map_or(free, |v| v * 1024);

        let cpuinfo = read("/proc/cpuinfo")?;
        let core_count = cpuinfo.lines().filter(|l| l.starts_with("processor")).count().max(1) as u32;
        let cur_mhz = cpuinfo
            .lines()
            .find(|l| l.starts_with("cpu MHz"))
            .and_then(|l| l.split(':').nth(1))
            .and_then(|v| v.trim().parse::<f64>().ok());
        let khz = |f: &str| sys_num(format!("/sys/devices/system/cpu/cpu0/cpufreq/{f}")).map(|v| v as f64 / 1000.0);
        let (min_mhz, max_mhz) = (khz("cpuinfo_min_freq"), khz("cpuinfo_max_freq"));
        // drop a current reading that the cpufreq bounds would reject (turbo, VMs)
        let cur_mhz = match (min_mhz, cur_mhz, max_mhz) {
            (Some(lo), Some(c), Some(hi)) => Some(c.clamp(lo, hi)),
            _ => cur_mhz,
        };

        let (busy, all) = cpu_times(&read("/proc/stat")?).ok_or_else(|| SampleError::Source("no cpu line".into()))?;
        let cpu_util = match self.prev_cpu.replace((busy, all)) {
            Some((pb, pa)) if all > pa => (busy.saturating_sub(pb)) as f64 / (all - pa) as f64,
            _ if all > 0 => busy as f64 / all as f64,
            _ => 0.0,
        }
        .clamp(0.0, 1.0);

        let devs = net_dev(&read("/proc/net/dev")?);
        let dev = match &self.interface {
            Some(name) => devs.into_iter().find(|d| &d.name == name),
            None => devs.into_iter().find(|d| d.name != "lo"),
        }
        .ok_or_else(|| SampleError::Source("no matching network interface".into()))?;
        let now = Instant::now();
        let (read_thrpt, write_thrpt) = match self.prev_bytes.replace((now, dev.rx_bytes, dev.tx_bytes)) {
            Some((then, rx, tx)) => {
                let dt = now.duration_since(then).as_secs_f64();
                if dt > 0.0 {
                    (dev.rx_bytes.saturating_sub(rx) as f64 / dt, dev.tx_bytes.saturating_sub(tx) as f64 / dt)
                } else {
                    (0.0, 0.0)
                }
            }
            None => (0.0, 0.0),
        };
        let mtu = sys_num(format!("/sys/class/net/{}/mtu", dev.name)).unwrap_or(0).max(0) as u32;
        // Mbit/s, -1 when the driver does not know
        let speed = sys_num(format!("/sys/class/net/{}/speed", dev.name)).unwrap_or(0).max(0) as u64 * 1_000_000;

        Ok(Reading {
            host: HostMetrics {
                core_count,
                free_memory: free.min(total),
                max_memory: total,
                memory: total.saturating_sub(available),
                cpu_freq_min: min_mhz,
                cpu_freq_max: max_mhz,
                cpu_freq_cur: cur_mhz,
                cpu_arch: std::env::consts::ARCH.to_string(),
                cpu_util,
            },
            net: NetworkMetrics {
                drop_in: dev.rx_drop,
                drop_out: dev.tx_drop,
                error_in: dev.rx_errs,
                error_out: dev.tx_errs,
                latency_src_ms: None,
                latency_dst_ms: None,
                rtt_src_ms: None,
                rtt_dst_ms: None,
                nic_mtu: mtu,
                nic_speed: speed,
                interface: dev.name,
                packets_sent: dev.tx_packets,
                packets_received: dev.rx_packets,
                read_thrpt,
                write_thrpt,
            },
            transfer: None,
        })
    }
}
