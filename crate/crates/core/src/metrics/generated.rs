use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HostMetrics, MetricsSource, NetworkMetrics, Reading, SampleError, TransferMetrics};

/// Replays a fixed list of readings, then reports exhaustion.
#[derive(Debug, Clone)]
pub struct ScriptedSource {
    readings: VecDeque<Reading>,
}

impl ScriptedSource {
    pub fn new(readings: Vec<Reading>) -> Self {
        Self { readings: readings.into() }
    }
}

impl MetricsSource for ScriptedSource {
    fn read(&mut self) -> Result<Reading, SampleError> {
        self.readings.pop_front().ok_or(SampleError::Exhausted)
    }
}

/// Seeded random walk over plausible host and NIC values. Counters only grow.
#[derive(Debug, Clone)]
pub struct GeneratedSource {
    rng: ChaCha8Rng,
    net: NetworkMetrics,
    transfer: Option<TransferMetrics>,
}

impl GeneratedSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            net: NetworkMetrics {
                drop_in: 0,
                drop_out: 0,
                error_in: 0,
                error_out: 0,
                latency_src_ms: None,
                latency_dst_ms: None,
                rtt_src_ms: None,
                rtt_dst_ms: None,
                nic_mtu: 1500,
                nic_speed: 10_000_000_000,
                interface: "sim0".into(),
                packets_sent: 0,
                packets_received: 0,
                read_thrpt: 0.0,
                write_thrpt: 0.0,
            },
            transfer: None,
        }
    }

    /// Simulates an active transfer of `job_size` bytes until it completes.
    pub fn with_transfer(mut self, job_uuid: impl Into<String>, job_size: u64) -> Self {
        self.transfer = Some(TransferMetrics {
            job_uuid: job_uuid.into(),
            job_size,
            node_id: "sim-ftn".into(),
            buffer_size: 1 << 20,
            parallelism: 4,
            concurrency: 2,
            pipelining: 1,
            bytes_sent: 0,
            bytes_received: 0,
        });
        self
    }
}

impl MetricsSource for GeneratedSource {
    fn read(&mut self) -> Result<Reading, SampleError> {
        let rng = &mut self.rng;
        let max_memory = 16u64 << 30;
        let free_memory = rng.gen_range(1u64 << 30..max_memory);
        let (lo, hi) = (800.0, 3600.0);
        let host = HostMetrics {
            core_count: 8,
            free_memory,
            max_memory,
            memory: max_memory - free_memory,
            cpu_freq_min: Some(lo),
            cpu_freq_max: Some(hi),
            cpu_freq_cur: Some(rng.gen_range(lo..=hi)),
            cpu_arch: std::env::consts::ARCH.to_string(),
            cpu_util: rng.gen_range(0.0..=1.0),
        };

        let sent = rng.gen_range(0..10_000u64);
        let received = rng.gen_range(0..10_000u64);
        let net = &mut self.net;
        net.packets_sent += sent;
        net.packets_received += received;
        net.drop_in += rng.gen_range(0..3);
        net.drop_out += rng.gen_range(0..3);
        net.error_in += u64::from(rng.gen_bool(0.05));
        net.error_out += u64::from(rng.gen_bool(0.05));
        let src_latency = rng.gen_range(1.0..40.0);
        let dst_latency = rng.gen_range(1.0..40.0);
        net.latency_src_ms = Some(src_latency);
        net.latency_dst_ms = Some(dst_latency);
        net.rtt_src_ms = Some(src_latency * 2.0);
        net.rtt_dst_ms = Some(dst_latency * 2.0);
        net.read_thrpt = received as f64 * 1500.0;
        net.write_thrpt = sent as f64 * 1500.0;

        let transfer = match &mut self.transfer {
            Some(t) if t.bytes_sent < t.job_size => {
                let step = rng.gen_range(1..=t.job_size / 10 + 1);
                t.bytes_sent = (t.bytes_sent + step).min(t.job_size);
                t.bytes_received = t.bytes_sent;
                Some(t.clone())
            }
            _ => None,
        };
        Ok(Reading { host, net: self.net.clone(), transfer })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::SimClock;
    use crate::metrics::Sampler;
    use chrono::{TimeZone, Utc};

    #[test]
    fn same_seed_same_stream() {
        let mut a = GeneratedSource::new(1);
        let mut b = GeneratedSource::new(1);
        for _ in 0..5 {
            assert_eq!(a.read().unwrap(), b.read().unwrap());
        }
    }

    #[test]
    fn transfer_appears_only_while_active() {
        let clock = SimClock::new(Utc.with_ymd_and_hms(2024, 4, 14, 0, 0, 0).unwrap());
        let mut s = Sampler::new(GeneratedSource::new(3).with_transfer("job-1", 1000));
        let mut seen_active = false;
        let mut finished = false;
        for _ in 0..200 {
            let snap = s.sample(&clock).unwrap();
            match snap.transfer {
                Some(t) => {
                    assert!(!finished);
                    assert!(t.bytes_sent <= t.job_size);
                    seen_active = true;
                }
                None => finished = seen_active,
            }
        }
        assert!(seen_active && finished);
    }
}
