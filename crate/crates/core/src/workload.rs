//! Slice request generation and the Poisson arrival process.
//!
//! Arrivals follow a Poisson process of rate `lambda`, lifetimes are
//! exponential with mean `T`, and rejected requests are lost. `lambda` is
//! solved from the offered CPU load:
//!
//! ```text
//! target_load = lambda * T * E[slice cpu] / total_cpu
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::config::KvFile;
use crate::error::{Error, Result};
use crate::model::{NsprGraph, PsnGraph};

/// Closed integer interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Range {
    pub lo: u32,
    pub hi: u32,
}

impl Range {
    pub const fn new(lo: u32, hi: u32) -> Self {
        Range { lo, hi }
    }

    pub fn mean(&self) -> f64 {
        (self.lo as f64 + self.hi as f64) / 2.0
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        rng.random_range(self.lo..=self.hi)
    }

    fn parse(kv: &mut KvFile, key: &str, default: Range) -> Result<Range> {
        match kv.take_list::<u32>(key)? {
            None => Ok(default),
            Some(v) if v.len() == 2 => Ok(Range::new(v[0], v[1])),
            Some(v) => Err(Error::Config(format!("`{key}` needs two bounds, got {}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadConfig {
    pub vnf_count: Range,
    pub cpu: Range,
    pub ram: Range,
    pub bw: Range,
    /// Offered CPU load as a fraction of installed substrate CPU.
    pub target_load: f64,
    /// Mean slice lifetime in ticks.
    pub mean_lifetime: f64,
    /// Number of arrivals in a sequence.
    pub horizon: usize,
    pub seed: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            vnf_count: Range::new(5, 20),
            cpu: Range::new(2, 6),
            ram: Range::new(2, 6),
            bw: Range::new(1, 4),
            target_load: 0.5,
            mean_lifetime: 100.0,
            horizon: 1000,
            seed: 1,
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("vnf_count", self.vnf_count), ("cpu", self.cpu), ("ram", self.ram), ("bw", self.bw)] {
            if r.lo > r.hi {
                return Err(Error::Config(format!("{name} range [{}, {}] is empty", r.lo, r.hi)));
            }
        }
        if self.vnf_count.lo == 0 {
            return Err(Error::Config("requests need at least one VNF".into()));
        }
        if self.cpu.lo == 0 && self.ram.lo == 0 {
            return Err(Error::Config("cpu and ram ranges may both yield zero".into()));
        }
        if !(self.target_load > 0.0 && self.target_load <= 1.5) {
            return Err(Error::Config(format!("target_load {} outside (0, 1.5]", self.target_load)));
        }
        if !(self.mean_lifetime > 0.0 && self.mean_lifetime.is_finite()) {
            return Err(Error::Config("mean_lifetime must be positive".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        Ok(())
    }

    pub fn read(kv: &mut KvFile) -> Result<Self> {
        let d = Self::default();
        let cfg = WorkloadConfig {
            vnf_count: Range::parse(kv, "vnf_count", d.vnf_count)?,
            cpu: Range::parse(kv, "req_cpu", d.cpu)?,
            ram: Range::parse(kv, "req_ram", d.ram)?,
            bw: Range::parse(kv, "req_bw", d.bw)?,
            target_load: kv.take_or("target_load", d.target_load)?,
            mean_lifetime: kv.take_or("mean_lifetime", d.mean_lifetime)?,
            horizon: kv.take_or("horizon", d.horizon)?,
            seed: kv.take_or("workload_seed", d.seed)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn write(&self, out: &mut String) {
        let r = |r: Range| format!("{}, {}", r.lo, r.hi);
        out.push_str(&format!("vnf_count = {}\n", r(self.vnf_count)));
        out.push_str(&format!("req_cpu = {}\n", r(self.cpu)));
        out.push_str(&format!("req_ram = {}\n", r(self.ram)));
        out.push_str(&format!("req_bw = {}\n", r(self.bw)));
        out.push_str(&format!("target_load = {}\n", self.target_load));
        out.push_str(&format!("mean_lifetime = {}\n", self.mean_lifetime));
        out.push_str(&format!("horizon = {}\n", self.horizon));
        out.push_str(&format!("workload_seed = {}\n", self.seed));
    }

    /// Expected CPU demand of one request.
    pub fn mean_slice_cpu(&self) -> f64 {
        self.vnf_count.mean() * self.cpu.mean()
    }

    /// Arrival rate giving `target_load` on a substrate with `total_cpu` units.
    pub fn arrival_rate(&self, total_cpu: f64) -> f64 {
        self.target_load * total_cpu / (self.mean_lifetime * self.mean_slice_cpu())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NsprRequest {
    pub id: usize,
    pub nspr: NsprGraph,
    pub arrival_time: f64,
    pub lifetime: f64,
}

impl NsprRequest {
    pub fn departure_time(&self) -> f64 {
        self.arrival_time + self.lifetime
    }
}

pub fn generate_nspr<R: Rng>(rng: &mut R, cfg: &WorkloadConfig) -> NsprGraph {
    let count = cfg.vnf_count.sample(rng) as usize;
    let reqs: Vec<(u32, u32)> = (0..count)
        .map(|_| loop {
            let pair = (cfg.cpu.sample(rng), cfg.ram.sample(rng));
            if pair != (0, 0) {
                break pair;
            }
        })
        .collect();
    let bws: Vec<u32> = (1..count).map(|_| cfg.bw.sample(rng)).collect();
    NsprGraph::chain(&reqs, &bws).expect("generated chain is well formed")
}

/// Arrival stream seeded from `cfg.seed`, sorted by arrival time.
pub fn arrival_sequence(cfg: &WorkloadConfig, psn: &PsnGraph) -> Result<Vec<NsprRequest>> {
    arrival_sequence_with_seed(cfg, psn, cfg.seed)
}

pub fn arrival_sequence_with_seed(cfg: &WorkloadConfig, psn: &PsnGraph, seed: u64) -> Result<Vec<NsprRequest>> {
    cfg.validate()?;
    let lambda = cfg.arrival_rate(psn.total_max_cpu() as f64);
    let gaps = Exp::new(lambda).map_err(|e| Error::Config(format!("arrival rate {lambda}: {e}")))?;
    let lifetimes = Exp::new(1.0 / cfg.mean_lifetime).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(cfg.horizon);
    for id in 0..cfg.horizon {
        t += gaps.sample(&mut rng);
        let lifetime = lifetimes.sample(&mut rng).max(f64::MIN_POSITIVE);
        let nspr = generate_nspr(&mut rng, cfg);
        out.push(NsprRequest { id, nspr, arrival_time: t, lifetime });
    }
    Ok(out)
}

/// Offered CPU load realised by a request sequence over its arrival span.
pub fn offered_load(requests: &[NsprRequest], total_cpu: f64) -> f64 {
    let Some(last) = requests.last() else { return 0.0 };
    let work: f64 = requests.iter().map(|r| r.nspr.total_cpu() as f64 * r.lifetime).sum();
    work / (last.arrival_time * total_cpu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_psn, TopologyConfig};

    #[test]
    fn vnf_counts_respect_range() {
        let cfg = WorkloadConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let n = generate_nspr(&mut rng, &cfg);
            assert!((5..=20).contains(&n.len()));
            assert_eq!(n.vlinks.len(), n.len() - 1);
        }
    }

    #[test]
    fn degenerate_ranges() {
        let cfg = WorkloadConfig { vnf_count: Range::new(1, 1), cpu: Range::new(2, 2), ..Default::default() };
        let n = generate_nspr(&mut ChaCha8Rng::seed_from_u64(0), &cfg);
        assert_eq!(n.len(), 1);
        assert_eq!(n.vnfs[0].req_cpu, 2);
        assert!(n.vlinks.is_empty());
    }

    #[test]
    fn mean_vnf_count_converges() {
        let cfg = WorkloadConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let total: usize = (0..10_000).map(|_| generate_nspr(&mut rng, &cfg).len()).sum();
        let mean = total as f64 / 10_000.0;
        assert!((mean - 12.5).abs() / 12.5 < 0.02, "mean {mean}");
    }

    #[test]
    fn arrival_rate_closed_form() {
        // E[demand] = 5 * 10 = 50, T = 100, total 1000 cpu, load 0.5 -> 0.1
        let cfg = WorkloadConfig {
            vnf_count: Range::new(5, 5),
            cpu: Range::new(10, 10),
            mean_lifetime: 100.0,
            target_load: 0.5,
            ..Default::default()
        };
        assert!((cfg.arrival_rate(1000.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn horizon_one_and_determinism() {
        let psn = build_psn(&TopologyConfig::default()).unwrap();
        let cfg = WorkloadConfig { horizon: 1, ..Default::default() };
        assert_eq!(arrival_sequence(&cfg, &psn).unwrap().len(), 1);
        let cfg = WorkloadConfig { horizon: 200, ..Default::default() };
        let a = arrival_sequence(&cfg, &psn).unwrap();
        assert_eq!(a, arrival_sequence(&cfg, &psn).unwrap());
        assert!(a.windows(2).all(|w| w[0].arrival_time <= w[1].arrival_time));
        assert!(a.iter().all(|r| r.lifetime > 0.0 && r.nspr.validate().is_ok()));
    }

    #[test]
    fn bad_configs() {
        for cfg in [
            WorkloadConfig { target_load: 0.0, ..Default::default() },
            WorkloadConfig { target_load: 2.0, ..Default::default() },
            WorkloadConfig { horizon: 0, ..Default::default() },
            WorkloadConfig { cpu: Range::new(3, 2), ..Default::default() },
        ] {
            assert!(cfg.validate().is_err());
        }
    }
}
