//! Per-placement execution time of the heuristic and agent engines.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agent::AgentParams;
use crate::env::feature_len;
use crate::error::{Error, Result};
use crate::heuristic::heu_place;
use crate::model::{build_psn, TopologyConfig};
use crate::workload::{generate_nspr, Range, WorkloadConfig};

use super::config::{Engine, RunConfig};
use super::sim::{run_agent_episode, ActionSelection};

pub const BENCH_HEADER: [&str; 5] = ["engine", "vnfs", "nodes", "mean_s", "sd_s"];

/// Shaping strength used for `hadrl` timings when the configuration has none.
pub const BENCH_DEFAULT_BETA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub engine: String,
    pub vnfs: usize,
    pub nodes: usize,
    pub mean_s: f64,
    pub sd_s: f64,
}

fn mean_sd(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Times one placement per repetition on a fresh substrate for every
/// `(engine, |V|, |N|)` combination. Engines run interleaved on identical requests.
pub fn bench_exec_time(
    cfg: &RunConfig,
    engines: &[Engine],
    vnf_counts: &[usize],
    node_counts: &[usize],
    repetitions: usize,
) -> Result<Vec<BenchRow>> {
    if engines.contains(&Engine::Oracle) {
        return Err(Error::Config("the exact solver is excluded from timing benchmarks".into()));
    }
    if repetitions == 0 {
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for &nodes in node_counts {
        let topo = TopologyConfig { node_count: nodes, ..cfg.topology.clone() };
        let psn = build_psn(&topo)?;
        let mut hyper = cfg.hyper;
        if hyper.beta == 0.0 {
            hyper.beta = BENCH_DEFAULT_BETA;
        }
        let params = AgentParams::init(feature_len(nodes), nodes, hyper, cfg.seed);
        for &vnfs in vnf_counts {
            if vnfs == 0 {
                return Err(Error::Config("benchmark requests need at least one VNF".into()));
            }
            let wl = WorkloadConfig { vnf_count: Range::new(vnfs as u32, vnfs as u32), ..cfg.workload.clone() };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.workload.seed ^ ((nodes as u64) << 32) ^ vnfs as u64);
            let requests: Vec<_> = (0..repetitions).map(|_| generate_nspr(&mut rng, &wl)).collect();
            let mut samples = vec![Vec::with_capacity(repetitions); engines.len()];
            for req in &requests {
                for (e, &engine) in engines.iter().enumerate() {
                    let mut work = psn.clone();
                    let start = Instant::now();
                    match engine {
                        Engine::Heu => {
                            std::hint::black_box(heu_place(&work, req, cfg.c2_norm));
                        }
                        Engine::Drl | Engine::HaDrl => {
                            let shaped = engine == Engine::HaDrl;
                            let ep = run_agent_episode(&mut work, req, &params, cfg.rewards, cfg.c2_norm, shaped, ActionSelection::Greedy)?;
                            std::hint::black_box(ep);
                        }
                        Engine::Oracle => unreachable!(),
                    }
                    samples[e].push(start.elapsed().as_secs_f64());
                }
            }
            for (e, &engine) in engines.iter().enumerate() {
                let (mean_s, sd_s) = mean_sd(&samples[e]);
                rows.push(BenchRow { engine: engine.name().to_string(), vnfs, nodes, mean_s, sd_s });
            }
        }
    }
    Ok(rows)
}

pub fn bench_to_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BENCH_HEADER).unwrap();
    for r in rows {
        w.write_record([
            r.engine.clone(),
            r.vnfs.to_string(),
            r.nodes.to_string(),
            format!("{:.9}", r.mean_s),
            format!("{:.9}", r.sd_s),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

pub fn parse_bench_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::parse(1, e.to_string()))?.clone();
    if header.iter().ne(BENCH_HEADER.iter().copied()) {
        return Err(Error::parse(1, "unexpected benchmark header"));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |what: &str| Error::parse(line, format!("bad {what}"));
        out.push(BenchRow {
            engine: rec.get(0).unwrap_or("").to_string(),
            vnfs: rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("vnfs"))?,
            nodes: rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| bad("nodes"))?,
            mean_s: rec.get(3).and_then(|s| s.parse().ok()).ok_or_else(|| bad("mean_s"))?,
            sd_s: rec.get(4).and_then(|s| s.parse().ok()).ok_or_else(|| bad("sd_s"))?,
        });
    }
    Ok(out)
}
