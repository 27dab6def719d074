use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::agent::Hyper;
use crate::config::{join, KvFile};
use crate::env::RewardConfig;
use crate::error::{Error, Result};
use crate::heuristic::DEFAULT_C2_NORM;
use crate::model::TopologyConfig;
use crate::objective::WeightsConfig;
use crate::workload::WorkloadConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    Heu,
    Drl,
    HaDrl,
    Oracle,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Heu => "heu",
            Engine::Drl => "drl",
            Engine::HaDrl => "hadrl",
            Engine::Oracle => "oracle",
        }
    }

    pub fn is_learning(self) -> bool {
        matches!(self, Engine::Drl | Engine::HaDrl)
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "heu" => Ok(Engine::Heu),
            "drl" => Ok(Engine::Drl),
            "hadrl" => Ok(Engine::HaDrl),
            "oracle" => Ok(Engine::Oracle),
            other => Err(format!("unknown engine `{other}` (expected heu, drl, hadrl or oracle)")),
        }
    }
}

/// Everything a training, evaluation or benchmark run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub engine: Engine,
    pub topology: TopologyConfig,
    pub workload: WorkloadConfig,
    pub weights: WeightsConfig,
    pub rewards: RewardConfig,
    pub hyper: Hyper,
    /// Hop penalty of the heuristic's node score.
    pub c2_norm: f64,
    pub phases: usize,
    pub arrivals_per_phase: usize,
    /// Parallel rollout replicas, each with its own substrate and arrival stream.
    pub workers: usize,
    /// Seed for network initialisation and action sampling.
    pub seed: u64,
    /// Workload seeds for frozen-policy evaluation; empty means the training seed.
    pub eval_seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
    /// Write measured wall-clock seconds into metrics; 0 otherwise, keeping CSVs reproducible.
    pub record_wall_time: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            engine: Engine::HaDrl,
            topology: TopologyConfig::default(),
            workload: WorkloadConfig::default(),
            weights: WeightsConfig::default(),
            rewards: RewardConfig::default(),
            hyper: Hyper::default(),
            c2_norm: DEFAULT_C2_NORM,
            phases: 50,
            arrivals_per_phase: 100,
            workers: 4,
            seed: 1,
            eval_seeds: Vec::new(),
            output_dir: None,
            record_wall_time: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        self.workload.validate()?;
        self.hyper.validate()?;
        if self.phases == 0 || self.arrivals_per_phase == 0 || self.workers == 0 {
            return Err(Error::Config("phases, arrivals_per_phase and workers must be >= 1".into()));
        }
        if !(self.c2_norm >= 0.0 && self.c2_norm.is_finite()) {
            return Err(Error::Config("c2_norm must be a non-negative number".into()));
        }
        Ok(())
    }

    pub fn from_kv(mut kv: KvFile) -> Result<Self> {
        let d = RunConfig::default();
        let cfg = RunConfig {
            engine: kv
                .take::<String>("engine")?
                .map(|s| s.parse::<Engine>().map_err(Error::Config))
                .transpose()?
                .unwrap_or(d.engine),
            topology: TopologyConfig::read(&mut kv)?,
            workload: WorkloadConfig::read(&mut kv)?,
            weights: WeightsConfig::read(&mut kv)?,
            rewards: RewardConfig::read(&mut kv)?,
            hyper: Hyper::read(&mut kv)?,
            c2_norm: kv.take_or("c2_norm", d.c2_norm)?,
            phases: kv.take_or("phases", d.phases)?,
            arrivals_per_phase: kv.take_or("arrivals_per_phase", d.arrivals_per_phase)?,
            workers: kv.take_or("workers", d.workers)?,
            seed: kv.take_or("seed", d.seed)?,
            eval_seeds: kv.take_list("eval_seeds")?.unwrap_or_default(),
            output_dir: kv.take::<PathBuf>("output_dir")?,
            record_wall_time: kv.take_or("record_wall_time", d.record_wall_time)?,
        };
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(KvFile::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_kv(KvFile::load(path)?)
    }

    /// Serialises to the shared key-value format; `parse` reads it back unchanged.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("engine = {}\n", self.engine));
        self.topology.write(&mut out);
        self.workload.write(&mut out);
        self.weights.write(&mut out);
        self.rewards.write(&mut out);
        self.hyper.write(&mut out);
        out.push_str(&format!("c2_norm = {}\n", self.c2_norm));
        out.push_str(&format!("phases = {}\n", self.phases));
        out.push_str(&format!("arrivals_per_phase = {}\n", self.arrivals_per_phase));
        out.push_str(&format!("workers = {}\n", self.workers));
        out.push_str(&format!("seed = {}\n", self.seed));
        if !self.eval_seeds.is_empty() {
            out.push_str(&format!("eval_seeds = {}\n", join(&self.eval_seeds)));
        }
        if let Some(dir) = &self.output_dir {
            out.push_str(&format!("output_dir = {}\n", dir.display()));
        }
        out.push_str(&format!("record_wall_time = {}\n", self.record_wall_time));
        out
    }

    /// Beta written to metrics: only the shaped engine has one.
    pub fn metric_beta(&self) -> f64 {
        match self.engine {
            Engine::HaDrl => self.hyper.beta,
            _ => 0.0,
        }
    }

    /// Arrivals replica `worker` serves in one phase. A phase's arrivals are
    /// dealt round-robin over the workers.
    pub fn arrivals_per_worker_phase(&self, worker: usize) -> usize {
        self.arrivals_per_phase / self.workers + usize::from(worker < self.arrivals_per_phase % self.workers)
    }

    pub fn arrivals_per_stream(&self, worker: usize) -> usize {
        self.phases * self.arrivals_per_worker_phase(worker)
    }

    /// Synchronous rounds per phase; round `r` involves the first
    /// `min(workers, arrivals_per_phase - r * workers)` replicas.
    pub fn rounds_per_phase(&self) -> usize {
        self.arrivals_per_phase.div_ceil(self.workers)
    }

    pub fn round_width(&self, round: usize) -> usize {
        self.workers.min(self.arrivals_per_phase - round * self.workers)
    }
}
