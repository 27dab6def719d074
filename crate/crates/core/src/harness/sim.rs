//! Arrival/departure simulation driving every placement engine.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agent::{checkpoint, heuristic_shaping, policy_forward, sample_action, Agent, AgentParams, Trajectory, TrajectoryStep};
use crate::env::{feature_len, PlacementEnv, RewardConfig};
use crate::error::{Error, Result};
use crate::heuristic::heu_place;
use crate::model::{build_psn, PsnGraph};
use crate::objective::{objective_value, Mapping, ObjectiveWeights};
use crate::oracle::{exact_place, SearchLimits};
use crate::workload::{arrival_sequence_with_seed, NsprRequest, WorkloadConfig};

use super::config::{Engine, RunConfig};
use super::metrics::{MetricsWriter, PhaseAccumulator, PhaseMetrics};

/// How an agent picks among eligible nodes.
pub enum ActionSelection<'r> {
    Sample(&'r mut ChaCha8Rng),
    Greedy,
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub accepted: bool,
    pub mapping: Option<Mapping>,
    pub ret: f64,
    pub trajectory: Trajectory,
}

/// Runs one placement episode with the actor, shaping toward the heuristic
/// when `shaped` is set. Accepted placements stay allocated on `psn`.
pub fn run_agent_episode(
    psn: &mut PsnGraph,
    request: &crate::model::NsprGraph,
    params: &AgentParams,
    rewards: RewardConfig,
    c2_norm: f64,
    shaped: bool,
    mut selection: ActionSelection<'_>,
) -> Result<EpisodeResult> {
    let mut env = PlacementEnv::reset(psn, request, rewards)?;
    let mut traj = Trajectory { steps: Vec::with_capacity(request.len()), terminal: true, bootstrap: None };
    let mut ret = 0.0;
    loop {
        let mask = env.valid_actions();
        if !mask.any() {
            let out = env.forfeit()?;
            ret += out.reward;
            if let Some(last) = traj.steps.last_mut() {
                last.reward += out.reward;
            }
            break;
        }
        let features = env.features();
        let dist = policy_forward(&params.actor, &features, &mask)?;
        let behaviour = if shaped && params.hyper.beta > 0.0 {
            let heu = env.heuristic_candidate(c2_norm)?.map(|c| c.node);
            heuristic_shaping(&dist, heu, params.hyper.beta, params.hyper.eta)?
        } else {
            dist.clone()
        };
        let action = match &mut selection {
            ActionSelection::Sample(rng) => sample_action(&behaviour, *rng),
            ActionSelection::Greedy => behaviour.argmax(),
        }
        .expect("non-empty mask yields an action");
        let out = env.step(action)?;
        ret += out.reward;
        traj.steps.push(TrajectoryStep { features, mask, action, reward: out.reward, logits: dist.logits });
        if out.done {
            break;
        }
    }
    let accepted = env.accepted();
    let mapping = accepted.then(|| env.mapping().clone());
    Ok(EpisodeResult { accepted, mapping, ret, trajectory: traj })
}

/// Workload seed of replica `worker` for base seed `base`.
pub fn stream_seed(base: u64, worker: usize) -> u64 {
    // splitmix64 step keeps nearby bases uncorrelated.
    let mut z = base.wrapping_add((worker as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One substrate with its own arrival stream and live slices.
pub struct Replica {
    pub psn: PsnGraph,
    requests: Vec<NsprRequest>,
    next: usize,
    /// Keyed by (departure time bits, request id); departure times are positive.
    active: BTreeMap<(u64, usize), (usize, Mapping)>,
    rng: ChaCha8Rng,
}

/// What happened to one arrival.
#[derive(Debug, Clone)]
pub struct ArrivalOutcome {
    pub accepted: bool,
    pub ret: f64,
    pub objective: Option<f64>,
    pub trajectory: Option<Trajectory>,
}

impl Replica {
    pub fn new(psn: PsnGraph, requests: Vec<NsprRequest>, sampling_seed: u64) -> Self {
        Replica { psn, requests, next: 0, active: BTreeMap::new(), rng: ChaCha8Rng::seed_from_u64(sampling_seed) }
    }

    pub fn from_config(cfg: &RunConfig, workload_seed: u64, worker: usize, arrivals: usize) -> Result<Self> {
        let psn = build_psn(&cfg.topology)?;
        let wl = WorkloadConfig { horizon: arrivals.max(1), ..cfg.workload.clone() };
        let mut requests = arrival_sequence_with_seed(&wl, &psn, stream_seed(workload_seed, worker))?;
        requests.truncate(arrivals);
        Ok(Replica::new(psn, requests, stream_seed(cfg.seed ^ 0x5EED, worker)))
    }

    pub fn remaining(&self) -> usize {
        self.requests.len() - self.next
    }

    fn release_until(&mut self, t: f64) -> Result<()> {
        while let Some((&(bits, id), _)) = self.active.iter().next() {
            if f64::from_bits(bits) > t {
                break;
            }
            let (idx, mapping) = self.active.remove(&(bits, id)).unwrap();
            self.psn.release(&self.requests[idx].nspr, &mapping)?;
        }
        Ok(())
    }

    /// Releases every live slice; the substrate must come back to its maxima.
    pub fn drain(&mut self) -> Result<()> {
        self.release_until(f64::INFINITY)?;
        if !self.psn.is_pristine() || self.psn.active_allocations() != 0 {
            return Err(Error::Logic("residuals differ from installed capacity after all departures".into()));
        }
        Ok(())
    }

    /// Serves the next arrival with `engine`.
    pub fn serve_next(
        &mut self,
        engine: Engine,
        cfg: &RunConfig,
        params: Option<&AgentParams>,
        learning: bool,
    ) -> Result<ArrivalOutcome> {
        let idx = self.next;
        if idx >= self.requests.len() {
            return Err(Error::Contract("arrival stream exhausted".into()));
        }
        self.next += 1;
        let arrival = self.requests[idx].arrival_time;
        self.release_until(arrival)?;
        let nspr = &self.requests[idx].nspr;
        let weights = cfg.weights.resolve(nspr);
        let reward_weights = ObjectiveWeights { c1: cfg.rewards.r_success, c2: cfg.rewards.c2_r, c3: cfg.rewards.c3_r };

        let (mapping, ret, trajectory, objective) = match engine {
            Engine::Heu | Engine::Oracle => {
                let mapping = match engine {
                    Engine::Heu => heu_place(&self.psn, nspr, cfg.c2_norm),
                    _ => exact_place(&self.psn, nspr, &weights, SearchLimits::default()).best.map(|(m, _)| m),
                };
                match mapping {
                    Some(m) => {
                        let objective = objective_value(&self.psn, nspr, &m, &weights)?;
                        let ret = objective_value(&self.psn, nspr, &m, &reward_weights)?;
                        self.psn.allocate(nspr, &m)?;
                        (Some(m), ret, None, Some(objective))
                    }
                    None => (None, cfg.rewards.r_reject, None, None),
                }
            }
            Engine::Drl | Engine::HaDrl => {
                let params = params.ok_or_else(|| Error::Config("agent engines need parameters".into()))?;
                let before = self.psn.clone();
                let selection = if learning { ActionSelection::Sample(&mut self.rng) } else { ActionSelection::Greedy };
                let shaped = engine == Engine::HaDrl;
                let ep = run_agent_episode(&mut self.psn, nspr, params, cfg.rewards, cfg.c2_norm, shaped, selection)?;
                let objective = match &ep.mapping {
                    Some(m) => Some(objective_value(&before, nspr, m, &weights)?),
                    None => None,
                };
                (ep.mapping, ep.ret, Some(ep.trajectory), objective)
            }
        };

        let accepted = mapping.is_some();
        if let Some(m) = mapping {
            let departure = self.requests[idx].departure_time();
            self.active.insert((departure.to_bits(), idx), (idx, m));
        }
        Ok(ArrivalOutcome { accepted, ret, objective, trajectory })
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub metrics: Vec<PhaseMetrics>,
    pub params: AgentParams,
}

fn replicas_for(cfg: &RunConfig, workload_seed: u64) -> Result<Vec<Replica>> {
    (0..cfg.workers).map(|w| Replica::from_config(cfg, workload_seed, w, cfg.arrivals_per_stream(w))).collect()
}

fn open_writer(cfg: &RunConfig, file: &str) -> Result<Option<MetricsWriter>> {
    match &cfg.output_dir {
        None => Ok(None),
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            Ok(Some(MetricsWriter::create(&dir.join(file))?))
        }
    }
}

fn elapsed(cfg: &RunConfig, since: Instant) -> f64 {
    if cfg.record_wall_time {
        since.elapsed().as_secs_f64()
    } else {
        0.0
    }
}

fn serve_round(
    replicas: &mut [Replica],
    engine: Engine,
    cfg: &RunConfig,
    params: Option<&AgentParams>,
    learning: bool,
) -> Vec<Result<ArrivalOutcome>> {
    if replicas.len() == 1 {
        return vec![replicas[0].serve_next(engine, cfg, params, learning)];
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = replicas
            .iter_mut()
            .map(|r| scope.spawn(move || r.serve_next(engine, cfg, params, learning)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("rollout worker panicked")).collect()
    })
}

/// Trains a `drl` or `hadrl` agent online over the arrival streams.
pub fn run_training(cfg: &RunConfig) -> Result<TrainOutcome> {
    train_from(cfg, None)
}

/// Like [`run_training`], optionally starting from existing parameters.
pub fn train_from(cfg: &RunConfig, initial: Option<AgentParams>) -> Result<TrainOutcome> {
    cfg.validate()?;
    if !cfg.engine.is_learning() {
        return Err(Error::Config(format!("engine `{}` does not train; use eval", cfg.engine)));
    }
    let mut replicas = replicas_for(cfg, cfg.workload.seed)?;
    let inputs = feature_len(replicas[0].psn.node_count());
    let actions = replicas[0].psn.node_count();
    let params = initial.unwrap_or_else(|| AgentParams::init(inputs, actions, cfg.hyper, cfg.seed));
    if params.actor.input_len() != inputs || params.actor.output_len() != actions {
        return Err(Error::Config("parameters do not fit this topology".into()));
    }
    let mut agent = Agent::new(params);
    let mut writer = open_writer(cfg, "train_metrics.csv")?;
    let mut diag_rows = String::from("phase,actor_loss,critic_loss,entropy,actor_grad_norm,critic_grad_norm\n");
    let mut metrics = Vec::with_capacity(cfg.phases);

    for phase in 1..=cfg.phases {
        let started = Instant::now();
        let mut acc = PhaseAccumulator::default();
        let mut diag_sum = [0.0f64; 5];
        let mut updates = 0usize;
        for round in 0..cfg.rounds_per_phase() {
            let width = cfg.round_width(round);
            let outcomes = serve_round(&mut replicas[..width], cfg.engine, cfg, Some(&agent.params), true);
            let mut batch = Vec::with_capacity(outcomes.len());
            for out in outcomes {
                let out = out?;
                acc.record(out.accepted, out.ret, out.objective);
                if let Some(t) = out.trajectory.filter(|t| !t.steps.is_empty()) {
                    batch.push(t);
                }
            }
            if batch.is_empty() {
                continue;
            }
            match agent.update_batch(&batch) {
                Ok(d) => {
                    for (s, v) in diag_sum.iter_mut().zip([d.actor_loss, d.critic_loss, d.entropy, d.actor_grad_norm, d.critic_grad_norm]) {
                        *s += v;
                    }
                    updates += 1;
                }
                Err(e) => {
                    if let Some(dir) = &cfg.output_dir {
                        checkpoint::save(&agent.params, &dir.join("checkpoint.txt"))?;
                    }
                    return Err(e);
                }
            }
        }
        let m = acc.finish(phase, cfg.engine.name(), cfg.metric_beta(), elapsed(cfg, started));
        if let Some(w) = writer.as_mut() {
            w.write(&m)?;
        }
        let n = updates.max(1) as f64;
        diag_rows.push_str(&format!(
            "{phase},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            diag_sum[0] / n,
            diag_sum[1] / n,
            diag_sum[2] / n,
            diag_sum[3] / n,
            diag_sum[4] / n
        ));
        metrics.push(m);
    }
    for r in &mut replicas {
        r.drain()?;
    }
    if let Some(dir) = &cfg.output_dir {
        checkpoint::save(&agent.params, &dir.join("checkpoint.txt"))?;
        let path = dir.join("train_diagnostics.csv");
        std::fs::write(&path, diag_rows).map_err(|e| Error::io(&path, e))?;
    }
    Ok(TrainOutcome { metrics, params: agent.params })
}

/// Frozen-policy evaluation over the evaluation streams, one row per phase.
/// Agent engines act greedily (argmax of the shaped logits for `hadrl`).
pub fn run_eval_phases(engine: Engine, cfg: &RunConfig, params: Option<&AgentParams>) -> Result<Vec<PhaseMetrics>> {
    cfg.validate()?;
    if engine.is_learning() && params.is_none() {
        return Err(Error::Config(format!("engine `{engine}` needs a checkpoint")));
    }
    let seeds = if cfg.eval_seeds.is_empty() { vec![cfg.workload.seed] } else { cfg.eval_seeds.clone() };
    let mut replicas = Vec::new();
    for s in seeds {
        replicas.extend(replicas_for(cfg, s)?);
    }
    if let (Some(p), Some(r)) = (params, replicas.first()) {
        if p.actor.output_len() != r.psn.node_count() {
            return Err(Error::Config("checkpoint does not fit this topology".into()));
        }
    }
    let beta = if engine == Engine::HaDrl { params.map_or(cfg.hyper.beta, |p| p.hyper.beta) } else { 0.0 };
    let mut out = Vec::with_capacity(cfg.phases);
    for phase in 1..=cfg.phases {
        let started = Instant::now();
        let mut acc = PhaseAccumulator::default();
        for group in replicas.chunks_mut(cfg.workers) {
            for round in 0..cfg.rounds_per_phase() {
                for r in &mut group[..cfg.round_width(round)] {
                    let o = r.serve_next(engine, cfg, params, false)?;
                    acc.record(o.accepted, o.ret, o.objective);
                }
            }
        }
        out.push(acc.finish(phase, engine.name(), beta, elapsed(cfg, started)));
    }
    for r in &mut replicas {
        r.drain()?;
    }
    Ok(out)
}

/// All evaluation phases folded into one row (phase 0).
pub fn run_eval(engine: Engine, cfg: &RunConfig, params: Option<&AgentParams>) -> Result<PhaseMetrics> {
    let phases = run_eval_phases(engine, cfg, params)?;
    Ok(summarize(&phases, engine.name()))
}

pub fn summarize(phases: &[PhaseMetrics], engine: &str) -> PhaseMetrics {
    let mut acc = PhaseAccumulator::default();
    let mut wall = 0.0;
    let beta = phases.first().map_or(0.0, |p| p.beta);
    for p in phases {
        acc.merge(&PhaseAccumulator {
            arrivals: p.arrivals,
            accepted: p.accepted,
            return_sum: p.mean_return * p.arrivals as f64,
            objective_sum: p.mean_objective * p.accepted as f64,
        });
        wall += p.wall_s;
    }
    acc.finish(0, engine, beta, wall)
}

/// Serves an explicit request list on one substrate without learning.
pub fn run_eval_on(
    engine: Engine,
    cfg: &RunConfig,
    psn: PsnGraph,
    requests: Vec<NsprRequest>,
    params: Option<&AgentParams>,
) -> Result<PhaseMetrics> {
    let mut replica = Replica::new(psn, requests, cfg.seed);
    let mut acc = PhaseAccumulator::default();
    while replica.remaining() > 0 {
        let o = replica.serve_next(engine, cfg, params, false)?;
        acc.record(o.accepted, o.ret, o.objective);
    }
    replica.drain()?;
    let beta = if engine == Engine::HaDrl { cfg.hyper.beta } else { 0.0 };
    Ok(acc.finish(0, engine.name(), beta, 0.0))
}

/// Writes evaluation rows to `<output_dir>/eval_metrics.csv` when an output directory is set.
pub fn write_eval(cfg: &RunConfig, rows: &[PhaseMetrics]) -> Result<()> {
    if let Some(mut w) = open_writer(cfg, "eval_metrics.csv")? {
        for r in rows {
            w.write(r)?;
        }
    }
    Ok(())
}

pub fn load_params(path: &Path) -> Result<AgentParams> {
    if !path.exists() {
        return Err(Error::Config(format!("checkpoint {} not found", path.display())));
    }
    checkpoint::load(path)
}
