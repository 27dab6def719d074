//! Sequential placement episodes: one VNF per step over a live substrate.
//!
//! Per-step reward for placing a VNF on node `n` through a path of `h` hops:
//!
//! ```text
//! c3_r * (cap_cpu_n'/max_cpu_n + cap_ram_n'/max_ram_n) - c2_r * req_bw * h
//! ```
//!
//! plus `r_success` on the step that completes the chain. An ineligible
//! action, or a forfeit when no node is eligible, ends the episode with
//! `r_reject` and rolls back everything the episode consumed. The return of
//! an accepted episode equals the placement score under weights
//! `(r_success, c2_r, c3_r)`.

use crate::config::KvFile;
use crate::error::{Error, Result};
use crate::heuristic::{heu_next_node, CandidateScore, RouteTree};
use crate::model::{NodeId, NsprGraph, PsnGraph, Reservation};
use crate::objective::Mapping;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    pub r_success: f64,
    pub r_reject: f64,
    pub c2_r: f64,
    pub c3_r: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig { r_success: 10.0, r_reject: -1.0, c2_r: 0.1, c3_r: 1.0 }
    }
}

impl RewardConfig {
    pub fn read(kv: &mut KvFile) -> Result<Self> {
        let d = Self::default();
        let cfg = RewardConfig {
            r_success: kv.take_or("r_success", d.r_success)?,
            r_reject: kv.take_or("r_reject", d.r_reject)?,
            c2_r: kv.take_or("c2_r", d.c2_r)?,
            c3_r: kv.take_or("c3_r", d.c3_r)?,
        };
        if [cfg.r_success, cfg.r_reject, cfg.c2_r, cfg.c3_r].iter().any(|v| !v.is_finite()) || cfg.r_success <= 0.0 {
            return Err(Error::Config("reward coefficients must be finite, r_success > 0".into()));
        }
        Ok(cfg)
    }

    pub fn write(&self, out: &mut String) {
        out.push_str(&format!(
            "r_success = {}\nr_reject = {}\nc2_r = {}\nc3_r = {}\n",
            self.r_success, self.r_reject, self.c2_r, self.c3_r
        ));
    }
}

/// Observation handed to the agent.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub cap_cpu: Vec<u32>,
    pub cap_ram: Vec<u32>,
    /// Sum of residual bandwidth over each node's incident links.
    pub bw_agg: Vec<u64>,
    /// VNFs of the current request hosted on each node.
    pub placement_count: Vec<u32>,
    pub req_cpu: u32,
    pub req_ram: u32,
    /// Bandwidth of the current VNF's inbound virtual link.
    pub req_bw: u32,
    /// VNFs still to place.
    pub m_v: usize,
    pub prev_node: Option<NodeId>,
    pub vnf_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionMask(pub Vec<bool>);

impl ActionMask {
    pub fn is_eligible(&self, a: NodeId) -> bool {
        self.0.get(a).copied().unwrap_or(false)
    }

    pub fn any(&self) -> bool {
        self.0.iter().any(|&b| b)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: EnvState,
    pub reward: f64,
    pub done: bool,
    pub accepted: bool,
}

/// Length of the feature vector for a substrate of `nodes` nodes.
pub fn feature_len(nodes: usize) -> usize {
    4 * nodes + 5
}

/// One placement episode. Holds the substrate exclusively until it ends.
pub struct PlacementEnv<'a> {
    psn: &'a mut PsnGraph,
    nspr: &'a NsprGraph,
    rewards: RewardConfig,
    mapping: Mapping,
    consumed: Reservation,
    next: usize,
    done: bool,
    accepted: bool,
    route: Option<RouteTree>,
    norm: Norms,
}

#[derive(Debug, Clone, Copy)]
struct Norms {
    cpu: f64,
    ram: f64,
    bw: f64,
}

impl<'a> PlacementEnv<'a> {
    pub fn reset(psn: &'a mut PsnGraph, nspr: &'a NsprGraph, rewards: RewardConfig) -> Result<Self> {
        if nspr.is_empty() {
            return Err(Error::Contract("cannot place an empty request".into()));
        }
        let norm = Norms {
            cpu: psn.nodes().iter().map(|n| n.max_cpu).max().unwrap() as f64,
            ram: psn.nodes().iter().map(|n| n.max_ram).max().unwrap() as f64,
            bw: psn.links().iter().map(|l| l.max_bw).max().unwrap_or(0) as f64,
        };
        Ok(PlacementEnv {
            psn,
            nspr,
            rewards,
            mapping: Mapping { x: Vec::with_capacity(nspr.len()), y: Vec::new(), z: false },
            consumed: Reservation::default(),
            next: 0,
            done: false,
            accepted: false,
            route: None,
            norm,
        })
    }

    pub fn psn(&self) -> &PsnGraph {
        self.psn
    }

    pub fn nspr(&self) -> &NsprGraph {
        self.nspr
    }

    pub fn mapping(&self) -> &Mapping {
        &self.mapping
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn accepted(&self) -> bool {
        self.accepted
    }

    /// Index of the VNF to place next.
    pub fn current_vnf(&self) -> usize {
        self.next
    }

    pub fn state(&self) -> EnvState {
        let n = self.psn.node_count();
        let mut placement_count = vec![0u32; n];
        for host in self.mapping.x.iter().flatten() {
            placement_count[*host] += 1;
        }
        let bw_agg = (0..n)
            .map(|v| self.psn.incident(v).iter().map(|&l| self.psn.link(l).cap_bw as u64).sum())
            .collect();
        let (req_cpu, req_ram, req_bw) = if self.done {
            (0, 0, 0)
        } else {
            let vnf = &self.nspr.vnfs[self.next];
            (vnf.req_cpu, vnf.req_ram, self.nspr.inbound_bw(self.next))
        };
        EnvState {
            cap_cpu: self.psn.nodes().iter().map(|n| n.cap_cpu).collect(),
            cap_ram: self.psn.nodes().iter().map(|n| n.cap_ram).collect(),
            bw_agg,
            placement_count,
            req_cpu,
            req_ram,
            req_bw,
            m_v: self.nspr.len() - self.next,
            prev_node: self.prev_host(),
            vnf_count: self.nspr.len(),
        }
    }

    fn prev_host(&self) -> Option<NodeId> {
        match self.next {
            0 => None,
            v => self.mapping.host(v - 1),
        }
    }

    /// Builds the route tree from the previous host; false for the first VNF.
    fn ensure_route(&mut self) -> bool {
        let Some(prev) = self.prev_host() else { return false };
        if self.route.is_none() {
            self.route = Some(RouteTree::build(self.psn, prev, self.nspr.inbound_bw(self.next)));
        }
        true
    }

    fn route(&mut self) -> Option<&RouteTree> {
        if self.ensure_route() {
            self.route.as_ref()
        } else {
            None
        }
    }

    /// Nodes able to host the current VNF and reachable from the previous host.
    pub fn valid_actions(&mut self) -> ActionMask {
        if self.done {
            return ActionMask(vec![false; self.psn.node_count()]);
        }
        let vnf = self.nspr.vnfs[self.next];
        let fits: Vec<bool> = self.psn.nodes().iter().map(|n| n.fits(vnf.req_cpu, vnf.req_ram)).collect();
        match self.route() {
            None => ActionMask(fits),
            Some(tree) => ActionMask(fits.iter().enumerate().map(|(i, &f)| f && tree.reachable(i)).collect()),
        }
    }

    /// Fixed-order features:
    /// `[cap_cpu/max_cpu, cap_ram/max_ram, bw_agg/bw_agg_max, placement_count/|V|]` per node,
    /// then `req_cpu/max_cpu*, req_ram/max_ram*, req_bw/max_bw*, m_v/|V|, (prev+1)/|N|`
    /// where starred maxima are taken over the whole substrate and a missing
    /// previous host encodes as 0.
    pub fn features(&self) -> Vec<f64> {
        let n = self.psn.node_count();
        let v_count = self.nspr.len() as f64;
        let mut counts = vec![0u32; n];
        for host in self.mapping.x.iter().flatten() {
            counts[*host] += 1;
        }
        let mut f = Vec::with_capacity(feature_len(n));
        for (i, node) in self.psn.nodes().iter().enumerate() {
            let (mut agg, mut agg_max) = (0u64, 0u64);
            for &l in self.psn.incident(i) {
                let link = self.psn.link(l);
                agg += link.cap_bw as u64;
                agg_max += link.max_bw as u64;
            }
            f.push(node.cap_cpu as f64 / node.max_cpu as f64);
            f.push(node.cap_ram as f64 / node.max_ram as f64);
            f.push(if agg_max == 0 { 0.0 } else { agg as f64 / agg_max as f64 });
            f.push(counts[i] as f64 / v_count);
        }
        if self.done {
            f.extend([0.0, 0.0, 0.0]);
        } else {
            let vnf = &self.nspr.vnfs[self.next];
            f.push(vnf.req_cpu as f64 / self.norm.cpu);
            f.push(vnf.req_ram as f64 / self.norm.ram);
            let bw = self.nspr.inbound_bw(self.next) as f64;
            f.push(if self.norm.bw > 0.0 { bw / self.norm.bw } else { 0.0 });
        }
        f.push((self.nspr.len() - self.next) as f64 / v_count);
        f.push(self.prev_host().map_or(0.0, |p| (p + 1) as f64 / n as f64));
        f
    }

    /// Heuristic recommendation for the current VNF on the live substrate.
    pub fn heuristic_candidate(&self, c2_norm: f64) -> Result<Option<CandidateScore>> {
        if self.done {
            return Err(Error::Contract("episode is over".into()));
        }
        heu_next_node(self.psn, self.nspr, &self.mapping, self.next, c2_norm)
    }

    fn reject(&mut self) -> Result<StepOutcome> {
        self.psn.restore(&self.consumed)?;
        self.consumed = Reservation::default();
        self.done = true;
        self.accepted = false;
        self.route = None;
        Ok(StepOutcome { next_state: self.state(), reward: self.rewards.r_reject, done: true, accepted: false })
    }

    /// Ends the episode as a rejection, e.g. when no node is eligible.
    pub fn forfeit(&mut self) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Contract("episode is over".into()));
        }
        self.reject()
    }

    pub fn step(&mut self, action: NodeId) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Contract("episode is over".into()));
        }
        if action >= self.psn.node_count() {
            return Err(Error::Contract(format!("action {action} out of range")));
        }
        let vnf = self.nspr.vnfs[self.next];
        if !self.psn.node(action).fits(vnf.req_cpu, vnf.req_ram) {
            return self.reject();
        }
        let bw = self.nspr.inbound_bw(self.next);
        let path = if self.ensure_route() {
            match self.route.as_ref().and_then(|tree| tree.path(self.psn, action)) {
                Some(p) => p,
                None => return self.reject(),
            }
        } else {
            Vec::new()
        };
        let mut step = Reservation::default();
        step.add_node(action, vnf.req_cpu, vnf.req_ram);
        for &l in &path {
            step.add_link(l, bw);
        }
        self.psn.consume(&step)?;
        self.consumed.merge(&step);
        self.route = None;

        let hops = path.len() as f64;
        let mut reward =
            self.rewards.c3_r * self.psn.node(action).residual_ratio() - self.rewards.c2_r * bw as f64 * hops;
        self.mapping.x.push(Some(action));
        if self.next > 0 {
            self.mapping.y.push(path);
        }
        self.next += 1;
        if self.next == self.nspr.len() {
            reward += self.rewards.r_success;
            self.mapping.z = true;
            self.done = true;
            self.accepted = true;
            self.psn.record(std::mem::take(&mut self.consumed));
        }
        Ok(StepOutcome { next_state: self.state(), reward, done: self.done, accepted: self.accepted })
    }
}
