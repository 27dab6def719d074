//! Substrate network and slice request graphs, topology generation and the
//! resource ledger used to allocate and release placements.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{join, KvFile};
use crate::error::{Error, Result};
use crate::objective::{check_feasible, Mapping};

pub type NodeId = usize;
pub type LinkId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhysicalNode {
    pub id: NodeId,
    pub cap_cpu: u32,
    pub cap_ram: u32,
    pub max_cpu: u32,
    pub max_ram: u32,
}

impl PhysicalNode {
    /// Residual CPU and RAM as fractions of the installed capacity.
    pub fn residual_ratio(&self) -> f64 {
        self.cap_cpu as f64 / self.max_cpu as f64 + self.cap_ram as f64 / self.max_ram as f64
    }

    pub fn fits(&self, cpu: u32, ram: u32) -> bool {
        self.cap_cpu >= cpu && self.cap_ram >= ram
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhysicalLink {
    pub id: LinkId,
    pub a: NodeId,
    pub b: NodeId,
    pub cap_bw: u32,
    pub max_bw: u32,
}

impl PhysicalLink {
    pub fn other(&self, n: NodeId) -> NodeId {
        if self.a == n {
            self.b
        } else {
            self.a
        }
    }
}

/// Aggregated per-node and per-link demand of a (partial) mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Reservation {
    /// `(node, cpu, ram)`, sorted by node, one entry per node.
    pub nodes: Vec<(NodeId, u32, u32)>,
    /// `(link, bw)`, sorted by link, one entry per link.
    pub links: Vec<(LinkId, u32)>,
}

impl Reservation {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.links.is_empty()
    }

    pub fn add_node(&mut self, node: NodeId, cpu: u32, ram: u32) {
        match self.nodes.binary_search_by_key(&node, |e| e.0) {
            Ok(i) => {
                self.nodes[i].1 += cpu;
                self.nodes[i].2 += ram;
            }
            Err(i) => self.nodes.insert(i, (node, cpu, ram)),
        }
    }

    pub fn add_link(&mut self, link: LinkId, bw: u32) {
        match self.links.binary_search_by_key(&link, |e| e.0) {
            Ok(i) => self.links[i].1 += bw,
            Err(i) => self.links.insert(i, (link, bw)),
        }
    }

    pub fn merge(&mut self, other: &Reservation) {
        for &(n, c, r) in &other.nodes {
            self.add_node(n, c, r);
        }
        for &(l, b) in &other.links {
            self.add_link(l, b);
        }
    }

    /// Demand of the placed part of `mapping`. Indices must be in range.
    pub fn of_mapping(nspr: &NsprGraph, mapping: &Mapping) -> Reservation {
        let mut res = Reservation::default();
        for (v, host) in mapping.x.iter().enumerate() {
            if let Some(n) = host {
                let vnf = &nspr.vnfs[v];
                res.add_node(*n, vnf.req_cpu, vnf.req_ram);
            }
        }
        for (k, path) in mapping.y.iter().enumerate() {
            for &l in path {
                res.add_link(l, nspr.vlinks[k].req_bw);
            }
        }
        res
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsnGraph {
    nodes: Vec<PhysicalNode>,
    links: Vec<PhysicalLink>,
    /// Incident links per node, sorted by the id of the opposite endpoint.
    adjacency: Vec<Vec<LinkId>>,
    /// Reservations currently held by allocated slices.
    ledger: Vec<Reservation>,
}

impl PsnGraph {
    /// Fresh substrate with every residual equal to its maximum.
    pub fn new(nodes: &[(u32, u32)], links: &[(NodeId, NodeId, u32)]) -> Result<Self> {
        let nodes = nodes
            .iter()
            .enumerate()
            .map(|(id, &(cpu, ram))| PhysicalNode { id, cap_cpu: cpu, cap_ram: ram, max_cpu: cpu, max_ram: ram })
            .collect();
        let links = links
            .iter()
            .enumerate()
            .map(|(id, &(a, b, bw))| PhysicalLink { id, a, b, cap_bw: bw, max_bw: bw })
            .collect();
        Self::from_parts(nodes, links)
    }

    /// Validates node/link invariants and connectivity, and builds the adjacency.
    pub fn from_parts(nodes: Vec<PhysicalNode>, links: Vec<PhysicalLink>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Contract("substrate needs at least one node".into()));
        }
        for (i, n) in nodes.iter().enumerate() {
            if n.id != i {
                return Err(Error::Contract(format!("node at position {i} has id {}", n.id)));
            }
            if n.max_cpu == 0 || n.max_ram == 0 {
                return Err(Error::Contract(format!("node {i} has zero installed capacity")));
            }
            if n.cap_cpu > n.max_cpu || n.cap_ram > n.max_ram {
                return Err(Error::Contract(format!("node {i} residual exceeds its maximum")));
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut seen = std::collections::BTreeSet::new();
        for (i, l) in links.iter().enumerate() {
            if l.id != i {
                return Err(Error::Contract(format!("link at position {i} has id {}", l.id)));
            }
            if l.a == l.b || l.a >= nodes.len() || l.b >= nodes.len() {
                return Err(Error::Contract(format!("link {i} has invalid endpoints ({}, {})", l.a, l.b)));
            }
            if l.cap_bw > l.max_bw {
                return Err(Error::Contract(format!("link {i} residual exceeds its maximum")));
            }
            if !seen.insert((l.a.min(l.b), l.a.max(l.b))) {
                return Err(Error::Contract(format!("duplicate link between {} and {}", l.a, l.b)));
            }
            adjacency[l.a].push(i);
            adjacency[l.b].push(i);
        }
        for (n, adj) in adjacency.iter_mut().enumerate() {
            adj.sort_by_key(|&l| links[l].other(n));
        }
        let psn = PsnGraph { nodes, links, adjacency, ledger: Vec::new() };
        if !psn.is_connected() {
            return Err(Error::Contract("substrate graph is not connected".into()));
        }
        Ok(psn)
    }

    pub fn nodes(&self) -> &[PhysicalNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[PhysicalLink] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> &PhysicalNode {
        &self.nodes[id]
    }

    pub fn link(&self, id: LinkId) -> &PhysicalLink {
        &self.links[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Incident link ids, ordered by neighbour id.
    pub fn incident(&self, node: NodeId) -> &[LinkId] {
        &self.adjacency[node]
    }

    pub fn link_between(&self, a: NodeId, b: NodeId) -> Option<LinkId> {
        self.adjacency[a].iter().copied().find(|&l| self.links[l].other(a) == b)
    }

    pub fn total_max_cpu(&self) -> u64 {
        self.nodes.iter().map(|n| n.max_cpu as u64).sum()
    }

    /// Number of slices currently holding resources.
    pub fn active_allocations(&self) -> usize {
        self.ledger.len()
    }

    /// True when every residual equals its installed maximum.
    pub fn is_pristine(&self) -> bool {
        self.nodes.iter().all(|n| n.cap_cpu == n.max_cpu && n.cap_ram == n.max_ram)
            && self.links.iter().all(|l| l.cap_bw == l.max_bw)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(n) = queue.pop_front() {
            for &l in &self.adjacency[n] {
                let m = self.links[l].other(n);
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Reserves resources for a complete or partial mapping. The PSN is left
    /// untouched when any constraint is violated.
    pub fn allocate(&mut self, nspr: &NsprGraph, mapping: &Mapping) -> Result<()> {
        let violations = check_feasible(self, nspr, mapping)?;
        if !violations.is_empty() {
            return Err(Error::Rejected(violations));
        }
        let res = Reservation::of_mapping(nspr, mapping);
        self.consume(&res)?;
        self.ledger.push(res);
        Ok(())
    }

    /// Returns the resources of a previously allocated mapping.
    pub fn release(&mut self, nspr: &NsprGraph, mapping: &Mapping) -> Result<()> {
        if mapping.x.len() > nspr.vnfs.len() || mapping.y.len() > nspr.vlinks.len() {
            return Err(Error::Contract("mapping larger than its request".into()));
        }
        let res = Reservation::of_mapping(nspr, mapping);
        let pos = self
            .ledger
            .iter()
            .position(|r| *r == res)
            .ok_or_else(|| Error::Logic("release of a mapping that is not allocated".into()))?;
        self.restore(&res)?;
        self.ledger.swap_remove(pos);
        Ok(())
    }

    /// Subtracts a reservation from the residuals without touching the ledger.
    pub(crate) fn consume(&mut self, res: &Reservation) -> Result<()> {
        for &(n, cpu, ram) in &res.nodes {
            let node = &self.nodes[n];
            if node.cap_cpu < cpu || node.cap_ram < ram {
                return Err(Error::Logic(format!("node {n} would go negative")));
            }
        }
        for &(l, bw) in &res.links {
            if self.links[l].cap_bw < bw {
                return Err(Error::Logic(format!("link {l} would go negative")));
            }
        }
        for &(n, cpu, ram) in &res.nodes {
            self.nodes[n].cap_cpu -= cpu;
            self.nodes[n].cap_ram -= ram;
        }
        for &(l, bw) in &res.links {
            self.links[l].cap_bw -= bw;
        }
        Ok(())
    }

    /// Adds a reservation back to the residuals without touching the ledger.
    pub(crate) fn restore(&mut self, res: &Reservation) -> Result<()> {
        for &(n, cpu, ram) in &res.nodes {
            let node = &self.nodes[n];
            if node.cap_cpu + cpu > node.max_cpu || node.cap_ram + ram > node.max_ram {
                return Err(Error::Logic(format!("node {n} would exceed its maximum")));
            }
        }
        for &(l, bw) in &res.links {
            let link = &self.links[l];
            if link.cap_bw + bw > link.max_bw {
                return Err(Error::Logic(format!("link {l} would exceed its maximum")));
            }
        }
        for &(n, cpu, ram) in &res.nodes {
            self.nodes[n].cap_cpu += cpu;
            self.nodes[n].cap_ram += ram;
        }
        for &(l, bw) in &res.links {
            self.links[l].cap_bw += bw;
        }
        Ok(())
    }

    /// Registers resources already consumed step by step as one allocation.
    pub(crate) fn record(&mut self, res: Reservation) {
        self.ledger.push(res);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vnf {
    pub index: usize,
    pub req_cpu: u32,
    pub req_ram: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VirtualLink {
    pub tail: usize,
    pub head: usize,
    pub req_bw: u32,
}

/// A slice request: a chain of VNFs joined by virtual links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NsprGraph {
    pub vnfs: Vec<Vnf>,
    pub vlinks: Vec<VirtualLink>,
}

impl NsprGraph {
    /// Builds a chain from `(cpu, ram)` per VNF and `bw` per consecutive pair.
    pub fn chain(reqs: &[(u32, u32)], bws: &[u32]) -> Result<Self> {
        if !reqs.is_empty() && bws.len() + 1 != reqs.len() {
            return Err(Error::Contract(format!(
                "chain of {} VNFs needs {} virtual links, got {}",
                reqs.len(),
                reqs.len() - 1,
                bws.len()
            )));
        }
        let vnfs = reqs
            .iter()
            .enumerate()
            .map(|(index, &(req_cpu, req_ram))| Vnf { index, req_cpu, req_ram })
            .collect();
        let vlinks = bws
            .iter()
            .enumerate()
            .map(|(k, &req_bw)| VirtualLink { tail: k, head: k + 1, req_bw })
            .collect();
        let nspr = NsprGraph { vnfs, vlinks };
        nspr.validate()?;
        Ok(nspr)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.vnfs.iter().enumerate() {
            if v.index != i {
                return Err(Error::Contract(format!("VNF at position {i} has index {}", v.index)));
            }
            if v.req_cpu == 0 && v.req_ram == 0 {
                return Err(Error::Contract(format!("VNF {i} requests no resources")));
            }
        }
        let expected = self.vnfs.len().saturating_sub(1);
        if self.vlinks.len() != expected {
            return Err(Error::Contract(format!("expected {expected} virtual links, got {}", self.vlinks.len())));
        }
        for (k, vl) in self.vlinks.iter().enumerate() {
            if vl.tail != k || vl.head != k + 1 {
                return Err(Error::Contract(format!("virtual link {k} is not ({k}, {})", k + 1)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vnfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vnfs.is_empty()
    }

    pub fn total_cpu(&self) -> u64 {
        self.vnfs.iter().map(|v| v.req_cpu as u64).sum()
    }

    pub fn total_ram(&self) -> u64 {
        self.vnfs.iter().map(|v| v.req_ram as u64).sum()
    }

    /// Bandwidth of the virtual link entering VNF `v` (0 for the first VNF).
    pub fn inbound_bw(&self, v: usize) -> u32 {
        if v == 0 {
            0
        } else {
            self.vlinks[v - 1].req_bw
        }
    }
}

/// Hierarchical substrate description: a tree grown tier by tier from
/// `tier_fanouts`, plus a ring of shortcut links inside every tier.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyConfig {
    pub node_count: usize,
    /// `tier_fanouts[0]` roots; every node of tier `t` has `tier_fanouts[t + 1]`
    /// children. The last fanout repeats for deeper tiers.
    pub tier_fanouts: Vec<usize>,
    /// Per-tier installed CPU; the last entry repeats for deeper tiers.
    pub tier_cpu: Vec<u32>,
    pub tier_ram: Vec<u32>,
    /// Bandwidth of links whose deeper endpoint lies in the tier.
    pub tier_bw: Vec<u32>,
    pub seed: u64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            node_count: 12,
            tier_fanouts: vec![2, 2, 2],
            tier_cpu: vec![100, 60, 40],
            tier_ram: vec![100, 60, 40],
            tier_bw: vec![100, 40, 20],
            seed: 1,
        }
    }
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 2 {
            return Err(Error::Config(format!("node_count must be >= 2, got {}", self.node_count)));
        }
        if self.tier_fanouts.is_empty() || self.tier_fanouts.contains(&0) {
            return Err(Error::Config("tier_fanouts must be non-empty and >= 1".into()));
        }
        for (name, caps) in [("tier_cpu", &self.tier_cpu), ("tier_ram", &self.tier_ram), ("tier_bw", &self.tier_bw)] {
            if caps.is_empty() || caps.contains(&0) {
                return Err(Error::Config(format!("{name} must be non-empty and > 0")));
            }
        }
        if self.tier_fanouts.len() == 1 && self.tier_fanouts[0] == 1 {
            return Err(Error::Config("a single tier with fanout 1 cannot grow past one node".into()));
        }
        Ok(())
    }

    pub fn read(kv: &mut KvFile) -> Result<Self> {
        let d = Self::default();
        let cfg = TopologyConfig {
            node_count: kv.take_or("node_count", d.node_count)?,
            tier_fanouts: kv.take_list("tier_fanouts")?.unwrap_or(d.tier_fanouts),
            tier_cpu: kv.take_list("tier_cpu")?.unwrap_or(d.tier_cpu),
            tier_ram: kv.take_list("tier_ram")?.unwrap_or(d.tier_ram),
            tier_bw: kv.take_list("tier_bw")?.unwrap_or(d.tier_bw),
            seed: kv.take_or("topology_seed", d.seed)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn write(&self, out: &mut String) {
        out.push_str(&format!("node_count = {}\n", self.node_count));
        out.push_str(&format!("tier_fanouts = {}\n", join(&self.tier_fanouts)));
        out.push_str(&format!("tier_cpu = {}\n", join(&self.tier_cpu)));
        out.push_str(&format!("tier_ram = {}\n", join(&self.tier_ram)));
        out.push_str(&format!("tier_bw = {}\n", join(&self.tier_bw)));
        out.push_str(&format!("topology_seed = {}\n", self.seed));
    }
}

fn tier_value<T: Copy>(values: &[T], tier: usize) -> T {
    values[tier.min(values.len() - 1)]
}

/// Generates the hierarchical substrate described by `config`.
pub fn build_psn(config: &TopologyConfig) -> Result<PsnGraph> {
    config.validate()?;
    let mut caps: Vec<(u32, u32)> = Vec::with_capacity(config.node_count);
    let mut links: Vec<(NodeId, NodeId, u32)> = Vec::new();
    let mut tiers: Vec<Vec<NodeId>> = Vec::new();

    let roots = config.tier_fanouts[0].min(config.node_count);
    tiers.push((0..roots).collect());
    caps.extend(std::iter::repeat((tier_value(&config.tier_cpu, 0), tier_value(&config.tier_ram, 0))).take(roots));

    while caps.len() < config.node_count {
        let t = tiers.len();
        let fanout = tier_value(&config.tier_fanouts, t);
        let cap = (tier_value(&config.tier_cpu, t), tier_value(&config.tier_ram, t));
        let bw = tier_value(&config.tier_bw, t);
        let mut tier = Vec::new();
        'parents: for &parent in &tiers[t - 1] {
            for _ in 0..fanout {
                if caps.len() == config.node_count {
                    break 'parents;
                }
                let id = caps.len();
                caps.push(cap);
                links.push((parent, id, bw));
                tier.push(id);
            }
        }
        tiers.push(tier);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for (t, tier) in tiers.iter().enumerate() {
        if tier.len() < 2 {
            continue;
        }
        let bw = tier_value(&config.tier_bw, t);
        let mut order = tier.clone();
        order.shuffle(&mut rng);
        let hops = if order.len() == 2 { 1 } else { order.len() };
        for i in 0..hops {
            let (a, b) = (order[i], order[(i + 1) % order.len()]);
            links.push((a.min(b), a.max(b), bw));
        }
    }

    PsnGraph::new(&caps, &links)
}
