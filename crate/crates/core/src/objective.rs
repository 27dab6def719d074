//! Constraint checking and the weighted placement score.
//!
//! The score of a mapping is
//!
//! ```text
//! c1 * z  -  c2 * sum_k req_bw(k) * |path(k)|  +  c3 * sum_v (cap_cpu'/max_cpu + cap_ram'/max_ram)
//! ```
//!
//! where the primed residuals of the node hosting VNF `v` are taken right
//! after VNFs `0..=v` have been placed, in chain order. For a mapping whose
//! nodes each host at most one VNF this is the residual after the whole
//! mapping; when VNFs share a node, each VNF sees the node as it was left by
//! the chain prefix ending at it.

use crate::config::KvFile;
use crate::error::{Error, Result};
use crate::model::{LinkId, NodeId, NsprGraph, PsnGraph, Reservation};

/// Decision variables of a placement.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Mapping {
    /// Host of each VNF; entries past the end count as unplaced.
    pub x: Vec<Option<NodeId>>,
    /// Physical links carrying each virtual link, in order from the tail's host.
    pub y: Vec<Vec<LinkId>>,
    /// Full-placement flag.
    pub z: bool,
}

impl Mapping {
    pub fn empty() -> Self {
        Mapping::default()
    }

    /// Complete mapping from hosts and paths.
    pub fn complete(x: Vec<NodeId>, y: Vec<Vec<LinkId>>) -> Self {
        Mapping { x: x.into_iter().map(Some).collect(), y, z: true }
    }

    pub fn host(&self, v: usize) -> Option<NodeId> {
        self.x.get(v).copied().flatten()
    }

    pub fn placed_count(&self) -> usize {
        self.x.iter().filter(|h| h.is_some()).count()
    }

    pub fn total_hops(&self) -> usize {
        self.y.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl ObjectiveWeights {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        let w = ObjectiveWeights { c1, c2, c3 };
        if [c1, c2, c3].iter().any(|c| !c.is_finite() || *c < 0.0) || (c1 == 0.0 && c2 == 0.0 && c3 == 0.0) {
            return Err(Error::Config(format!("invalid objective weights ({c1}, {c2}, {c3})")));
        }
        Ok(w)
    }

    /// Default weights for a request: acceptance dominates.
    pub fn default_for(nspr: &NsprGraph) -> Self {
        ObjectiveWeights { c1: nspr.len() as f64 * 100.0, c2: 1.0, c3: 1.0 }
    }
}

/// Weight settings from configuration; `c1` defaults to `|V| * 100` per request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightsConfig {
    pub c1: Option<f64>,
    pub c2: f64,
    pub c3: f64,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig { c1: None, c2: 1.0, c3: 1.0 }
    }
}

impl WeightsConfig {
    pub fn resolve(&self, nspr: &NsprGraph) -> ObjectiveWeights {
        ObjectiveWeights {
            c1: self.c1.unwrap_or(nspr.len() as f64 * 100.0),
            c2: self.c2,
            c3: self.c3,
        }
    }

    pub fn read(kv: &mut KvFile) -> Result<Self> {
        let c1 = match kv.take::<String>("c1")? {
            None => None,
            Some(s) if s == "auto" => None,
            Some(s) => Some(s.parse::<f64>().map_err(|e| Error::Config(format!("bad c1 `{s}`: {e}")))?),
        };
        let cfg = WeightsConfig { c1, c2: kv.take_or("c2", 1.0)?, c3: kv.take_or("c3", 1.0)? };
        ObjectiveWeights::new(cfg.c1.unwrap_or(1.0), cfg.c2, cfg.c3)?;
        Ok(cfg)
    }

    pub fn write(&self, out: &mut String) {
        match self.c1 {
            Some(c1) => out.push_str(&format!("c1 = {c1}\n")),
            None => out.push_str("c1 = auto\n"),
        }
        out.push_str(&format!("c2 = {}\nc3 = {}\n", self.c2, self.c3));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    NodeCpu,
    NodeRam,
    LinkBw,
    PathDisconnected,
    IncompleteMapping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Node id, link id, virtual link index or VNF index depending on `kind`.
    pub subject: usize,
    /// Units short for capacity kinds, 0 otherwise.
    pub deficit: u64,
}

fn check_indices(psn: &PsnGraph, nspr: &NsprGraph, mapping: &Mapping) -> Result<()> {
    if mapping.x.len() > nspr.vnfs.len() {
        return Err(Error::Contract(format!(
            "mapping places {} VNFs but the request has {}",
            mapping.x.len(),
            nspr.vnfs.len()
        )));
    }
    if mapping.y.len() > nspr.vlinks.len() {
        return Err(Error::Contract(format!(
            "mapping routes {} virtual links but the request has {}",
            mapping.y.len(),
            nspr.vlinks.len()
        )));
    }
    if let Some(n) = mapping.x.iter().flatten().find(|&&n| n >= psn.node_count()) {
        return Err(Error::Contract(format!("node id {n} out of range")));
    }
    if let Some(l) = mapping.y.iter().flatten().find(|&&l| l >= psn.link_count()) {
        return Err(Error::Contract(format!("link id {l} out of range")));
    }
    Ok(())
}

/// Follows `path` from `from`; returns the end node if the links chain up
/// without repeating a link.
fn walk(psn: &PsnGraph, from: NodeId, path: &[LinkId]) -> Option<NodeId> {
    let mut at = from;
    for (i, &l) in path.iter().enumerate() {
        if path[..i].contains(&l) {
            return None;
        }
        let link = psn.link(l);
        if link.a == at {
            at = link.b;
        } else if link.b == at {
            at = link.a;
        } else {
            return None;
        }
    }
    Some(at)
}

/// Lists every constraint the mapping breaches against the current residuals.
pub fn check_feasible(psn: &PsnGraph, nspr: &NsprGraph, mapping: &Mapping) -> Result<Vec<Violation>> {
    check_indices(psn, nspr, mapping)?;
    let mut out = Vec::new();

    let unplaced = nspr.vnfs.len() - mapping.placed_count();
    if mapping.z != (unplaced == 0) {
        let first = (0..nspr.vnfs.len()).find(|&v| mapping.host(v).is_none()).unwrap_or(0);
        out.push(Violation { kind: ViolationKind::IncompleteMapping, subject: first, deficit: unplaced as u64 });
    }

    for (k, path) in mapping.y.iter().enumerate() {
        let vl = &nspr.vlinks[k];
        let ok = match (mapping.host(vl.tail), mapping.host(vl.head)) {
            (Some(a), Some(b)) => walk(psn, a, path) == Some(b),
            _ => path.is_empty(),
        };
        if !ok {
            out.push(Violation { kind: ViolationKind::PathDisconnected, subject: k, deficit: 0 });
        }
    }
    for k in mapping.y.len()..nspr.vlinks.len() {
        let vl = &nspr.vlinks[k];
        if let (Some(a), Some(b)) = (mapping.host(vl.tail), mapping.host(vl.head)) {
            if a != b {
                out.push(Violation { kind: ViolationKind::PathDisconnected, subject: k, deficit: 0 });
            }
        }
    }

    let demand = Reservation::of_mapping(nspr, mapping);
    for &(n, cpu, ram) in &demand.nodes {
        let node = psn.node(n);
        if cpu > node.cap_cpu {
            out.push(Violation { kind: ViolationKind::NodeCpu, subject: n, deficit: (cpu - node.cap_cpu) as u64 });
        }
        if ram > node.cap_ram {
            out.push(Violation { kind: ViolationKind::NodeRam, subject: n, deficit: (ram - node.cap_ram) as u64 });
        }
    }
    for &(l, bw) in &demand.links {
        let link = psn.link(l);
        if bw > link.cap_bw {
            out.push(Violation { kind: ViolationKind::LinkBw, subject: l, deficit: (bw - link.cap_bw) as u64 });
        }
    }
    Ok(out)
}

/// Bandwidth cost `sum_k req_bw(k) * |path(k)|`.
pub fn bandwidth_cost(nspr: &NsprGraph, mapping: &Mapping) -> f64 {
    mapping
        .y
        .iter()
        .enumerate()
        .map(|(k, path)| nspr.vlinks[k].req_bw as f64 * path.len() as f64)
        .sum()
}

/// Sum over placed VNFs of the host's residual CPU and RAM ratios right after
/// the chain prefix ending at that VNF is placed.
pub fn load_balance_term(psn: &PsnGraph, nspr: &NsprGraph, mapping: &Mapping) -> f64 {
    let mut used: Vec<(NodeId, u32, u32)> = Vec::new();
    let mut total = 0.0;
    for (v, host) in mapping.x.iter().enumerate() {
        let Some(n) = *host else { continue };
        let vnf = &nspr.vnfs[v];
        let entry = match used.iter_mut().find(|e| e.0 == n) {
            Some(e) => e,
            None => {
                used.push((n, 0, 0));
                used.last_mut().unwrap()
            }
        };
        entry.1 += vnf.req_cpu;
        entry.2 += vnf.req_ram;
        let node = psn.node(n);
        total += (node.cap_cpu - entry.1) as f64 / node.max_cpu as f64 + (node.cap_ram - entry.2) as f64 / node.max_ram as f64;
    }
    total
}

/// Weighted score of a feasible mapping evaluated on the residuals before it is applied.
pub fn objective_value(psn: &PsnGraph, nspr: &NsprGraph, mapping: &Mapping, w: &ObjectiveWeights) -> Result<f64> {
    let violations = check_feasible(psn, nspr, mapping)?;
    if !violations.is_empty() {
        return Err(Error::Contract(format!(
            "objective requested for an infeasible mapping ({} violations)",
            violations.len()
        )));
    }
    let z = if mapping.z { 1.0 } else { 0.0 };
    Ok(w.c1 * z - w.c2 * bandwidth_cost(nspr, mapping) + w.c3 * load_balance_term(psn, nspr, mapping))
}
