//! Exact placement for small instances by depth-first branch and bound.
//!
//! VNFs are assigned in chain order. Each virtual link is branched over every
//! simple path with enough residual bandwidth, shortest first, so the search
//! covers the whole decision space and the best mapping found with an
//! unexhausted budget is optimal.

use std::time::{Duration, Instant};

use crate::model::{LinkId, NodeId, NsprGraph, PsnGraph, Reservation};
use crate::objective::{objective_value, Mapping, ObjectiveWeights};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchLimits {
    pub max_nodes: u64,
    pub max_time: Option<Duration>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_nodes: 5_000_000, max_time: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best: Option<(Mapping, f64)>,
    pub nodes_explored: u64,
    /// False when the budget ran out; `best` is then only the best seen so far.
    pub certified: bool,
}

const PRUNE_SLACK: f64 = 1e-9;

struct Search<'a> {
    original: &'a PsnGraph,
    work: PsnGraph,
    nspr: &'a NsprGraph,
    w: ObjectiveWeights,
    limits: SearchLimits,
    started: Instant,
    explored: u64,
    exhausted: bool,
    best: Option<(Mapping, f64)>,
    mapping: Mapping,
}

impl Search<'_> {
    fn out_of_budget(&mut self) -> bool {
        if self.explored >= self.limits.max_nodes
            || self.limits.max_time.is_some_and(|t| self.started.elapsed() >= t)
        {
            self.exhausted = true;
        }
        self.exhausted
    }

    fn dfs(&mut self, v: usize, partial: f64) {
        if self.out_of_budget() {
            return;
        }
        self.explored += 1;
        let n_vnf = self.nspr.len();
        if v == n_vnf {
            self.mapping.z = true;
            let score = objective_value(self.original, self.nspr, &self.mapping, &self.w)
                .expect("search only builds feasible mappings");
            self.mapping.z = false;
            if self.best.as_ref().is_none_or(|(_, s)| score > *s) {
                let mut m = self.mapping.clone();
                m.z = true;
                self.best = Some((m, score));
            }
            return;
        }
        let bound = partial + self.w.c1 + self.w.c3 * 2.0 * (n_vnf - v) as f64;
        if self.best.as_ref().is_some_and(|(_, s)| bound < *s - PRUNE_SLACK) {
            return;
        }

        let vnf = self.nspr.vnfs[v];
        let bw = self.nspr.inbound_bw(v);
        for node in 0..self.work.node_count() {
            if !self.work.node(node).fits(vnf.req_cpu, vnf.req_ram) {
                continue;
            }
            let paths = match v {
                0 => vec![Vec::new()],
                _ => simple_paths(&self.work, self.mapping.host(v - 1).unwrap(), node, bw),
            };
            for path in paths {
                let mut step = Reservation::default();
                step.add_node(node, vnf.req_cpu, vnf.req_ram);
                for &l in &path {
                    step.add_link(l, bw);
                }
                self.work.consume(&step).expect("branch fits");
                let host = self.work.node(node);
                let gain = self.w.c3 * host.residual_ratio() - self.w.c2 * bw as f64 * path.len() as f64;
                self.mapping.x.push(Some(node));
                if v > 0 {
                    self.mapping.y.push(path);
                }
                self.dfs(v + 1, partial + gain);
                if v > 0 {
                    self.mapping.y.pop();
                }
                self.mapping.x.pop();
                self.work.restore(&step).expect("undo of a consumed step");
                if self.exhausted {
                    return;
                }
            }
        }
    }
}

/// Every simple path from `src` to `dst` over links with residual bandwidth
/// of at least `req_bw`, ordered by hop count, then by node sequence.
pub fn simple_paths(psn: &PsnGraph, src: NodeId, dst: NodeId, req_bw: u32) -> Vec<Vec<LinkId>> {
    if src == dst {
        return vec![Vec::new()];
    }
    fn extend(
        psn: &PsnGraph,
        at: NodeId,
        dst: NodeId,
        req_bw: u32,
        visited: &mut Vec<bool>,
        nodes: &mut Vec<NodeId>,
        links: &mut Vec<LinkId>,
        out: &mut Vec<(Vec<NodeId>, Vec<LinkId>)>,
    ) {
        if at == dst {
            out.push((nodes.clone(), links.clone()));
            return;
        }
        for &l in psn.incident(at) {
            let link = psn.link(l);
            let next = link.other(at);
            if link.cap_bw < req_bw || visited[next] {
                continue;
            }
            visited[next] = true;
            nodes.push(next);
            links.push(l);
            extend(psn, next, dst, req_bw, visited, nodes, links, out);
            links.pop();
            nodes.pop();
            visited[next] = false;
        }
    }
    let mut visited = vec![false; psn.node_count()];
    visited[src] = true;
    let mut out = Vec::new();
    extend(psn, src, dst, req_bw, &mut visited, &mut vec![src], &mut Vec::new(), &mut out);
    out.sort_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| a.0.cmp(&b.0)));
    out.into_iter().map(|(_, links)| links).collect()
}

/// Best feasible mapping of `nspr` onto `psn` under weights `w`.
pub fn exact_place(psn: &PsnGraph, nspr: &NsprGraph, w: &ObjectiveWeights, limits: SearchLimits) -> OracleResult {
    let free_cpu: u64 = psn.nodes().iter().map(|n| n.cap_cpu as u64).sum();
    let free_ram: u64 = psn.nodes().iter().map(|n| n.cap_ram as u64).sum();
    if nspr.is_empty() || nspr.total_cpu() > free_cpu || nspr.total_ram() > free_ram {
        return OracleResult { best: None, nodes_explored: 0, certified: true };
    }
    let mut search = Search {
        original: psn,
        work: psn.clone(),
        nspr,
        w: *w,
        limits,
        started: Instant::now(),
        explored: 0,
        exhausted: false,
        best: None,
        mapping: Mapping { x: Vec::with_capacity(nspr.len()), y: Vec::new(), z: false },
    };
    search.dfs(0, 0.0);
    OracleResult { best: search.best, nodes_explored: search.explored, certified: !search.exhausted }
}
