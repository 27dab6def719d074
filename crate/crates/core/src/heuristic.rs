//! Greedy placement heuristic and bandwidth-constrained routing.
//!
//! VNFs are placed one after another. Every node that can host the current
//! VNF and is reachable from the previous VNF's host over links with enough
//! residual bandwidth is scored by
//!
//! ```text
//! cap_cpu'/max_cpu + cap_ram'/max_ram - c2_norm * hops
//! ```
//!
//! with the residuals taken after the hypothetical placement. The best node
//! wins, lowest id on ties. There is no backtracking: a VNF without a
//! candidate rejects the whole request.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::{LinkId, NodeId, NsprGraph, PsnGraph, Reservation};
use crate::objective::Mapping;

pub const DEFAULT_C2_NORM: f64 = 0.1;

/// Breadth-first tree over the links with at least `req_bw` residual bandwidth.
///
/// Neighbours are expanded in increasing id order, so the tree path to every
/// node is the lexicographically smallest node sequence among minimum-hop paths.
#[derive(Debug, Clone)]
pub struct RouteTree {
    src: NodeId,
    hops: Vec<Option<usize>>,
    parent: Vec<Option<LinkId>>,
}

impl RouteTree {
    pub fn build(psn: &PsnGraph, src: NodeId, req_bw: u32) -> Self {
        let n = psn.node_count();
        let mut hops = vec![None; n];
        let mut parent = vec![None; n];
        let mut queue = VecDeque::with_capacity(n);
        hops[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let d = hops[u].unwrap();
            for &l in psn.incident(u) {
                let link = psn.link(l);
                if link.cap_bw < req_bw {
                    continue;
                }
                let v = link.other(u);
                if hops[v].is_none() {
                    hops[v] = Some(d + 1);
                    parent[v] = Some(l);
                    queue.push_back(v);
                }
            }
        }
        RouteTree { src, hops, parent }
    }

    pub fn hops(&self, dst: NodeId) -> Option<usize> {
        self.hops[dst]
    }

    pub fn reachable(&self, dst: NodeId) -> bool {
        self.hops[dst].is_some()
    }

    /// Links from the source to `dst`, in travel order.
    pub fn path(&self, psn: &PsnGraph, dst: NodeId) -> Option<Vec<LinkId>> {
        self.hops[dst]?;
        let mut path = Vec::new();
        let mut at = dst;
        while at != self.src {
            let l = self.parent[at].expect("reachable node has a parent");
            path.push(l);
            at = psn.link(l).other(at);
        }
        path.reverse();
        Some(path)
    }
}

/// Minimum-hop path from `src` to `dst` using only links with residual
/// bandwidth of at least `req_bw`; ties go to the smallest node sequence.
pub fn map_virtual_link(psn: &PsnGraph, src: NodeId, dst: NodeId, req_bw: u32) -> Option<Vec<LinkId>> {
    if src == dst {
        return Some(Vec::new());
    }
    RouteTree::build(psn, src, req_bw).path(psn, dst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub node: NodeId,
    pub score: f64,
    /// Route from the previous VNF's host; empty for VNF 0 or co-location.
    pub path: Vec<LinkId>,
}

/// Scores the hosts for VNF `vnf_index`, given that `partial` holds VNFs
/// `0..vnf_index` and `psn` already reflects them.
pub fn heu_next_node(
    psn: &PsnGraph,
    nspr: &NsprGraph,
    partial: &Mapping,
    vnf_index: usize,
    c2_norm: f64,
) -> Result<Option<CandidateScore>> {
    if vnf_index >= nspr.len() {
        return Err(Error::Contract(format!("VNF {vnf_index} out of range")));
    }
    let in_order = (0..nspr.len()).all(|v| partial.host(v).is_some() == (v < vnf_index));
    if !in_order {
        return Err(Error::Contract(format!("VNFs must be placed in chain order before VNF {vnf_index}")));
    }
    let vnf = &nspr.vnfs[vnf_index];
    let tree = match vnf_index {
        0 => None,
        v => {
            let prev = partial.host(v - 1).unwrap();
            Some(RouteTree::build(psn, prev, nspr.inbound_bw(v)))
        }
    };

    let mut best: Option<(NodeId, f64)> = None;
    for node in psn.nodes() {
        if !node.fits(vnf.req_cpu, vnf.req_ram) {
            continue;
        }
        let hops = match &tree {
            None => 0,
            Some(t) => match t.hops(node.id) {
                Some(h) => h,
                None => continue,
            },
        };
        let score = (node.cap_cpu - vnf.req_cpu) as f64 / node.max_cpu as f64
            + (node.cap_ram - vnf.req_ram) as f64 / node.max_ram as f64
            - c2_norm * hops as f64;
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((node.id, score));
        }
    }
    Ok(best.map(|(node, score)| CandidateScore {
        node,
        score,
        path: tree.map(|t| t.path(psn, node).unwrap()).unwrap_or_default(),
    }))
}

/// Places the whole chain greedily. Returns `None` when some VNF has no host.
pub fn heu_place(psn: &PsnGraph, nspr: &NsprGraph, c2_norm: f64) -> Option<Mapping> {
    let mut work = psn.clone();
    let mut mapping = Mapping { x: Vec::with_capacity(nspr.len()), y: Vec::with_capacity(nspr.vlinks.len()), z: false };
    for v in 0..nspr.len() {
        let cand = heu_next_node(&work, nspr, &mapping, v, c2_norm).expect("chain order holds")?;
        let vnf = &nspr.vnfs[v];
        let mut step = Reservation::default();
        step.add_node(cand.node, vnf.req_cpu, vnf.req_ram);
        for &l in &cand.path {
            step.add_link(l, nspr.inbound_bw(v));
        }
        work.consume(&step).expect("candidate fits");
        mapping.x.push(Some(cand.node));
        if v > 0 {
            mapping.y.push(cand.path);
        }
    }
    mapping.z = true;
    Some(mapping)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::check_feasible;

    fn diamond(saturated: bool) -> PsnGraph {
        // 0 - 1 - 3 and 0 - 2 - 3
        let bw01 = if saturated { 1 } else { 10 };
        PsnGraph::new(&[(10, 10); 4], &[(0, 1, bw01), (1, 3, 10), (0, 2, 10), (2, 3, 10)]).unwrap()
    }

    #[test]
    fn colocation_is_an_empty_path() {
        assert_eq!(map_virtual_link(&diamond(false), 2, 2, 100), Some(vec![]));
    }

    #[test]
    fn line_graph_has_unique_path() {
        let psn = PsnGraph::new(&[(1, 1); 3], &[(0, 1, 5), (1, 2, 5)]).unwrap();
        assert_eq!(map_virtual_link(&psn, 0, 2, 5), Some(vec![0, 1]));
        assert_eq!(map_virtual_link(&psn, 2, 0, 5), Some(vec![1, 0]));
        assert_eq!(map_virtual_link(&psn, 0, 2, 6), None);
    }

    #[test]
    fn diamond_prefers_smaller_ids_then_routes_around_saturation() {
        assert_eq!(map_virtual_link(&diamond(false), 0, 3, 5), Some(vec![0, 1]));
        assert_eq!(map_virtual_link(&diamond(true), 0, 3, 5), Some(vec![2, 3]));
    }

    #[test]
    fn single_eligible_node_wins() {
        let psn = PsnGraph::new(&[(1, 1), (5, 5), (1, 1)], &[(0, 1, 1), (1, 2, 1)]).unwrap();
        let nspr = NsprGraph::chain(&[(3, 3)], &[]).unwrap();
        let c = heu_next_node(&psn, &nspr, &Mapping::empty(), 0, 0.1).unwrap().unwrap();
        assert_eq!(c.node, 1);
        assert!(c.path.is_empty());
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let psn = PsnGraph::new(&[(10, 10), (10, 10)], &[(0, 1, 1)]).unwrap();
        let nspr = NsprGraph::chain(&[(1, 1)], &[]).unwrap();
        let c = heu_next_node(&psn, &nspr, &Mapping::empty(), 0, 0.1).unwrap().unwrap();
        assert_eq!(c.node, 0);
    }

    #[test]
    fn colocation_beats_two_hop_alternative() {
        // prev host 0 at (60/100 left after VNF 0 is placed); node 2 is fresh but two hops away.
        let mut psn = PsnGraph::new(&[(100, 100), (1, 1), (100, 100)], &[(0, 1, 10), (1, 2, 10)]).unwrap();
        let nspr = NsprGraph::chain(&[(4, 4), (4, 4)], &[1]).unwrap();
        let mut first = Reservation::default();
        first.add_node(0, 4, 4);
        psn.consume(&first).unwrap();
        let partial = Mapping { x: vec![Some(0)], y: vec![], z: false };
        let c = heu_next_node(&psn, &nspr, &partial, 1, DEFAULT_C2_NORM).unwrap().unwrap();
        // co-location: 2 * 0.92 = 1.84; two hops: 2 * 0.96 - 0.2 = 1.72
        assert_eq!(c.node, 0);
        assert!((c.score - 1.84).abs() < 1e-12);
    }

    #[test]
    fn out_of_order_request_is_contract_error() {
        let psn = diamond(false);
        let nspr = NsprGraph::chain(&[(1, 1), (1, 1)], &[1]).unwrap();
        assert!(heu_next_node(&psn, &nspr, &Mapping::empty(), 1, 0.1).is_err());
    }

    #[test]
    fn one_big_node_hosts_everything() {
        let psn = PsnGraph::new(&[(100, 100), (5, 5), (5, 5)], &[(0, 1, 10), (0, 2, 10)]).unwrap();
        let nspr = NsprGraph::chain(&[(3, 3); 4], &[1, 1, 1]).unwrap();
        let m = heu_place(&psn, &nspr, DEFAULT_C2_NORM).unwrap();
        assert_eq!(m.x, vec![Some(0); 4]);
        assert!(m.y.iter().all(Vec::is_empty));
        assert!(m.z);
        assert!(check_feasible(&psn, &nspr, &m).unwrap().is_empty());
    }

    #[test]
    fn oversized_request_is_rejected_without_side_effects() {
        let psn = diamond(false);
        let before = psn.clone();
        let nspr = NsprGraph::chain(&[(11, 1)], &[]).unwrap();
        assert!(heu_place(&psn, &nspr, DEFAULT_C2_NORM).is_none());
        let many = NsprGraph::chain(&[(9, 9); 5], &[1; 4]).unwrap();
        assert!(heu_place(&psn, &many, DEFAULT_C2_NORM).is_none());
        assert_eq!(psn, before);
    }
}
