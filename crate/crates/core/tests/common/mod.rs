#![allow(dead_code)]

use std::ops::RangeInclusive;

use hadrl_core::agent::{Trajectory, TrajectoryStep};
use hadrl_core::env::ActionMask;
use hadrl_core::model::{NodeId, NsprGraph, PsnGraph};
use hadrl_core::objective::{check_feasible, objective_value, Mapping, ObjectiveWeights};
use rand::Rng;

/// Connected random substrate: a random spanning tree plus extra edges.
pub fn random_psn<R: Rng>(rng: &mut R, nodes: RangeInclusive<usize>, extra: RangeInclusive<usize>, cap: u32, bw: u32) -> PsnGraph {
    let nodes = rng.random_range(nodes);
    let extra = rng.random_range(extra);
    let caps: Vec<(u32, u32)> = (0..nodes).map(|_| (rng.random_range(1..=cap), rng.random_range(1..=cap))).collect();
    let mut links = Vec::new();
    for i in 1..nodes {
        let j = rng.random_range(0..i);
        links.push((j, i, rng.random_range(1..=bw)));
    }
    for _ in 0..extra {
        let a = rng.random_range(0..nodes);
        let b = rng.random_range(0..nodes);
        if a != b && !links.iter().any(|&(x, y, _)| (x, y) == (a, b) || (x, y) == (b, a)) {
            links.push((a, b, rng.random_range(1..=bw)));
        }
    }
    PsnGraph::new(&caps, &links).unwrap()
}

pub fn random_chain<R: Rng>(rng: &mut R, vnfs: RangeInclusive<usize>, req: u32, bw: u32) -> NsprGraph {
    let vnfs = rng.random_range(vnfs);
    let reqs: Vec<(u32, u32)> = (0..vnfs).map(|_| (rng.random_range(1..=req), rng.random_range(1..=req))).collect();
    let bws: Vec<u32> = (1..vnfs).map(|_| rng.random_range(1..=bw)).collect();
    NsprGraph::chain(&reqs, &bws).unwrap()
}

/// Simple paths between two nodes found by trying every ordered choice of
/// intermediate nodes, independent of any graph search.
pub fn flat_paths(psn: &PsnGraph, src: NodeId, dst: NodeId) -> Vec<Vec<usize>> {
    if src == dst {
        return vec![Vec::new()];
    }
    let others: Vec<NodeId> = (0..psn.node_count()).filter(|&n| n != src && n != dst).collect();
    let mut out = Vec::new();
    let mut seqs: Vec<Vec<NodeId>> = vec![Vec::new()];
    for _ in 0..=others.len() {
        let mut next = Vec::new();
        for seq in &seqs {
            let mut nodes = vec![src];
            nodes.extend(seq);
            nodes.push(dst);
            if let Some(links) = nodes.windows(2).map(|w| psn.link_between(w[0], w[1])).collect::<Option<Vec<_>>>() {
                out.push(links);
            }
            for &o in &others {
                if !seq.contains(&o) {
                    let mut s = seq.clone();
                    s.push(o);
                    next.push(s);
                }
            }
        }
        seqs = next;
    }
    out
}

/// Best objective over every host assignment and every combination of simple paths.
pub fn brute_force(psn: &PsnGraph, nspr: &NsprGraph, w: &ObjectiveWeights) -> Option<f64> {
    let n = psn.node_count();
    let v = nspr.len();
    let mut best: Option<f64> = None;
    let mut x = vec![0usize; v];
    loop {
        let per_link: Vec<Vec<Vec<usize>>> = (1..v).map(|k| flat_paths(psn, x[k - 1], x[k])).collect();
        let mut idx = vec![0usize; per_link.len()];
        if per_link.iter().all(|p| !p.is_empty()) {
            loop {
                let y: Vec<Vec<usize>> = idx.iter().zip(&per_link).map(|(&i, p)| p[i].clone()).collect();
                let m = Mapping::complete(x.clone(), y);
                if check_feasible(psn, nspr, &m).unwrap().is_empty() {
                    let s = objective_value(psn, nspr, &m, w).unwrap();
                    if best.is_none_or(|b| s > b) {
                        best = Some(s);
                    }
                }
                if !odometer(&mut idx, |k| per_link[k].len()) {
                    break;
                }
            }
        }
        if !odometer(&mut x, |_| n) {
            break;
        }
    }
    best
}

/// Advances a mixed-radix counter; false once it wraps around.
pub fn odometer(digits: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for k in 0..digits.len() {
        digits[k] += 1;
        if digits[k] < radix(k) {
            return true;
        }
        digits[k] = 0;
    }
    false
}

pub fn random_traj<R: Rng>(rng: &mut R, inputs: usize, actions: usize) -> Trajectory {
    let steps = (0..rng.random_range(1..=4))
        .map(|_| {
            let mut mask: Vec<bool> = (0..actions).map(|_| rng.random_bool(0.7)).collect();
            let action = rng.random_range(0..actions);
            mask[action] = true;
            TrajectoryStep {
                features: (0..inputs).map(|_| rng.random_range(-1.0..1.0)).collect(),
                mask: ActionMask(mask),
                action,
                reward: rng.random_range(-2.0..2.0),
                logits: Vec::new(),
            }
        })
        .collect();
    Trajectory { steps, terminal: true, bootstrap: None }
}

/// Norm-wise relative difference of two gradient vectors.
pub fn rel_err(a: &[f64], n: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(n).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(n.iter().map(|x| x * x).sum::<f64>().sqrt());
    diff / scale.max(1e-12)
}
