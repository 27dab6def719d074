mod common;

use hadrl_core::heuristic::{map_virtual_link, RouteTree};
use hadrl_core::model::PsnGraph;
use hadrl_core::oracle::simple_paths;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn node_sequence(psn: &PsnGraph, src: usize, links: &[usize]) -> Vec<usize> {
    let mut seq = vec![src];
    for &l in links {
        seq.push(psn.link(l).other(*seq.last().unwrap()));
    }
    seq
}

#[test]
fn bfs_paths_are_minimal_and_lexicographic() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..400 {
        let psn = common::random_psn(&mut rng, 2..=6, 0..=5, 10, 8);
        let n = psn.node_count();
        let src = rng.random_range(0..n);
        let dst = rng.random_range(0..n);
        let bw = rng.random_range(1..=8);
        let feasible: Vec<Vec<usize>> = common::flat_paths(&psn, src, dst)
            .into_iter()
            .filter(|p| p.iter().all(|&l| psn.link(l).cap_bw >= bw))
            .collect();
        let got = map_virtual_link(&psn, src, dst, bw);
        match feasible.iter().map(|p| p.len()).min() {
            None => assert_eq!(got, None),
            Some(hops) => {
                let got = got.expect("a feasible path exists");
                assert_eq!(got.len(), hops);
                let best = feasible
                    .iter()
                    .filter(|p| p.len() == hops)
                    .map(|p| node_sequence(&psn, src, p))
                    .min()
                    .unwrap();
                assert_eq!(node_sequence(&psn, src, &got), best);
                let tree = RouteTree::build(&psn, src, bw);
                assert_eq!(tree.hops(dst), Some(hops));
                assert_eq!(tree.path(&psn, dst), Some(got));
            }
        }
    }
}

#[test]
fn simple_path_enumeration_matches_flat_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let psn = common::random_psn(&mut rng, 2..=6, 0..=5, 10, 8);
        let n = psn.node_count();
        let (src, dst) = (rng.random_range(0..n), rng.random_range(0..n));
        let bw = rng.random_range(1..=8);
        let mut flat: Vec<Vec<usize>> = common::flat_paths(&psn, src, dst)
            .into_iter()
            .filter(|p| p.iter().all(|&l| psn.link(l).cap_bw >= bw))
            .collect();
        let mut got = simple_paths(&psn, src, dst, bw);
        assert!(got.windows(2).all(|w| w[0].len() <= w[1].len()));
        flat.sort();
        got.sort();
        assert_eq!(got, flat);
    }
}
