//! Acceptance suite. Prints one line per criterion and exits nonzero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use hadrl_core::agent::{
    compute_gradients, heuristic_shaping, losses, ActionDistribution, AgentParams, Hyper,
};
use hadrl_core::env::{ActionMask, RewardConfig};
use hadrl_core::harness::{parse_bench_csv, parse_metrics_csv, run_agent_episode, ActionSelection, PhaseMetrics};
use hadrl_core::heuristic::heu_place;
use hadrl_core::model::{NsprGraph, PsnGraph};
use hadrl_core::objective::{check_feasible, objective_value, Mapping, ObjectiveWeights};
use hadrl_core::oracle::{exact_place, SearchLimits};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 3] = [1, 2, 3];
const C2_NORM: f64 = 0.1;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn hadrl(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_hadrl")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("hadrl {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn read_metrics(path: &Path) -> Result<Vec<PhaseMetrics>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_metrics_csv(&text).map_err(|e| e.to_string())
}

#[derive(Clone, Copy, Debug)]
enum Engine {
    Heu,
    Drl,
    HaDrl,
    Oracle,
}

/// Serves `count` arrivals with random lifetimes on `psn`, checking every accepted mapping
/// against the substrate as it stood before placement. Returns (episodes, accepted).
fn audit_stream(engine: Engine, psn: &mut PsnGraph, count: usize, rng: &mut ChaCha8Rng) -> Result<(usize, usize), String> {
    let inputs = 4 * psn.node_count() + 5;
    let hyper = Hyper { hidden: 16, beta: 2.0, eta: 2.0, ..Default::default() };
    let params = AgentParams::init(inputs, psn.node_count(), hyper, rng.random());
    let mut live: BTreeMap<(u64, usize), (NsprGraph, Mapping)> = BTreeMap::new();
    let mut accepted = 0;
    for id in 0..count {
        let now = id as f64;
        while let Some((&(bits, k), _)) = live.iter().next() {
            if f64::from_bits(bits) > now {
                break;
            }
            let (nspr, m) = live.remove(&(bits, k)).unwrap();
            psn.release(&nspr, &m).map_err(|e| e.to_string())?;
        }
        let nspr = match engine {
            Engine::Oracle => common::random_chain(rng, 1..=3, 8, 6),
            _ => common::random_chain(rng, 1..=6, 8, 6),
        };
        let before = psn.clone();
        let mapping = match engine {
            Engine::Heu | Engine::Oracle => {
                let m = match engine {
                    Engine::Heu => heu_place(psn, &nspr, C2_NORM),
                    _ => exact_place(psn, &nspr, &ObjectiveWeights::default_for(&nspr), SearchLimits::default()).best.map(|b| b.0),
                };
                if let Some(m) = &m {
                    psn.allocate(&nspr, m).map_err(|e| format!("{engine:?} allocate: {e}"))?;
                }
                m
            }
            Engine::Drl | Engine::HaDrl => {
                let shaped = matches!(engine, Engine::HaDrl);
                let ep = run_agent_episode(psn, &nspr, &params, RewardConfig::default(), C2_NORM, shaped, ActionSelection::Sample(rng))
                    .map_err(|e| e.to_string())?;
                if ep.mapping.is_none() && *psn != before {
                    return Err(format!("{engine:?}: rejected episode left residue"));
                }
                ep.mapping
            }
        };
        if let Some(m) = mapping {
            let violations = check_feasible(&before, &nspr, &m).map_err(|e| e.to_string())?;
            if !m.z || !violations.is_empty() {
                return Err(format!("{engine:?}: accepted mapping violates {violations:?}"));
            }
            if psn.active_allocations() != before.active_allocations() + 1 {
                return Err(format!("{engine:?}: ledger did not record the placement"));
            }
            accepted += 1;
            let departure = now + rng.random_range(1.0..12.0);
            live.insert((departure.to_bits(), id), (nspr, m));
        }
    }
    for (_, (nspr, m)) in live {
        psn.release(&nspr, &m).map_err(|e| e.to_string())?;
    }
    if !psn.is_pristine() || psn.active_allocations() != 0 {
        return Err(format!("{engine:?}: residuals differ from maxima after all departures"));
    }
    Ok((count, accepted))
}

fn feasibility_soundness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut episodes = 0;
    let mut summary = Vec::new();
    for engine in [Engine::Heu, Engine::Drl, Engine::HaDrl, Engine::Oracle] {
        let mut accepted = 0;
        for _ in 0..25 {
            let mut psn = match engine {
                Engine::Oracle => common::random_psn(&mut rng, 2..=5, 0..=3, 24, 16),
                _ => common::random_psn(&mut rng, 4..=12, 2..=10, 30, 20),
            };
            match audit_stream(engine, &mut psn, 100, &mut rng) {
                Ok((n, a)) => {
                    episodes += n;
                    accepted += a;
                }
                Err(e) => return verdict(false, e),
            }
        }
        summary.push(format!("{engine:?} {accepted}"));
    }
    verdict(episodes >= 10_000, format!("{episodes} episodes, 0 violations, residuals restored; accepted: {}", summary.join(", ")))
}

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let (mut feasible, mut compared) = (0, 0);
    for i in 0..600 {
        let psn = common::random_psn(&mut rng, 1..=4, 0..=3, 10, 6);
        let nspr = common::random_chain(&mut rng, 1..=3, 6, 4);
        let w = ObjectiveWeights::new(rng.random_range(1.0..500.0), rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)).unwrap();
        let res = exact_place(&psn, &nspr, &w, SearchLimits::default());
        if !res.certified {
            return verdict(false, format!("instance {i}: oracle not certified"));
        }
        let oracle = res.best.as_ref().map(|b| b.1);
        let brute = common::brute_force(&psn, &nspr, &w);
        if oracle != brute {
            return verdict(false, format!("instance {i}: oracle {oracle:?} vs brute force {brute:?}"));
        }
        feasible += usize::from(oracle.is_some());
        if let Some(m) = heu_place(&psn, &nspr, C2_NORM) {
            compared += 1;
            let h = objective_value(&psn, &nspr, &m, &w).unwrap();
            if oracle.is_none_or(|o| h > o) {
                return verdict(false, format!("instance {i}: heuristic {h} beats oracle {oracle:?}"));
            }
        }
    }
    verdict(true, format!("600 instances ({feasible} feasible) match brute force exactly; heu <= oracle on {compared}"))
}

fn gradient_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let inputs = rng.random_range(2..=6);
        let actions = rng.random_range(2..=5);
        let hyper = Hyper {
            hidden: rng.random_range(3..=8),
            entropy_w: rng.random_range(0.0..0.1),
            gamma: rng.random_range(0.8..1.0),
            ..Default::default()
        };
        let params = AgentParams::init(inputs, actions, hyper, case);
        let trajs: Vec<_> = (0..rng.random_range(1..=3)).map(|_| common::random_traj(&mut rng, inputs, actions)).collect();
        let g = compute_gradients(&params, &trajs).unwrap();
        for actor in [true, false] {
            let count = if actor { params.actor.param_count() } else { params.critic.param_count() };
            let numeric: Vec<f64> = (0..count)
                .map(|i| {
                    let mut p = params.clone();
                    let bump = |p: &mut AgentParams, d: f64| {
                        let net = if actor { &mut p.actor } else { &mut p.critic };
                        *net.params_mut().nth(i).unwrap() += d;
                    };
                    let loss = |p: &AgentParams| {
                        let (a, c) = losses(p, &trajs).unwrap();
                        if actor { a } else { c }
                    };
                    bump(&mut p, h);
                    let up = loss(&p);
                    bump(&mut p, -2.0 * h);
                    (up - loss(&p)) / (2.0 * h)
                })
                .collect();
            let analytic: Vec<f64> = if actor { g.actor.params().copied().collect() } else { g.critic.params().copied().collect() };
            let err = common::rel_err(&analytic, &numeric);
            worst = worst.max(err);
            if err >= 1e-3 {
                let net = if actor { "actor" } else { "critic" };
                return verdict(false, format!("network {case} {net}: relative error {err:.2e}"));
            }
        }
    }
    verdict(true, format!("20 networks, worst relative error {worst:.2e}"))
}

fn shaping_properties() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let betas = [0.0, 0.1, 0.5, 1.0, 2.0];
    for t in 0..1000 {
        let n = rng.random_range(1..=12);
        let logits: Vec<f64> = (0..n).map(|_| rng.random_range(-20.0..20.0)).collect();
        let mut mask: Vec<bool> = (0..n).map(|_| rng.random_bool(0.6)).collect();
        let heu = rng.random_range(0..n);
        mask[heu] = true;
        let mask = ActionMask(mask);
        let dist = ActionDistribution::from_logits(logits, &mask).unwrap();
        let eta = rng.random_range(0.01..3.0);
        let mut prev = f64::NEG_INFINITY;
        for beta in betas {
            let s = heuristic_shaping(&dist, Some(heu), beta, eta).unwrap();
            if (0..n).any(|a| !mask.is_eligible(a) && s.probs[a] != 0.0) {
                return verdict(false, format!("triple {t}, beta {beta}: masked action has mass"));
            }
            if s.probs[heu] < prev - 1e-12 {
                return verdict(false, format!("triple {t}, beta {beta}: P(heu) fell from {prev} to {}", s.probs[heu]));
            }
            prev = s.probs[heu];
            if beta >= 1.0 && s.argmax() != Some(heu) {
                return verdict(false, format!("triple {t}, beta {beta}: argmax {:?} is not {heu}", s.argmax()));
            }
        }
    }
    verdict(true, "1000 triples: masked mass 0, P(heu) monotone in beta, argmax = heu for beta >= 1")
}

/// Per-phase acceptance curves (one per seed) of drl, hadrl and heu on one desk config.
struct Curves {
    drl: Vec<Vec<f64>>,
    hadrl: Vec<Vec<f64>>,
    heu: Vec<Vec<f64>>,
}

fn run_desk(config: &str, root: &Path) -> Result<Curves, String> {
    let cfg = configs().join(config);
    let cfg = cfg.to_str().unwrap();
    let mut curves = Curves { drl: Vec::new(), hadrl: Vec::new(), heu: Vec::new() };
    for seed in SEEDS {
        let s = seed.to_string();
        for (engine, beta, sink) in [("drl", "0", &mut curves.drl), ("hadrl", "2.0", &mut curves.hadrl)] {
            let dir = root.join(format!("{engine}-{seed}"));
            hadrl(&["train", "-c", cfg, "--seed", &s, "--engine", engine, "--beta", beta, "-o", dir.to_str().unwrap()])?;
            sink.push(read_metrics(&dir.join("train_metrics.csv"))?.iter().map(|m| m.acceptance_ratio).collect());
        }
        let dir = root.join(format!("heu-{seed}"));
        hadrl(&["eval", "-c", cfg, "--seed", &s, "--engine", "heu", "-o", dir.to_str().unwrap()])?;
        curves.heu.push(read_metrics(&dir.join("eval_metrics.csv"))?.iter().map(|m| m.acceptance_ratio).collect());
    }
    Ok(curves)
}

fn seed_mean(curves: &[Vec<f64>]) -> Vec<f64> {
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    (0..len).map(|p| curves.iter().map(|c| c[p]).sum::<f64>() / curves.len() as f64).collect()
}

fn window_mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

const WINDOW: usize = 5;

/// First phase (1-based) at which the trailing `WINDOW`-phase mean comes within 2 points of `target`.
fn reach_phase(curve: &[f64], target: f64) -> Option<usize> {
    (WINDOW..=curve.len()).find(|&end| window_mean(&curve[end - WINDOW..end]) >= target - 0.02)
}

fn underloaded_ordering(root: &Path) -> Verdict {
    let curves = match run_desk("desk-underloaded.conf", root) {
        Ok(c) => c,
        Err(e) => return verdict(false, e),
    };
    let (drl, ha, heu) = (seed_mean(&curves.drl), seed_mean(&curves.hadrl), seed_mean(&curves.heu));
    if drl.len() < WINDOW || ha.len() < WINDOW || heu.is_empty() {
        return verdict(false, "too few phases");
    }
    let ratio = ha[4] / drl[4];
    let steady = window_mean(&heu[heu.len() / 2..]);
    let ha_reach = reach_phase(&ha, steady);
    let drl_reach = reach_phase(&drl, steady);
    // A curve that never gets there needs more phases than were run.
    let drl_need = drl_reach.unwrap_or(drl.len() + 1);
    let fast = ha_reach.is_some_and(|p| 2 * p <= drl_need);
    verdict(
        ratio >= 1.3 && fast,
        format!(
            "phase-5 hadrl {:.3} / drl {:.3} = {ratio:.3} (need >= 1.3); heu steady {steady:.3}; reach within 2 pts: hadrl {ha_reach:?}, drl {} (need hadrl <= half)",
            ha[4],
            drl[4],
            drl_reach.map_or(format!("not within {} phases", drl.len()), |p| p.to_string()),
        ),
    )
}

fn critical_ordering(root: &Path) -> Verdict {
    let curves = match run_desk("desk-critical.conf", root) {
        Ok(c) => c,
        Err(e) => return verdict(false, e),
    };
    let (drl, ha, heu) = (seed_mean(&curves.drl), seed_mean(&curves.hadrl), seed_mean(&curves.heu));
    if drl.len() < WINDOW || ha.is_empty() || heu.is_empty() {
        return verdict(false, "too few phases");
    }
    let ha_final = *ha.last().unwrap();
    let heu_final = *heu.last().unwrap();
    let drl_early = window_mean(&drl[..WINDOW]);
    let margin = 100.0 * (ha_final - heu_final);
    verdict(
        margin >= 2.0 && heu_final >= drl_early,
        format!(
            "final phase hadrl {ha_final:.3}, heu {heu_final:.3} (margin {margin:+.2} pts, need >= +2); drl phases 1-{WINDOW} {drl_early:.3} (need <= heu)"
        ),
    )
}

fn exec_time_shape(root: &Path) -> Verdict {
    let out = root.join("bench");
    let run = hadrl(&[
        "bench", "--engines", "heu,drl,hadrl", "--vnfs", "5,10,20", "--nodes", "12,50,126", "--repetitions", "100", "-o",
        out.to_str().unwrap(),
    ]);
    if let Err(e) = run {
        return verdict(false, e);
    }
    let rows = match std::fs::read_to_string(out.join("bench.csv")).map_err(|e| e.to_string()).and_then(|t| parse_bench_csv(&t).map_err(|e| e.to_string())) {
        Ok(r) => r,
        Err(e) => return verdict(false, e),
    };
    let time = |engine: &str, vnfs: usize, nodes: usize| {
        rows.iter().find(|r| r.engine == engine && r.vnfs == vnfs && r.nodes == nodes).map(|r| r.mean_s)
    };
    let (mut increasing, mut within) = (true, true);
    let mut detail = Vec::new();
    for vnfs in [5, 10, 20] {
        let mut ratios = Vec::new();
        let mut sums = Vec::new();
        for nodes in [12, 50, 126] {
            let (Some(h), Some(d), Some(a)) = (time("heu", vnfs, nodes), time("drl", vnfs, nodes), time("hadrl", vnfs, nodes)) else {
                return verdict(false, format!("missing bench row for |V|={vnfs}, |N|={nodes}"));
            };
            ratios.push(h / d);
            sums.push(a / (h + d));
            within &= (a - (h + d)).abs() <= 0.25 * (h + d);
        }
        increasing &= ratios.windows(2).all(|w| w[1] > w[0]);
        detail.push(format!(
            "|V|={vnfs}: heu/drl {} hadrl/(heu+drl) {}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(","),
            sums.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(","),
        ));
    }
    verdict(
        increasing && within,
        format!("ratio strictly increasing: {increasing}; hadrl within 25%: {within}; {}", detail.join("; ")),
    )
}

fn pipeline(root: &Path, cfg: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let cfg = cfg.to_str().unwrap();
    let dir = |name: &str| root.join(name).to_str().unwrap().to_owned();
    hadrl(&["train", "-c", cfg, "--engine", "hadrl", "--beta", "2.0", "-o", &dir("hadrl")])?;
    hadrl(&["train", "-c", cfg, "--engine", "drl", "-o", &dir("drl")])?;
    hadrl(&["eval", "-c", cfg, "--engine", "hadrl", "--beta", "2.0", "-o", &dir("hadrl")])?;
    hadrl(&["eval", "-c", cfg, "--engine", "heu", "-o", &dir("heu")])?;
    let metrics = [dir("hadrl") + "/train_metrics.csv", dir("drl") + "/train_metrics.csv", dir("heu") + "/eval_metrics.csv"];
    let report = dir("report");
    let mut args = vec!["report", "-o", &report, "--metrics"];
    args.extend(metrics.iter().map(String::as_str));
    hadrl(&args)?;
    let files = [
        "hadrl/train_metrics.csv",
        "hadrl/train_diagnostics.csv",
        "hadrl/eval_metrics.csv",
        "hadrl/checkpoint.txt",
        "drl/train_metrics.csv",
        "heu/eval_metrics.csv",
        "report/summary.txt",
        "report/acceptance.svg",
    ];
    files
        .iter()
        .map(|f| std::fs::read(root.join(f)).map(|b| (f.to_string(), b)).map_err(|e| format!("{f}: {e}")))
        .collect()
}

fn determinism(root: &Path) -> Verdict {
    let base = std::fs::read_to_string(configs().join("desk-underloaded.conf")).unwrap();
    let cfg = root.join("short.conf");
    std::fs::write(&cfg, format!("{}seed = 7\n", base.replace("phases = 50", "phases = 8"))).unwrap();
    let runs: Result<Vec<_>, String> = ["a", "b"].iter().map(|r| pipeline(&root.join(r), &cfg)).collect();
    let runs = match runs {
        Ok(r) => r,
        Err(e) => return verdict(false, e),
    };
    let differing: Vec<&str> = runs[0].iter().zip(&runs[1]).filter(|(a, b)| a.1 != b.1).map(|(a, _)| a.0.as_str()).collect();
    verdict(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} artifacts byte-identical across two pipeline runs", runs[0].len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let root = tmp.path();
    let dir = |name: &str| {
        let d = root.join(name);
        std::fs::create_dir_all(&d).unwrap();
        d
    };
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Verdict>)> = vec![
        ("feasibility soundness", Box::new(feasibility_soundness)),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("gradient correctness", Box::new(gradient_correctness)),
        ("shaping properties", Box::new(shaping_properties)),
        ("under-loaded ordering", Box::new(move || underloaded_ordering(&dir("c5")))),
        ("critical-load ordering", Box::new(move || critical_ordering(&dir("c6")))),
        ("execution-time shape", Box::new(move || exec_time_shape(&dir("c7")))),
        ("determinism", Box::new(move || determinism(&dir("c8")))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "criterion {} {name}: {} ({:.1}s) {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
