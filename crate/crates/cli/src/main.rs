use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hadrl_core::error::{Error, Result};
use hadrl_core::fixture::{parse_fixture, Fixture};
use hadrl_core::harness::{
    bench_exec_time, bench_to_csv, emit_report, load_params, run_eval_phases, run_training, summarize, write_eval, Engine,
    PhaseMetrics, RunConfig,
};
use hadrl_core::heuristic::heu_place;
use hadrl_core::model::{NsprGraph, PsnGraph};
use hadrl_core::objective::{objective_value, Mapping};
use hadrl_core::oracle::{exact_place, SearchLimits};

#[derive(Parser)]
#[command(name = "hadrl", version, about = "Network slice placement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Key-value configuration file.
    #[arg(long, short = 'c', global = true)]
    config: Option<PathBuf>,
    /// Overrides the run seed and the workload seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// heu, drl, hadrl or oracle.
    #[arg(long, global = true)]
    engine: Option<Engine>,
    /// Heuristic shaping strength for hadrl.
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, short = 'o', global = true)]
    output_dir: Option<PathBuf>,
    /// Record measured wall-clock seconds in metrics.
    #[arg(long, global = true)]
    wall_clock: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train a drl or hadrl agent online.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate an engine with frozen parameters.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Defaults to checkpoint.txt in the output directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Solve fixture instances exactly.
    Oracle {
        #[command(flatten)]
        common: Common,
        fixture: PathBuf,
        /// Search node budget.
        #[arg(long)]
        max_nodes: Option<u64>,
    },
    /// Solve fixture instances with the greedy heuristic.
    Heu {
        #[command(flatten)]
        common: Common,
        fixture: PathBuf,
    },
    /// Time per-placement execution across request and substrate sizes.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "heu,drl,hadrl")]
        engines: Vec<Engine>,
        #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
        vnfs: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "12,50,126")]
        nodes: Vec<usize>,
        #[arg(long, default_value_t = 30)]
        repetitions: usize,
    },
    /// Render charts and a summary table from metrics and benchmark CSVs.
    Report {
        #[command(flatten)]
        common: Common,
        /// Metrics CSV files.
        #[arg(long, num_args = 1.., required = true)]
        metrics: Vec<PathBuf>,
        #[arg(long)]
        bench: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
        cfg.workload.seed = seed;
    }
    if let Some(engine) = common.engine {
        cfg.engine = engine;
    }
    if let Some(beta) = common.beta {
        cfg.hyper.beta = beta;
    }
    if let Some(dir) = &common.output_dir {
        cfg.output_dir = Some(dir.clone());
    }
    if common.wall_clock {
        cfg.record_wall_time = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_phase(label: &str, m: &PhaseMetrics) {
    let flag = if m.is_vacuous() { " (no arrivals)" } else { "" };
    println!(
        "{label} {} beta={} arrivals={} accepted={} acceptance={:.4}{flag} mean_return={:.4} mean_objective={:.4}",
        m.engine, m.beta, m.arrivals, m.accepted, m.acceptance_ratio, m.mean_return, m.mean_objective
    );
}

fn train(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let out = run_training(&cfg)?;
    if let Some(last) = out.metrics.last() {
        print_phase(&format!("phase {}", last.phase), last);
    }
    if let Some(dir) = &cfg.output_dir {
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn eval(common: &Common, checkpoint: Option<&Path>) -> Result<()> {
    let cfg = load_config(common)?;
    let params = if cfg.engine.is_learning() {
        let path = match (checkpoint, &cfg.output_dir) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(dir)) => dir.join("checkpoint.txt"),
            (None, None) => return Err(Error::Config("eval of an agent engine needs --checkpoint or --output-dir".into())),
        };
        Some(load_params(&path)?)
    } else {
        None
    };
    let rows = run_eval_phases(cfg.engine, &cfg, params.as_ref())?;
    write_eval(&cfg, &rows)?;
    print_phase("eval", &summarize(&rows, cfg.engine.name()));
    Ok(())
}

fn load_fixture(path: &Path) -> Result<(PsnGraph, Vec<NsprGraph>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let Fixture { psn, nsprs, requests } = parse_fixture(&text)?;
    let psn = psn.ok_or_else(|| Error::parse(0, format!("{} has no psn block", path.display())))?;
    let mut all = nsprs;
    all.extend(requests.into_iter().map(|r| r.nspr));
    if all.is_empty() {
        return Err(Error::parse(0, format!("{} has no request", path.display())));
    }
    Ok((psn, all))
}

fn format_mapping(m: &Mapping) -> String {
    let mut s = String::from("x");
    for h in &m.x {
        match h {
            Some(n) => write!(s, " {n}").unwrap(),
            None => s.push_str(" -"),
        }
    }
    for (k, path) in m.y.iter().enumerate() {
        write!(s, "\ny {k}:").unwrap();
        for l in path {
            write!(s, " {l}").unwrap();
        }
    }
    s
}

fn oracle(common: &Common, fixture: &Path, max_nodes: Option<u64>) -> Result<()> {
    let cfg = load_config(common)?;
    let (psn, nsprs) = load_fixture(fixture)?;
    let mut limits = SearchLimits::default();
    if let Some(n) = max_nodes {
        limits.max_nodes = n;
    }
    for (i, nspr) in nsprs.iter().enumerate() {
        let res = exact_place(&psn, nspr, &cfg.weights.resolve(nspr), limits);
        println!("instance {i}");
        match &res.best {
            Some((m, score)) => {
                println!("score {score}");
                println!("{}", format_mapping(m));
            }
            None => println!("infeasible"),
        }
        println!("certified {}", res.certified);
        println!("nodes_explored {}", res.nodes_explored);
    }
    Ok(())
}

fn heu(common: &Common, fixture: &Path) -> Result<()> {
    let cfg = load_config(common)?;
    let (psn, nsprs) = load_fixture(fixture)?;
    for (i, nspr) in nsprs.iter().enumerate() {
        println!("instance {i}");
        match heu_place(&psn, nspr, cfg.c2_norm) {
            Some(m) => {
                println!("score {}", objective_value(&psn, nspr, &m, &cfg.weights.resolve(nspr))?);
                println!("{}", format_mapping(&m));
            }
            None => println!("infeasible"),
        }
    }
    Ok(())
}

fn bench(common: &Common, engines: &[Engine], vnfs: &[usize], nodes: &[usize], repetitions: usize) -> Result<()> {
    let cfg = load_config(common)?;
    let rows = bench_exec_time(&cfg, engines, vnfs, nodes, repetitions)?;
    let text = bench_to_csv(&rows);
    match &cfg.output_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join("bench.csv");
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn report(common: &Common, metrics: &[PathBuf], bench: Option<&Path>) -> Result<()> {
    let dir = common.output_dir.clone().unwrap_or_else(|| PathBuf::from("report"));
    let files = emit_report(metrics, bench, &dir)?;
    for c in &files.charts {
        println!("wrote {}", c.display());
    }
    println!("wrote {}", files.summary.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common } => train(&common),
        Command::Eval { common, checkpoint } => eval(&common, checkpoint.as_deref()),
        Command::Oracle { common, fixture, max_nodes } => oracle(&common, &fixture, max_nodes),
        Command::Heu { common, fixture } => heu(&common, &fixture),
        Command::Bench { common, engines, vnfs, nodes, repetitions } => bench(&common, &engines, &vnfs, &nodes, repetitions),
        Command::Report { common, metrics, bench } => report(&common, &metrics, bench.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({}): {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
