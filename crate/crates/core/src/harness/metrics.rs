//! Per-phase acceptance metrics and their CSV form.
//!
//! Column order is fixed:
//! `phase,engine,beta,arrivals,accepted,acceptance_ratio,mean_return,mean_objective,wall_s`.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const METRICS_HEADER: [&str; 9] = [
    "phase",
    "engine",
    "beta",
    "arrivals",
    "accepted",
    "acceptance_ratio",
    "mean_return",
    "mean_objective",
    "wall_s",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMetrics {
    pub phase: usize,
    pub engine: String,
    pub beta: f64,
    pub arrivals: usize,
    pub accepted: usize,
    /// `accepted / arrivals`; 1.0 for a phase without arrivals.
    pub acceptance_ratio: f64,
    pub mean_return: f64,
    /// Mean score of accepted slices; 0 when none were accepted.
    pub mean_objective: f64,
    pub wall_s: f64,
}

impl PhaseMetrics {
    /// A phase with no arrivals reports acceptance 1.0 and is flagged here.
    pub fn is_vacuous(&self) -> bool {
        self.arrivals == 0
    }

    pub fn rejected(&self) -> usize {
        self.arrivals - self.accepted
    }
}

/// Running totals for one phase.
#[derive(Debug, Clone, Default)]
pub struct PhaseAccumulator {
    pub arrivals: usize,
    pub accepted: usize,
    pub return_sum: f64,
    pub objective_sum: f64,
}

impl PhaseAccumulator {
    pub fn record(&mut self, accepted: bool, ret: f64, objective: Option<f64>) {
        self.arrivals += 1;
        self.return_sum += ret;
        if accepted {
            self.accepted += 1;
            self.objective_sum += objective.unwrap_or(0.0);
        }
    }

    pub fn merge(&mut self, other: &PhaseAccumulator) {
        self.arrivals += other.arrivals;
        self.accepted += other.accepted;
        self.return_sum += other.return_sum;
        self.objective_sum += other.objective_sum;
    }

    pub fn finish(&self, phase: usize, engine: &str, beta: f64, wall_s: f64) -> PhaseMetrics {
        let (ratio, mean_return) = if self.arrivals == 0 {
            (1.0, 0.0)
        } else {
            (self.accepted as f64 / self.arrivals as f64, self.return_sum / self.arrivals as f64)
        };
        let mean_objective = if self.accepted == 0 { 0.0 } else { self.objective_sum / self.accepted as f64 };
        PhaseMetrics {
            phase,
            engine: engine.to_string(),
            beta,
            arrivals: self.arrivals,
            accepted: self.accepted,
            acceptance_ratio: ratio,
            mean_return,
            mean_objective,
            wall_s,
        }
    }
}

fn record(m: &PhaseMetrics) -> [String; 9] {
    [
        m.phase.to_string(),
        m.engine.clone(),
        format!("{}", m.beta),
        m.arrivals.to_string(),
        m.accepted.to_string(),
        format!("{:.6}", m.acceptance_ratio),
        format!("{:.6}", m.mean_return),
        format!("{:.6}", m.mean_objective),
        format!("{:.6}", m.wall_s),
    ]
}

/// Appends rows to a metrics CSV as phases complete.
pub struct MetricsWriter {
    inner: csv::Writer<Box<dyn Write>>,
}

impl MetricsWriter {
    pub fn new(sink: Box<dyn Write>) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(sink);
        inner.write_record(METRICS_HEADER).map_err(csv_err)?;
        Ok(MetricsWriter { inner })
    }

    pub fn create(path: &Path) -> Result<Self> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        Self::new(Box::new(file))
    }

    pub fn write(&mut self, m: &PhaseMetrics) -> Result<()> {
        self.inner.write_record(record(m)).map_err(csv_err)?;
        self.inner.flush().map_err(|e| Error::io("metrics", e))
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(line, e.to_string())
}

pub fn metrics_to_csv(rows: &[PhaseMetrics]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_HEADER).unwrap();
    for m in rows {
        w.write_record(record(m)).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<PhaseMetrics>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(METRICS_HEADER.iter().copied()) {
        return Err(Error::parse(1, format!("unexpected metrics header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let get = |i: usize| rec.get(i).unwrap_or("");
        fn num<T: std::str::FromStr>(line: usize, name: &str, s: &str) -> Result<T> {
            s.parse().map_err(|_| Error::parse(line, format!("bad {name} `{s}`")))
        }
        out.push(PhaseMetrics {
            phase: num(line, "phase", get(0))?,
            engine: get(1).to_string(),
            beta: num(line, "beta", get(2))?,
            arrivals: num(line, "arrivals", get(3))?,
            accepted: num(line, "accepted", get(4))?,
            acceptance_ratio: num(line, "acceptance_ratio", get(5))?,
            mean_return: num(line, "mean_return", get(6))?,
            mean_objective: num(line, "mean_objective", get(7))?,
            wall_s: num(line, "wall_s", get(8))?,
        });
        let m = out.last().unwrap();
        if m.accepted > m.arrivals {
            return Err(Error::parse(line, "accepted exceeds arrivals"));
        }
    }
    Ok(out)
}
