//! SVG charts and a text summary built from metrics and benchmark CSVs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::bench::{parse_bench_csv, BenchRow};
use super::metrics::{parse_metrics_csv, PhaseMetrics};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Phases reported in the summary table, as fractions of the run length.
const SUMMARY_FRACTIONS: [f64; 6] = [25.0 / 480.0, 100.0 / 480.0, 200.0 / 480.0, 300.0 / 480.0, 400.0 / 480.0, 1.0];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub summary: PathBuf,
    pub charts: Vec<PathBuf>,
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn series_label(engine: &str, beta: f64) -> String {
    if engine == "hadrl" {
        format!("hadrl b={beta}")
    } else {
        engine.to_string()
    }
}

fn group_metrics(rows: &[PhaseMetrics]) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for r in rows {
        let label = series_label(&r.engine, r.beta);
        let idx = match out.iter().position(|s| s.label == label) {
            Some(i) => i,
            None => {
                out.push(Series { label, points: Vec::new() });
                out.len() - 1
            }
        };
        out[idx].points.push((r.phase as f64, r.acceptance_ratio));
    }
    out
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], y_range: Option<(f64, f64)>) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (mut y0, mut y1) = y_range.unwrap_or_else(|| {
        let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
        let (_, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
        (0.0, hi * 1.1)
    });
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_T + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#, MARGIN_L + pw / 2.0, esc(title));
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN_L}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        MARGIN_T + ph,
        MARGIN_L + pw,
        MARGIN_T + ph
    );
    let _ = writeln!(svg, r#"<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{:.1}" stroke="black"/>"#, MARGIN_T + ph);
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(fx),
            MARGIN_T + ph + 16.0,
            tick(fx)
        );
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, MARGIN_L - 6.0, sy(fy) + 4.0, tick(fy));
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 12.0,
        esc(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        esc(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let ly = MARGIN_T + 14.0 + 18.0 * i as f64;
        let lx = MARGIN_L + pw + 12.0;
        let _ = writeln!(svg, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 26.0, ly + 4.0, esc(&s.label));
    }
    svg.push_str("</svg>\n");
    svg
}

fn tick(v: f64) -> String {
    if v != 0.0 && v.abs() < 0.01 {
        format!("{v:.1e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn summary_phases(last: usize) -> Vec<usize> {
    let mut out: Vec<usize> = SUMMARY_FRACTIONS.iter().map(|f| ((f * last as f64).ceil() as usize).max(1)).collect();
    out.dedup();
    out
}

fn summary_text(rows: &[PhaseMetrics], bench: &[BenchRow]) -> String {
    let mut out = String::new();
    if rows.is_empty() {
        out.push_str("acceptance: no data\n");
    } else {
        let last = rows.iter().map(|r| r.phase).max().unwrap_or(0);
        let phases = summary_phases(last);
        let _ = write!(out, "{:<16}", "engine");
        for p in &phases {
            let _ = write!(out, "{:>10}", format!("phase {p}"));
        }
        out.push('\n');
        for s in group_metrics(rows) {
            let _ = write!(out, "{:<16}", s.label);
            for p in &phases {
                match s.points.iter().find(|pt| pt.0 as usize == *p) {
                    Some(pt) => {
                        let _ = write!(out, "{:>10}", format!("{:.2}%", pt.1 * 100.0));
                    }
                    None => {
                        let _ = write!(out, "{:>10}", "-");
                    }
                }
            }
            out.push('\n');
        }
    }
    out.push('\n');
    if bench.is_empty() {
        out.push_str("execution time: no data\n");
    } else {
        let _ = writeln!(out, "{:<10}{:>6}{:>8}{:>14}{:>14}", "engine", "|V|", "|N|", "mean_s", "sd_s");
        for b in bench {
            let _ = writeln!(out, "{:<10}{:>6}{:>8}{:>14.6e}{:>14.6e}", b.engine, b.vnfs, b.nodes, b.mean_s, b.sd_s);
        }
    }
    out
}

fn bench_series(bench: &[BenchRow], by_nodes: bool) -> Vec<Series> {
    // Fix the other dimension at its largest value.
    let fixed = if by_nodes {
        bench.iter().map(|b| b.vnfs).max()
    } else {
        bench.iter().map(|b| b.nodes).max()
    };
    let mut out: Vec<Series> = Vec::new();
    for b in bench {
        let (x, other) = if by_nodes { (b.nodes, b.vnfs) } else { (b.vnfs, b.nodes) };
        if Some(other) != fixed {
            continue;
        }
        let idx = match out.iter().position(|s| s.label == b.engine) {
            Some(i) => i,
            None => {
                out.push(Series { label: b.engine.clone(), points: Vec::new() });
                out.len() - 1
            }
        };
        out[idx].points.push((x as f64, b.mean_s));
    }
    for s in &mut out {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, msg } => Error::Parse { line, msg: format!("{}: {msg}", path.display()) },
        other => other,
    }
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `summary.txt` plus one chart per available data set into `output_dir`.
pub fn emit_report(metrics: &[PathBuf], bench: Option<&Path>, output_dir: &Path) -> Result<ReportFiles> {
    let mut rows = Vec::new();
    for p in metrics {
        rows.extend(parse_metrics_csv(&read(p)?).map_err(|e| with_path(p, e))?);
    }
    let bench_rows = match bench {
        Some(p) => parse_bench_csv(&read(p)?).map_err(|e| with_path(p, e))?,
        None => Vec::new(),
    };
    std::fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
    let mut charts = Vec::new();
    if !rows.is_empty() {
        let svg = line_chart("Acceptance ratio per phase", "phase", "acceptance ratio", &group_metrics(&rows), Some((0.0, 1.0)));
        charts.push(write(output_dir.join("acceptance.svg"), &svg)?);
    }
    if !bench_rows.is_empty() {
        let svg = line_chart("Execution time vs substrate size", "|N|", "seconds", &bench_series(&bench_rows, true), None);
        charts.push(write(output_dir.join("exec_time_nodes.svg"), &svg)?);
        let svg = line_chart("Execution time vs request size", "|V|", "seconds", &bench_series(&bench_rows, false), None);
        charts.push(write(output_dir.join("exec_time_vnfs.svg"), &svg)?);
    }
    let summary = write(output_dir.join("summary.txt"), &summary_text(&rows, &bench_rows))?;
    Ok(ReportFiles { summary, charts })
}
