//! Result rows, the CSV writer, and per-curve aggregation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{ExpError, Result};

pub const CSV_HEADER: &str = "scenario,maze_seed,policy_seed,data_seed,estimator,alpha,num_trajectories,\
mentor_value_fraction,rms,final_objective,cycles,wall_millis";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub maze_seed: u64,
    pub policy_seed: u64,
    pub data_seed: u64,
    pub estimator: String,
    pub alpha: f64,
    pub num_trajectories: usize,
    pub mentor_value_fraction: f64,
    /// NaN when the cell failed.
    pub rms: f64,
    pub final_objective: f64,
    pub cycles: usize,
    pub wall_millis: u64,
}

impl ResultRow {
    pub fn failed(&self) -> bool {
        self.rms.is_nan()
    }
}

/// Ten significant digits.
fn real(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.9e}")
    }
}

/// Sorts by (scenario, maze_seed, alpha, num_trajectories), breaking the
/// remaining ties on (estimator, policy_seed, data_seed).
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.scenario
            .cmp(&b.scenario)
            .then(a.maze_seed.cmp(&b.maze_seed))
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.num_trajectories.cmp(&b.num_trajectories))
            .then(a.estimator.cmp(&b.estimator))
            .then(a.policy_seed.cmp(&b.policy_seed))
            .then(a.data_seed.cmp(&b.data_seed))
    });
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &sorted {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.maze_seed,
            r.policy_seed,
            r.data_seed,
            r.estimator,
            real(r.alpha),
            r.num_trajectories,
            real(r.mentor_value_fraction),
            real(r.rms),
            real(r.final_objective),
            r.cycles,
            r.wall_millis
        )
        .unwrap();
    }
    out
}

pub fn write_results(rows: &[ResultRow], path: &Path) -> Result<()> {
    std::fs::write(path, to_csv(rows)).map_err(|e| ExpError::io(path, e))
}

/// Parses a file written by [`write_results`].
pub fn read_results(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(ExpError::Config("results: missing or unexpected header".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || ExpError::Config(format!("results line {}: malformed row", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 12 {
                return Err(bad());
            }
            let real = |s: &str| s.parse::<f64>().map_err(|_| bad());
            let int = |s: &str| s.parse::<u64>().map_err(|_| bad());
            Ok(ResultRow {
                scenario: f[0].to_string(),
                maze_seed: int(f[1])?,
                policy_seed: int(f[2])?,
                data_seed: int(f[3])?,
                estimator: f[4].to_string(),
                alpha: real(f[5])?,
                num_trajectories: int(f[6])? as usize,
                mentor_value_fraction: real(f[7])?,
                rms: real(f[8])?,
                final_objective: real(f[9])?,
                cycles: int(f[10])? as usize,
                wall_millis: int(f[11])?,
            })
        })
        .collect()
}

/// Key of one plotted point: estimator, alpha, dataset size.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CurveKey {
    pub estimator: String,
    /// `f64::to_bits` of alpha, so the key is orderable; alphas are non-negative.
    pub alpha_bits: u64,
    pub num_trajectories: usize,
}

impl CurveKey {
    pub fn new(estimator: &str, alpha: f64, num_trajectories: usize) -> Self {
        CurveKey {
            estimator: estimator.to_string(),
            alpha_bits: alpha.to_bits(),
            num_trajectories,
        }
    }

    pub fn alpha(&self) -> f64 {
        f64::from_bits(self.alpha_bits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub mean_rms: f64,
    pub std_err: f64,
    pub cells: usize,
    pub failed: usize,
}

/// Mean RMS per (estimator, alpha, size), skipping failed cells.
pub fn summarize(rows: &[ResultRow]) -> BTreeMap<CurveKey, CurvePoint> {
    let mut groups: BTreeMap<CurveKey, (Vec<f64>, usize)> = BTreeMap::new();
    for r in rows {
        let entry = groups
            .entry(CurveKey::new(&r.estimator, r.alpha, r.num_trajectories))
            .or_default();
        if r.failed() {
            entry.1 += 1;
        } else {
            entry.0.push(r.rms);
        }
    }
    groups
        .into_iter()
        .map(|(k, (xs, failed))| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = if xs.len() > 1 {
                xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let point = CurvePoint {
                mean_rms: mean,
                std_err: (var / n).sqrt(),
                cells: xs.len(),
                failed,
            };
            (k, point)
        })
        .collect()
}

/// Plain-text table of [`summarize`] output.
pub fn render_summary(summary: &BTreeMap<CurveKey, CurvePoint>) -> String {
    let mut out = String::from("estimator      alpha      m    mean_rms   std_err  cells\n");
    for (k, p) in summary {
        writeln!(
            out,
            "{:<12} {:>8} {:>6} {:>10.5} {:>9.5} {:>6}{}",
            k.estimator,
            k.alpha(),
            k.num_trajectories,
            p.mean_rms,
            p.std_err,
            p.cells,
            if p.failed > 0 { format!("  ({} failed)", p.failed) } else { String::new() }
        )
        .unwrap();
    }
    out
}
