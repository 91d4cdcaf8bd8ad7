//! Scaling benchmark: full incremental runs over doubling `n`.

use std::fmt::Write as _;

use fastk_core::greedy_core::Mode;
use serde::{Deserialize, Serialize};

use crate::cluster::{self, ClusterOptions, Projection};
use crate::error::CliError;
use crate::gen::{self, GenOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub sizes: Vec<usize>,
    pub d: usize,
    pub c: f64,
    pub z: f64,
    pub clusters: usize,
    pub spread: f64,
    pub seed: u64,
    pub mode: Mode,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            sizes: (10..=14).map(|e| 1usize << e).collect(),
            d: 8,
            c: 5.0,
            z: 2.0,
            clusters: 10,
            spread: 0.05,
            seed: 1,
            mode: Mode::Lsh,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub centers: usize,
    pub normalize: f64,
    pub init: f64,
    pub greedy: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub d: usize,
    pub c: f64,
    pub z: f64,
    pub mode: String,
    pub seed: u64,
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of `ln(total)` against `ln(n)`; absent with fewer
    /// than two distinct sizes.
    pub slope: Option<f64>,
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let m = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn loglog_slope(rows: &[BenchRow]) -> Option<f64> {
    let points: Vec<(f64, f64)> = rows.iter().map(|r| ((r.n as f64).ln(), r.total.max(1e-9).ln())).collect();
    fit_slope(&points)
}

pub fn run(opts: &BenchOptions) -> Result<BenchTable, CliError> {
    if opts.sizes.is_empty() {
        return Err(CliError::Usage("no benchmark sizes given".into()));
    }
    let mut rows = Vec::with_capacity(opts.sizes.len());
    for &n in &opts.sizes {
        let data =
            gen::mixture(&GenOptions { n, d: opts.d, clusters: opts.clusters, spread: opts.spread, seed: opts.seed })?;
        let mut cluster_opts = ClusterOptions::new(None, opts.z, opts.c, opts.seed, opts.mode);
        cluster_opts.projection = Projection::Off;
        cluster_opts.skip_costs = true;
        let report = cluster::run(&data, &cluster_opts)?;
        let t = &report.timings;
        rows.push(BenchRow {
            n,
            centers: report.achieved_k,
            normalize: t.normalize,
            init: t.init,
            greedy: t.greedy,
            total: t.total(),
        });
    }
    let slope = loglog_slope(&rows);
    Ok(BenchTable {
        d: opts.d,
        c: opts.c,
        z: opts.z,
        mode: cluster::mode_name(opts.mode).into(),
        seed: opts.seed,
        rows,
        slope,
    })
}

impl BenchTable {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("tables serialize");
        out.push('\n');
        out
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>8}  {:>8}  {:>10}  {:>10}  {:>10}  {:>10}",
            "n", "centers", "normalize", "init", "greedy", "total"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>8}  {:>8}  {:>10.3}  {:>10.3}  {:>10.3}  {:>10.3}",
                r.n, r.centers, r.normalize, r.init, r.greedy, r.total
            );
        }
        match self.slope {
            Some(s) => {
                let _ = writeln!(out, "log-log slope {s:.3}");
            }
            None => out.push_str("log-log slope n/a (single size)\n"),
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> =
            [1.0f64, 2.0, 4.0, 8.0].iter().map(|&n: &f64| (n.ln(), (3.0 * n.powf(1.5)).ln())).collect();
        assert!((fit_slope(&pts).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(fit_slope(&pts[..1]), None);
        assert_eq!(fit_slope(&[(1.0, 2.0), (1.0, 3.0)]), None);
    }

    #[test]
    fn small_bench_has_one_row_per_size() {
        let opts = BenchOptions { sizes: vec![64, 128], ..BenchOptions::default() };
        let table = run(&opts).unwrap();
        assert_eq!(table.rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![64, 128]);
        assert!(table.slope.is_some());
        let single = run(&BenchOptions { sizes: vec![64], ..opts }).unwrap();
        assert_eq!(single.slope, None);
        assert!(single.table().contains("n/a"));
    }
}
