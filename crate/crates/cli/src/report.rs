//! Machine-readable run reports.
//!
//! A report is one JSON object with a fixed field order:
//! `tool`, `params`, `input`, `normalization`, `centers`, `achieved_k`,
//! `early_terminated`, `costs`, `timings`. Everything except `timings` is a
//! pure function of the input file and the flags.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub params: ParamsEcho,
    pub input: InputInfo,
    pub normalization: NormalizationInfo,
    /// Center ids in emission order; every prefix is a solution.
    pub centers: Vec<usize>,
    pub achieved_k: usize,
    pub early_terminated: bool,
    pub costs: Vec<CostEntry>,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    /// `None` for a full incremental run.
    pub k: Option<usize>,
    pub z: f64,
    pub c: f64,
    pub seed: u64,
    pub mode: String,
    pub delta_failure: f64,
    pub incremental: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub n: usize,
    pub d: usize,
    /// Dimension the algorithm ran in; differs from `d` after projection.
    pub working_d: usize,
    pub projected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationInfo {
    pub scale: f64,
    pub delta: f64,
    pub num_levels: usize,
}

/// Cost of the first `k` centers on the original input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEntry {
    pub k: usize,
    pub cost: f64,
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub project: f64,
    pub normalize: f64,
    pub init: f64,
    pub greedy: f64,
}

impl Timings {
    /// Time spent in the algorithm proper (cost evaluation excluded).
    pub fn total(&self) -> f64 {
        self.project + self.normalize + self.init + self.greedy
    }
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("reports serialize");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// The report with timings zeroed, for determinism comparisons.
    pub fn body(&self) -> String {
        let mut copy = self.clone();
        copy.timings = Timings::default();
        copy.to_json()
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let p = &self.params;
        let k = p.k.map_or_else(|| "all".to_string(), |k| k.to_string());
        let _ = writeln!(out, "mode {}  k {}  z {}  c {}  seed {}", p.mode, k, p.z, p.c, p.seed);
        let _ = writeln!(
            out,
            "n {}  d {}  working d {}  levels {}  delta {}",
            self.input.n, self.input.d, self.input.working_d, self.normalization.num_levels, self.normalization.delta
        );
        let status = if self.early_terminated { "  (ran out of available balls)" } else { "" };
        let _ = writeln!(out, "centers {}{}", self.achieved_k, status);
        if !self.costs.is_empty() {
            let _ = writeln!(out, "{:>8}  {:>20}", "k", "cost");
            for entry in &self.costs {
                let _ = writeln!(out, "{:>8}  {:>20.9e}", entry.k, entry.cost);
            }
        }
        let t = &self.timings;
        let _ = writeln!(
            out,
            "time project {:.3}s  normalize {:.3}s  init {:.3}s  greedy {:.3}s",
            t.project, t.normalize, t.init, t.greedy
        );
        out
    }
}
