//! The clustering pipeline behind `fastk cluster`.

use std::time::Instant;

use fastk_core::greedy_core::{default_failure_prob, GreedyConfig, GreedyState, Mode};
use fastk_core::lsh_index::table_count;
use fastk_core::metricspace::{cost_of_ids, jl_project, normalize};
use fastk_core::{ClusterParams, Dataset};

use crate::error::CliError;
use crate::report::{CostEntry, InputInfo, NormalizationInfo, ParamsEcho, RunReport, Timings};

/// Inputs with more dimensions than this are projected unless told otherwise.
pub const AUTO_PROJECT_ABOVE: usize = 24;

/// Refuse LSH runs whose tables would hold more entries than this.
pub const MAX_TABLE_ENTRIES: f64 = 4e8;

const PROJECTION_SALT: u64 = 0x6a09_e667_f3bc_c908;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    Auto,
    Off,
    Dim(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOptions {
    /// `None` runs the full incremental ordering.
    pub k: Option<usize>,
    pub z: f64,
    pub c: f64,
    pub seed: u64,
    pub mode: Mode,
    pub failure_prob: Option<f64>,
    pub projection: Projection,
    /// Prefix lengths to report costs for; empty means just `k` (or the
    /// number of emitted centers for incremental runs).
    pub cost_at: Vec<usize>,
    /// Skip cost evaluation entirely (used by the benchmark).
    pub skip_costs: bool,
}

impl ClusterOptions {
    pub fn new(k: Option<usize>, z: f64, c: f64, seed: u64, mode: Mode) -> Self {
        Self {
            k,
            z,
            c,
            seed,
            mode,
            failure_prob: None,
            projection: Projection::Auto,
            cost_at: Vec::new(),
            skip_costs: false,
        }
    }
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Exact => "exact",
        Mode::Lsh => "lsh",
    }
}

pub fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "exact" => Ok(Mode::Exact),
        "lsh" => Ok(Mode::Lsh),
        other => Err(format!("unknown mode `{other}` (expected exact or lsh)")),
    }
}

/// `8·⌈log₂ n⌉`, capped at `d`.
pub fn auto_projection_dim(n: usize, d: usize) -> usize {
    let log = (n.max(2) as f64).log2().ceil() as usize;
    (8 * log).min(d)
}

fn working_dim(opts: &ClusterOptions, n: usize, d: usize) -> Result<Option<usize>, CliError> {
    match opts.projection {
        Projection::Off => Ok(None),
        Projection::Dim(0) => Err(CliError::Usage("--project-dim must be at least 1".into())),
        Projection::Dim(t) => Ok(Some(t)),
        Projection::Auto if d > AUTO_PROJECT_ABOVE => {
            let t = auto_projection_dim(n, d);
            Ok((t < d).then_some(t))
        }
        Projection::Auto => Ok(None),
    }
}

fn validate(opts: &ClusterOptions, n: usize) -> Result<(), CliError> {
    ClusterParams::new(opts.k.unwrap_or(1), opts.z, opts.c, opts.seed)?;
    if let Some(k) = opts.k {
        if k > n {
            return Err(CliError::Usage(format!("k = {k} exceeds the number of points n = {n}")));
        }
    }
    if let Some(p) = opts.failure_prob {
        if !(p > 0.0 && p < 1.0) {
            return Err(CliError::Usage(format!("--delta-failure must lie in (0, 1), got {p}")));
        }
    }
    Ok(())
}

/// Projects (when asked), normalizes, builds the structures, runs the greedy
/// loop and evaluates prefix costs on `data` itself.
pub fn run(data: &Dataset, opts: &ClusterOptions) -> Result<RunReport, CliError> {
    let n = data.n();
    validate(opts, n)?;
    let mut timings = Timings::default();

    let clock = Instant::now();
    let target = working_dim(opts, n, data.d())?;
    let projected = match target {
        Some(t) => Some(jl_project(data, t, opts.seed ^ PROJECTION_SALT)?),
        None => None,
    };
    let working = projected.as_ref().unwrap_or(data);
    timings.project = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (normalized, info) = normalize(working, opts.c)?;
    timings.normalize = clock.elapsed().as_secs_f64();

    let failure_prob = opts.failure_prob.unwrap_or_else(|| default_failure_prob(n));
    if opts.mode == Mode::Lsh {
        let tables = table_count(n, working.d(), opts.c, info.num_levels, failure_prob);
        let entries = 2.0 * info.num_levels as f64 * tables as f64 * n as f64;
        if entries > MAX_TABLE_ENTRIES {
            return Err(CliError::Usage(format!(
                "lsh mode would need {tables} tables per level in dimension {}; \
                 use --mode exact or a smaller --project-dim",
                working.d()
            )));
        }
    }

    let clock = Instant::now();
    let config =
        GreedyConfig { failure_prob: Some(failure_prob), ..GreedyConfig::new(opts.z, opts.c, opts.seed, opts.mode) };
    let mut state = GreedyState::init(&normalized, &info, config)?;
    timings.init = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    match opts.k {
        Some(k) => state.run(k),
        None => state.run_incremental(),
    };
    timings.greedy = clock.elapsed().as_secs_f64();
    let solution = state.into_solution();

    let costs = if opts.skip_costs {
        Vec::new()
    } else {
        let ks =
            if opts.cost_at.is_empty() { vec![opts.k.unwrap_or(solution.achieved_k())] } else { opts.cost_at.clone() };
        ks.into_iter()
            .map(|k| Ok(CostEntry { k, cost: cost_of_ids(data, solution.prefix(k), opts.z)? }))
            .collect::<Result<_, CliError>>()?
    };

    Ok(RunReport {
        tool: format!("fastk {}", env!("CARGO_PKG_VERSION")),
        params: ParamsEcho {
            k: opts.k,
            z: opts.z,
            c: opts.c,
            seed: opts.seed,
            mode: mode_name(opts.mode).to_string(),
            delta_failure: failure_prob,
            incremental: opts.k.is_none(),
        },
        input: InputInfo { n, d: data.d(), working_d: working.d(), projected: projected.is_some() },
        normalization: NormalizationInfo { scale: info.scale, delta: info.delta, num_levels: info.num_levels },
        achieved_k: solution.achieved_k(),
        early_terminated: solution.early_terminated,
        centers: solution.centers,
        costs,
        timings,
    })
}

/// Recomputes `cost(P, C_k)` for each `k`, taking prefixes of `centers`.
pub fn evaluate(data: &Dataset, centers: &[usize], ks: &[usize], z: f64) -> Result<Vec<CostEntry>, CliError> {
    ks.iter().map(|&k| Ok(CostEntry { k, cost: cost_of_ids(data, &centers[..k.min(centers.len())], z)? })).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_projection_target() {
        assert_eq!(auto_projection_dim(1024, 100), 80);
        assert_eq!(auto_projection_dim(1024, 30), 30);
        assert_eq!(auto_projection_dim(1, 100), 8);
    }

    #[test]
    fn projection_choice() {
        let mut opts = ClusterOptions::new(Some(1), 2.0, 5.0, 0, Mode::Exact);
        assert_eq!(working_dim(&opts, 16, 24).unwrap(), None);
        assert_eq!(working_dim(&opts, 16, 100).unwrap(), Some(32));
        assert_eq!(working_dim(&opts, 1 << 20, 100).unwrap(), None);
        opts.projection = Projection::Off;
        assert_eq!(working_dim(&opts, 16, 100).unwrap(), None);
        opts.projection = Projection::Dim(3);
        assert_eq!(working_dim(&opts, 16, 2).unwrap(), Some(3));
        opts.projection = Projection::Dim(0);
        assert!(working_dim(&opts, 16, 2).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        let data = Dataset::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let run_with = |k, c| run(&data, &ClusterOptions::new(Some(k), 2.0, c, 0, Mode::Exact));
        assert!(matches!(run_with(3, 5.0), Err(CliError::Usage(_))));
        let err = run_with(1, 4.0).unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
        assert!(err.to_string().contains("c >= 5") || err.to_string().contains("c ≥ 5"), "{err}");
    }

    #[test]
    fn huge_lsh_instances_are_refused() {
        let data = Dataset::new((0..64).map(|i| vec![i as f64; 40]).collect()).unwrap();
        let mut opts = ClusterOptions::new(Some(2), 2.0, 5.0, 0, Mode::Lsh);
        opts.projection = Projection::Off;
        assert!(matches!(run(&data, &opts), Err(CliError::Usage(_))));
    }
}
