//! Greedy ball selection: pick the most valuable available ball, descend
//! through balls of radius `R/(2c)` around its `10cR`-neighborhood down to the
//! minimum radius, emit the final center, then make every ball `B(p, R)` with
//! `p ∈ N(center, 100c⁴R)` unavailable.
//!
//! The algorithm never looks at `k`, so the centers emitted by one long run
//! form an incremental ordering: every prefix is the output of a run stopped
//! early.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::count_sketch::ValueTable;
use crate::error::Result;
use crate::lsh_index::{IndexParams, NeighborhoodIndex, QueryScratch};
use crate::metricspace::{cost_of_ids, validate_c, Dataset, ScaleInfo};
use crate::seeds;

pub use crate::lsh_index::IndexMode as Mode;

/// Radius multiplier of the sequence (descent) neighborhoods.
pub fn sequence_factor(c: f64) -> f64 {
    10.0 * c
}

/// Radius multiplier of the removal neighborhoods.
pub fn removal_factor(c: f64) -> f64 {
    100.0 * c.powi(4)
}

/// Ball `B(point, Δ/(2c)^level)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BallRef {
    pub point: usize,
    pub level: usize,
}

/// Balls visited by one descent, head first; each step goes one level down.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SequenceTrace {
    pub balls: Vec<BallRef>,
}

impl SequenceTrace {
    pub fn head(&self) -> BallRef {
        self.balls[0]
    }

    pub fn last(&self) -> BallRef {
        *self.balls.last().expect("non-empty trace")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Solution {
    /// Emitted centers in order; every prefix is a solution for its length.
    pub centers: Vec<usize>,
    pub traces: Vec<SequenceTrace>,
    /// Set when the run ran out of available balls before reaching its target.
    pub early_terminated: bool,
}

impl Solution {
    pub fn achieved_k(&self) -> usize {
        self.centers.len()
    }

    pub fn prefix(&self, k: usize) -> &[usize] {
        &self.centers[..k.min(self.centers.len())]
    }

    /// `cost(P, C_k)` for every requested prefix length (clamped to the
    /// number of emitted centers).
    pub fn prefix_costs(&self, data: &Dataset, ks: &[usize], z: f64) -> Result<Vec<(usize, f64)>> {
        ks.iter()
            .map(|&k| {
                let k = k.min(self.centers.len());
                cost_of_ids(data, self.prefix(k), z).map(|cost| (k, cost))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyConfig {
    pub z: f64,
    pub c: f64,
    pub seed: u64,
    pub mode: Mode,
    /// Failure probability for the LSH guarantees; `None` means `1/n²`.
    pub failure_prob: Option<f64>,
    /// Record per-event geometric checks (costs memory proportional to the
    /// candidate sets of one iteration).
    pub instrument: bool,
}

impl GreedyConfig {
    pub fn new(z: f64, c: f64, seed: u64, mode: Mode) -> Self {
        Self { z, c, seed, mode, failure_prob: None, instrument: false }
    }

    pub fn instrumented(mut self) -> Self {
        self.instrument = true;
        self
    }
}

/// Default failure probability `1/n²`, kept below 1 for tiny inputs.
pub fn default_failure_prob(n: usize) -> f64 {
    let n = n.max(2) as f64;
    1.0 / (n * n)
}

/// Counters and invariant checks collected during a run.
#[derive(Debug, Clone, Default)]
pub struct Instrumentation {
    pub sequence_queries: usize,
    pub removal_queries: usize,
    pub bucket_probes: usize,
    /// Largest number of sequence queries at one level returning the same id.
    pub max_candidate_hits: u32,
    /// Largest number of removal queries at one level returning the same id.
    pub max_removal_hits: u32,
    pub trace_checks: usize,
    pub trace_violations: usize,
    pub proximity_checks: usize,
    pub proximity_violations: usize,
    pub descendant_checks: usize,
    pub descendant_violations: usize,
    /// Descents ending at an already emitted center (only possible when an
    /// LSH near-side guarantee failed).
    pub repeated_centers: usize,
}

impl Instrumentation {
    pub fn violations(&self) -> usize {
        self.trace_violations + self.proximity_violations + self.descendant_violations
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    value: f64,
    point: u32,
    level: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // Max value first; ties go to the smaller point id, then the smaller level.
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.point.cmp(&self.point))
            .then_with(|| other.level.cmp(&self.level))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Mutable state of one run over a normalized dataset.
pub struct GreedyState<'a> {
    data: &'a Dataset,
    info: ScaleInfo,
    config: GreedyConfig,
    values: ValueTable,
    available: Vec<bool>,
    available_count: usize,
    heap: BinaryHeap<HeapEntry>,
    sequence: Vec<NeighborhoodIndex>,
    removal: Vec<NeighborhoodIndex>,
    solution: Solution,
    is_center: Vec<bool>,
    candidate_hits: Vec<u32>,
    removal_hits: Vec<u32>,
    stats: Instrumentation,
    scratch: QueryScratch,
    buffer: Vec<u32>,
    pending: Vec<(u32, u32)>,
}

impl<'a> GreedyState<'a> {
    /// Computes every ball value and builds both neighborhood families.
    /// `data` must already be normalized with `info`.
    pub fn init(data: &'a Dataset, info: &ScaleInfo, config: GreedyConfig) -> Result<Self> {
        validate_c(config.c)?;
        if config.c != info.c {
            return Err(crate::Error::InvalidParam(format!(
                "c = {} does not match the normalization (c = {})",
                config.c, info.c
            )));
        }
        if !(config.z >= 1.0 && config.z.is_finite()) {
            return Err(crate::Error::InvalidParam(format!("z must be a finite real >= 1, got {}", config.z)));
        }
        let failure_prob = config.failure_prob.unwrap_or_else(|| default_failure_prob(data.n()));
        if !(failure_prob > 0.0 && failure_prob < 1.0) {
            return Err(crate::Error::InvalidParam(format!(
                "failure probability must lie in (0, 1), got {failure_prob}"
            )));
        }
        let values = ValueTable::compute(data, info, config.z, failure_prob, config.seed, config.mode);
        let family = |stream: u64, factor: f64| -> Vec<NeighborhoodIndex> {
            (0..info.num_levels)
                .map(|level| {
                    let params = IndexParams {
                        c: config.c,
                        failure_prob,
                        num_levels: info.num_levels,
                        seed: seeds::derive(config.seed, stream, level as u64),
                        mode: config.mode,
                    };
                    NeighborhoodIndex::build(data, factor * info.radius(level), &params)
                })
                .collect()
        };
        let sequence = family(seeds::STREAM_SEQUENCE_INDEX, sequence_factor(config.c));
        let removal = family(seeds::STREAM_REMOVAL_INDEX, removal_factor(config.c));
        Ok(Self::assemble(data, *info, config, values, sequence, removal))
    }

    fn assemble(
        data: &'a Dataset,
        info: ScaleInfo,
        config: GreedyConfig,
        values: ValueTable,
        sequence: Vec<NeighborhoodIndex>,
        removal: Vec<NeighborhoodIndex>,
    ) -> Self {
        let n = data.n();
        let balls = n * info.num_levels;
        let mut entries = Vec::with_capacity(balls);
        for level in 0..info.num_levels {
            for point in 0..n {
                entries.push(HeapEntry { value: values.get(point, level), point: point as u32, level: level as u32 });
            }
        }
        Self {
            data,
            info,
            config,
            values,
            available: vec![true; balls],
            available_count: balls,
            heap: BinaryHeap::from(entries),
            sequence,
            removal,
            solution: Solution::default(),
            is_center: vec![false; n],
            candidate_hits: vec![0; balls],
            removal_hits: vec![0; balls],
            stats: Instrumentation::default(),
            scratch: QueryScratch::new(n),
            buffer: Vec::new(),
            pending: Vec::new(),
        }
    }

    pub fn values(&self) -> &ValueTable {
        &self.values
    }

    pub fn info(&self) -> &ScaleInfo {
        &self.info
    }

    pub fn available_count(&self) -> usize {
        self.available_count
    }

    pub fn is_available(&self, ball: BallRef) -> bool {
        self.available[self.slot(ball)]
    }

    pub fn instrumentation(&self) -> &Instrumentation {
        &self.stats
    }

    pub fn sequence_index(&self, level: usize) -> &NeighborhoodIndex {
        &self.sequence[level]
    }

    pub fn removal_index(&self, level: usize) -> &NeighborhoodIndex {
        &self.removal[level]
    }

    #[inline]
    fn slot(&self, ball: BallRef) -> usize {
        ball.level * self.data.n() + ball.point
    }

    /// The available ball of largest value, without consuming it. Entries of
    /// balls that became unavailable are discarded on the way.
    pub fn peek_max_available(&mut self) -> Option<BallRef> {
        while let Some(top) = self.heap.peek() {
            let ball = BallRef { point: top.point as usize, level: top.level as usize };
            if self.available[self.slot(ball)] {
                return Some(ball);
            }
            self.heap.pop();
        }
        None
    }

    /// Follows the sequence from `head` to the minimum radius and returns the
    /// final center with the visited balls.
    pub fn descend(&mut self, head: BallRef) -> (usize, SequenceTrace) {
        let n = self.data.n();
        let min_level = self.info.min_level();
        let mut balls = vec![head];
        let mut x = head.point;
        let mut level = head.level;
        while level < min_level {
            self.sequence[level].query_with(self.data, x, &mut self.scratch, &mut self.buffer);
            self.stats.sequence_queries += 1;
            self.stats.bucket_probes += self.scratch.last_probes;
            let next = level + 1;
            let mut best: Option<(f64, usize)> = None;
            for &p in &self.buffer {
                let p = p as usize;
                let hits = &mut self.candidate_hits[level * n + p];
                *hits += 1;
                self.stats.max_candidate_hits = self.stats.max_candidate_hits.max(*hits);
                let value = self.values.get(p, next);
                let better = match best {
                    None => true,
                    Some((bv, bp)) => value > bv || (value == bv && p < bp),
                };
                if better {
                    best = Some((value, p));
                }
            }
            if self.config.instrument {
                if level == head.level {
                    for &p in &self.buffer {
                        self.stats.descendant_checks += 1;
                        if !self.available[next * n + p as usize] {
                            self.stats.descendant_violations += 1;
                        }
                    }
                }
                self.pending.extend(self.buffer.iter().map(|&p| (p, level as u32)));
            }
            // Sequence indices are never mutated, so x is always its own neighbor.
            let (_, p) = best.expect("a point is its own neighbor");
            x = p;
            level = next;
            balls.push(BallRef { point: x, level });
        }
        (x, SequenceTrace { balls })
    }

    /// Invalidates every `B(p, R)` with `p ∈ N(center, 100c⁴R)` at every level.
    pub fn remove_around(&mut self, center: usize) {
        let n = self.data.n();
        for level in 0..self.info.num_levels {
            self.removal[level].query_with(self.data, center, &mut self.scratch, &mut self.buffer);
            self.stats.removal_queries += 1;
            self.stats.bucket_probes += self.scratch.last_probes;
            for &p in &self.buffer {
                let slot = level * n + p as usize;
                if self.available[slot] {
                    self.available[slot] = false;
                    self.available_count -= 1;
                }
                self.removal_hits[slot] += 1;
                self.stats.max_removal_hits = self.stats.max_removal_hits.max(self.removal_hits[slot]);
                self.removal[level].remove(p as usize);
            }
        }
    }

    fn check_trace(&mut self, trace: &SequenceTrace) {
        let head = trace.head();
        let bound = 20.0 * self.config.c * self.config.c * self.info.radius(head.level) * (1.0 + 1e-9);
        for ball in &trace.balls {
            self.stats.trace_checks += 1;
            if self.data.dist(head.point, ball.point) > bound {
                self.stats.trace_violations += 1;
            }
        }
    }

    fn check_proximity(&mut self, center: usize) {
        let c2 = 30.0 * self.config.c * self.config.c;
        for &(p, level) in &self.pending {
            self.stats.proximity_checks += 1;
            if self.data.dist(p as usize, center) > c2 * self.info.radius(level as usize) * (1.0 + 1e-9) {
                self.stats.proximity_violations += 1;
            }
        }
        self.pending.clear();
    }

    /// Runs iterations until `k` centers exist in total or no ball is
    /// available, and returns everything emitted so far.
    pub fn run(&mut self, k: usize) -> &Solution {
        while self.solution.centers.len() < k {
            let Some(head) = self.peek_max_available() else {
                self.solution.early_terminated = true;
                break;
            };
            let (center, trace) = self.descend(head);
            self.check_trace(&trace);
            if self.is_center[center] {
                self.stats.repeated_centers += 1;
                self.pending.clear();
                let slot = self.slot(head);
                self.available[slot] = false;
                self.available_count -= 1;
                continue;
            }
            self.is_center[center] = true;
            self.solution.centers.push(center);
            self.solution.traces.push(trace);
            self.remove_around(center);
            if self.config.instrument {
                self.check_proximity(center);
            }
        }
        &self.solution
    }

    /// Runs until no ball is available: the full incremental ordering.
    pub fn run_incremental(&mut self) -> &Solution {
        self.run(usize::MAX)
    }

    pub fn solution(&self) -> &Solution {
        &self.solution
    }

    pub fn into_solution(self) -> Solution {
        self.solution
    }
}

/// Normalizes `data`, runs `k` iterations and returns the solution in terms
/// of the original point ids.
pub fn cluster(data: &Dataset, k: usize, config: GreedyConfig) -> Result<Solution> {
    let (normalized, info) = crate::metricspace::normalize(data, config.c)?;
    let mut state = GreedyState::init(&normalized, &info, config)?;
    state.run(k);
    Ok(state.into_solution())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metricspace::normalize;
    use rand::Rng;

    fn line(xs: &[f64]) -> Dataset {
        Dataset::new(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    fn random_dataset(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = seeds::rng(seed);
        Dataset::new((0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()).unwrap()
    }

    fn exact(z: f64) -> GreedyConfig {
        GreedyConfig::new(z, 5.0, 1, Mode::Exact).instrumented()
    }

    #[test]
    fn singleton_init_and_run() {
        let data = Dataset::new(vec![vec![1.0, 2.0]]).unwrap();
        let (norm, info) = normalize(&data, 5.0).unwrap();
        for mode in [Mode::Exact, Mode::Lsh] {
            let mut state = GreedyState::init(&norm, &info, GreedyConfig::new(2.0, 5.0, 3, mode)).unwrap();
            assert_eq!(state.available_count(), info.num_levels);
            if mode == Mode::Exact {
                for l in 0..info.num_levels {
                    assert_eq!(state.values().get(0, l), info.radius(l).powi(2));
                }
            }
            let solution = state.run(5).clone();
            assert_eq!(solution.centers, vec![0]);
            assert!(solution.early_terminated);
            assert_eq!(solution.traces[0].balls.len(), info.num_levels);
            assert!(solution.traces[0].balls.iter().all(|b| b.point == 0));
            assert_eq!(state.available_count(), 0);
        }
    }

    #[test]
    fn ball_count_after_init() {
        let (norm, info) = normalize(&random_dataset(25, 2, 1), 5.0).unwrap();
        let state = GreedyState::init(&norm, &info, exact(2.0)).unwrap();
        assert_eq!(state.available_count(), 25 * info.num_levels);
    }

    #[test]
    fn exact_heap_maximum_is_full_scan_maximum() {
        let (norm, info) = normalize(&random_dataset(30, 2, 7), 5.0).unwrap();
        let mut state = GreedyState::init(&norm, &info, exact(2.0)).unwrap();
        let mut best: Option<(f64, BallRef)> = None;
        for level in 0..info.num_levels {
            for p in 0..norm.n() {
                let count = (0..norm.n()).filter(|&q| norm.dist(p, q) <= info.radius(level)).count();
                let v = count as f64 * info.radius(level).powi(2);
                if best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, BallRef { point: p, level }));
                }
            }
        }
        assert_eq!(state.peek_max_available(), Some(best.unwrap().1));
    }

    #[test]
    fn two_point_trace_bound() {
        let data = line(&[0.0, 1.0]);
        let (norm, info) = normalize(&data, 5.0).unwrap();
        let mut state = GreedyState::init(&norm, &info, exact(1.0)).unwrap();
        let head = state.peek_max_available().unwrap();
        let (center, trace) = state.descend(head);
        assert!(norm.dist(head.point, center) <= 20.0 * 25.0 * info.radius(head.level));
        assert_eq!(trace.last().level, info.min_level());
    }

    #[test]
    fn min_level_ball_of_center_is_removed() {
        let (norm, info) = normalize(&random_dataset(40, 2, 3), 5.0).unwrap();
        for mode in [Mode::Exact, Mode::Lsh] {
            let mut state = GreedyState::init(&norm, &info, GreedyConfig::new(2.0, 5.0, 2, mode)).unwrap();
            let solution = state.run(4).clone();
            for &c in &solution.centers {
                assert!(!state.is_available(BallRef { point: c, level: info.min_level() }));
            }
        }
    }

    #[test]
    fn zero_cost_when_k_is_distinct_count() {
        let data = line(&[0.0, 0.0, 1.0, 3.0, 3.0, 3.0, 7.5]);
        let (norm, info) = normalize(&data, 5.0).unwrap();
        let mut state = GreedyState::init(&norm, &info, exact(2.0)).unwrap();
        let solution = state.run(4).clone();
        assert_eq!(solution.achieved_k(), 4);
        assert_eq!(cost_of_ids(&data, &solution.centers, 2.0).unwrap(), 0.0);
        let full = state.run_incremental().clone();
        assert_eq!(full.achieved_k(), 4);
        assert!(full.early_terminated);
    }

    #[test]
    fn removal_bitmap_matches_replay() {
        let (norm, info) = normalize(&random_dataset(30, 2, 12), 5.0).unwrap();
        let mut state = GreedyState::init(&norm, &info, exact(1.0)).unwrap();
        let solution = state.run(3).clone();
        for level in 0..info.num_levels {
            let reach = removal_factor(5.0) * info.radius(level);
            for p in 0..norm.n() {
                let covered = solution.centers.iter().any(|&c| norm.dist(p, c) <= reach);
                assert_eq!(state.is_available(BallRef { point: p, level }), !covered);
            }
        }
    }

    #[test]
    fn incremental_prefixes_match_stopped_runs() {
        let (norm, info) = normalize(&random_dataset(20, 2, 4), 5.0).unwrap();
        for mode in [Mode::Exact, Mode::Lsh] {
            let config = GreedyConfig::new(2.0, 5.0, 9, mode);
            let full = GreedyState::init(&norm, &info, config).unwrap().run_incremental().clone();
            for k in 1..=full.achieved_k() {
                let mut state = GreedyState::init(&norm, &info, config).unwrap();
                assert_eq!(state.run(k).centers, full.prefix(k));
            }
        }
    }

    #[test]
    fn invariants_hold_on_random_runs() {
        for seed in 0..5 {
            let (norm, info) = normalize(&random_dataset(60, 2, seed), 5.0).unwrap();
            for mode in [Mode::Exact, Mode::Lsh] {
                let mut state =
                    GreedyState::init(&norm, &info, GreedyConfig::new(2.0, 5.0, seed, mode).instrumented()).unwrap();
                state.run_incremental();
                let stats = state.instrumentation();
                assert_eq!(stats.violations(), 0, "{stats:?}");
                assert!(stats.max_candidate_hits <= 1, "{stats:?}");
                assert!(stats.max_removal_hits <= 1, "{stats:?}");
                assert_eq!(stats.repeated_centers, 0);
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (norm, info) = normalize(&random_dataset(50, 3, 8), 5.0).unwrap();
        let config = GreedyConfig::new(1.0, 5.0, 77, Mode::Lsh);
        let a = GreedyState::init(&norm, &info, config).unwrap().run(10).clone();
        let b = GreedyState::init(&norm, &info, config).unwrap().run(10).clone();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_configuration() {
        let (norm, info) = normalize(&random_dataset(5, 2, 1), 5.0).unwrap();
        assert!(GreedyState::init(&norm, &info, GreedyConfig::new(2.0, 6.0, 0, Mode::Exact)).is_err());
        assert!(GreedyState::init(&norm, &info, GreedyConfig::new(0.5, 5.0, 0, Mode::Exact)).is_err());
    }
}
