//! Fixed-radius neighborhoods `N(p, R)` with
//! `B(p, R) ∩ P ⊆ N(p, R) ⊆ B(p, cR) ∩ P`, plus point removal.
//!
//! The hash family is a randomly shifted uniform grid with cell width
//! `cR/√d`: a cell has diameter at most `cR`, so points sharing a bucket are
//! always within `cR` of each other. Two points within distance `R` land in
//! the same cell with probability at least `e^{-2d/c}`, which fixes the table
//! count at `⌈e^{2d/c} · ln(n·L/δ)⌉` for a `1 - δ` guarantee over all pairs
//! and all `L` levels.
//!
//! Tables whose partition of the point set coincides with an earlier table
//! (typical at radii far above or below the data scale, where every table is
//! one bucket or all singletons) are stored once; a query probes each distinct
//! partition a single time.

use rand::Rng;
use rustc_hash::{FxHashMap, FxHasher};
use std::hash::Hasher;

use crate::metricspace::{euclid, Dataset};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexMode {
    /// Linear scans returning exactly `B(p, R)` among live points.
    Exact,
    Lsh,
}

/// Build parameters shared by every index of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexParams {
    pub c: f64,
    /// Overall failure probability `δ` of the near-side guarantee.
    pub failure_prob: f64,
    /// Number of radii the run builds indices for; enters the union bound.
    pub num_levels: usize,
    pub seed: u64,
    pub mode: IndexMode,
}

/// `⌈e^{2d/c} · ln(n·num_levels/δ)⌉`, at least 1.
pub fn table_count(n: usize, d: usize, c: f64, num_levels: usize, failure_prob: f64) -> usize {
    let per_table = (2.0 * d as f64 / c).exp();
    let union = ((n.max(1) * num_levels.max(1)) as f64 / failure_prob).ln();
    ((per_table * union).ceil() as usize).max(1)
}

/// One shifted grid and its buckets, stored as CSR over point ids. Bucket ids
/// are numbered by first occurrence in id order, so equal partitions have
/// equal `bucket_of` vectors.
#[derive(Debug, Clone)]
pub struct GridTable {
    cell_width: f64,
    shift: Vec<f64>,
    bucket_of: Vec<u32>,
    offsets: Vec<u32>,
    members: Vec<u32>,
    live_len: Vec<u32>,
    // Position of each id inside `members`; materialized on first removal.
    pos: Vec<u32>,
}

impl GridTable {
    fn build(data: &Dataset, cell_width: f64, shift: Vec<f64>, key_seed: u64) -> Self {
        let n = data.n();
        let (bucket_of, counts) = partition(data, &shift, cell_width, key_seed);
        let mut offsets = Vec::with_capacity(counts.len() + 1);
        offsets.push(0u32);
        for &cnt in &counts {
            offsets.push(offsets.last().unwrap() + cnt);
        }
        let mut fill = offsets.clone();
        let mut members = vec![0u32; n];
        for (id, &b) in bucket_of.iter().enumerate() {
            members[fill[b as usize] as usize] = id as u32;
            fill[b as usize] += 1;
        }
        Self { cell_width, shift, bucket_of, offsets, members, live_len: counts, pos: Vec::new() }
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn num_buckets(&self) -> usize {
        self.live_len.len()
    }

    /// Live ids sharing a bucket with `id`.
    pub fn bucket_of_id(&self, id: usize) -> &[u32] {
        self.live_bucket(self.bucket_of[id] as usize)
    }

    /// Live ids in bucket `b`.
    pub fn live_bucket(&self, b: usize) -> &[u32] {
        let start = self.offsets[b] as usize;
        &self.members[start..start + self.live_len[b] as usize]
    }

    fn signature(&self) -> u64 {
        let mut h = FxHasher::default();
        for &b in &self.bucket_of {
            h.write_u32(b);
        }
        h.finish()
    }

    fn remove(&mut self, id: usize) {
        if self.pos.is_empty() {
            let mut pos = vec![0u32; self.members.len()];
            for (i, &m) in self.members.iter().enumerate() {
                pos[m as usize] = i as u32;
            }
            self.pos = pos;
        }
        let b = self.bucket_of[id] as usize;
        let at = self.pos[id] as usize;
        let last = (self.offsets[b] + self.live_len[b] - 1) as usize;
        debug_assert!(at <= last);
        let moved = self.members[last];
        self.members.swap(at, last);
        self.pos[moved as usize] = at as u32;
        self.pos[id] = last as u32;
        self.live_len[b] -= 1;
    }
}

/// Bucket id of every point (numbered by first occurrence) and bucket sizes.
fn partition(data: &Dataset, shift: &[f64], cell_width: f64, key_seed: u64) -> (Vec<u32>, Vec<u32>) {
    let mut ids_by_key: FxHashMap<u64, u32> = FxHashMap::default();
    let mut bucket_of = Vec::with_capacity(data.n());
    let mut counts: Vec<u32> = Vec::new();
    for p in data.points() {
        let key = cell_key(p, shift, cell_width, key_seed);
        let next = counts.len() as u32;
        let b = *ids_by_key.entry(key).or_insert(next);
        if b == next {
            counts.push(0);
        }
        counts[b as usize] += 1;
        bucket_of.push(b);
    }
    (bucket_of, counts)
}

/// Shift and key seed of table `t`.
fn table_hash(params: &IndexParams, d: usize, cell_width: f64, t: usize) -> (Vec<f64>, u64) {
    let mut rng = seeds::rng(seeds::derive(params.seed, 0x7ab1e, t as u64));
    let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * cell_width).collect();
    (shift, rng.random())
}

/// Grid cell width for radius `r`: cell diameter `c·r`.
pub fn cell_width(c: f64, r: f64, d: usize) -> f64 {
    c * r / (d as f64).sqrt()
}

/// Visits the bucket assignment of every table an lsh-mode index with these
/// parameters would draw, without retaining them. Consecutive tables with an
/// identical partition are reported once. Returns the table count `ℓ`.
pub fn for_each_partition(
    data: &Dataset,
    radius: f64,
    params: &IndexParams,
    mut visit: impl FnMut(&[u32], usize),
) -> usize {
    let num_tables = table_count(data.n(), data.d(), params.c, params.num_levels, params.failure_prob);
    let width = cell_width(params.c, radius, data.d());
    let mut previous: Vec<u32> = Vec::new();
    for t in 0..num_tables {
        let (shift, key_seed) = table_hash(params, data.d(), width, t);
        let (bucket_of, counts) = partition(data, &shift, width, key_seed);
        if bucket_of != previous {
            visit(&bucket_of, counts.len());
            previous = bucket_of;
        }
    }
    num_tables
}

/// Hashed cell id `⌊(x_i + shift_i)/w⌋`; distinct cells may collide in the
/// 64-bit key, which the query's distance filter absorbs.
#[inline]
pub fn cell_key(p: &[f64], shift: &[f64], cell_width: f64, key_seed: u64) -> u64 {
    let mut h = key_seed;
    for (x, s) in p.iter().zip(shift) {
        let cell = ((x + s) / cell_width).floor() as i64;
        h = (h ^ cell as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(29);
    }
    seeds::splitmix64(h)
}

/// Reusable per-caller dedup state for [`NeighborhoodIndex::query_with`].
#[derive(Debug, Clone)]
pub struct QueryScratch {
    stamp: Vec<u32>,
    epoch: u32,
    /// Buckets probed by the last query.
    pub last_probes: usize,
}

impl QueryScratch {
    pub fn new(n: usize) -> Self {
        Self { stamp: vec![0; n], epoch: 0, last_probes: 0 }
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.epoch
    }
}

/// `N(·, R)` for one radius.
#[derive(Debug, Clone)]
pub struct NeighborhoodIndex {
    radius: f64,
    c: f64,
    mode: IndexMode,
    num_tables: usize,
    tables: Vec<GridTable>,
    live: Vec<bool>,
    live_count: usize,
    redundant_removals: usize,
}

impl NeighborhoodIndex {
    pub fn build(data: &Dataset, radius: f64, params: &IndexParams) -> Self {
        assert!(radius > 0.0, "radius must be positive");
        assert!(params.failure_prob > 0.0 && params.failure_prob < 1.0, "failure probability must lie in (0, 1)");
        let n = data.n();
        let d = data.d();
        let mut index = Self {
            radius,
            c: params.c,
            mode: params.mode,
            num_tables: 0,
            tables: Vec::new(),
            live: vec![true; n],
            live_count: n,
            redundant_removals: 0,
        };
        if params.mode == IndexMode::Exact {
            return index;
        }
        let num_tables = table_count(n, d, params.c, params.num_levels, params.failure_prob);
        let width = cell_width(params.c, radius, d);
        let mut by_signature: FxHashMap<u64, Vec<usize>> = FxHashMap::default();
        for t in 0..num_tables {
            let (shift, key_seed) = table_hash(params, d, width, t);
            let table = GridTable::build(data, width, shift, key_seed);
            let sig = table.signature();
            let same = by_signature.entry(sig).or_default();
            if same.iter().any(|&i| index.tables[i].bucket_of == table.bucket_of) {
                continue;
            }
            same.push(index.tables.len());
            index.tables.push(table);
        }
        index.num_tables = num_tables;
        index
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn mode(&self) -> IndexMode {
        self.mode
    }

    /// Number of hash functions `ℓ` drawn (0 in exact mode).
    pub fn num_tables(&self) -> usize {
        self.num_tables
    }

    /// Number of distinct partitions actually stored and probed per query.
    pub fn distinct_tables(&self) -> usize {
        self.tables.len()
    }

    pub fn tables(&self) -> &[GridTable] {
        &self.tables
    }

    pub fn is_live(&self, id: usize) -> bool {
        self.live[id]
    }

    pub fn live_count(&self) -> usize {
        self.live_count
    }

    /// Removals of ids that were already dead.
    pub fn redundant_removals(&self) -> usize {
        self.redundant_removals
    }

    /// Live ids of `N(p, R)` for the stored point `id` (which may itself be dead).
    pub fn query(&self, data: &Dataset, id: usize) -> Vec<usize> {
        let mut scratch = QueryScratch::new(data.n());
        let mut out = Vec::new();
        self.query_with(data, id, &mut scratch, &mut out);
        out.into_iter().map(|q| q as usize).collect()
    }

    /// Appends `N(p, R)` to `out` (cleared first), unordered.
    pub fn query_with(&self, data: &Dataset, id: usize, scratch: &mut QueryScratch, out: &mut Vec<u32>) {
        out.clear();
        let p = data.point(id);
        match self.mode {
            IndexMode::Exact => {
                scratch.last_probes = 0;
                for (q, point) in data.points().enumerate() {
                    if self.live[q] && euclid(p, point) <= self.radius {
                        out.push(q as u32);
                    }
                }
            }
            IndexMode::Lsh => {
                let epoch = scratch.next_epoch();
                let reach = self.c * self.radius;
                for table in &self.tables {
                    for &q in table.bucket_of_id(id) {
                        let slot = &mut scratch.stamp[q as usize];
                        if *slot != epoch {
                            *slot = epoch;
                            if euclid(p, data.point(q as usize)) <= reach {
                                out.push(q);
                            }
                        }
                    }
                }
                scratch.last_probes = self.tables.len();
            }
        }
    }

    /// Deletes `id` from every bucket; removing a dead id is a no-op.
    pub fn remove(&mut self, id: usize) {
        if !self.live[id] {
            self.redundant_removals += 1;
            return;
        }
        self.live[id] = false;
        self.live_count -= 1;
        for table in &mut self.tables {
            table.remove(id);
        }
    }
}
