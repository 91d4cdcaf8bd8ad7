//! Max-rank distinct-count sketches and the per-level ball value tables.
//!
//! Copy `j` of a sketch keeps `max_{id ∈ U} rank_j(id)`, where `rank_j` is the
//! lowest set bit of a seeded multiply-add-shift hash. `2^max` is within a
//! factor 3 of `|U|` with constant probability; the median over
//! `t = ⌈3 log₂ n⌉` copies boosts that to all points at once. Registers merge
//! by element-wise max, so the sketch of a union of LSH buckets is the max of
//! the bucket sketches.

use crate::error::{Error, Result};
use crate::lsh_index::{self, IndexMode, IndexParams};
use crate::metricspace::{euclid, Dataset, ScaleInfo};
use crate::seeds;

/// Register value of a copy that has seen nothing.
pub const EMPTY_REGISTER: i8 = -1;

/// Number of copies for an `n`-point input, `⌈3 log₂ n⌉` (at least 1).
pub fn copies_for(n: usize) -> usize {
    ((3.0 * (n.max(1) as f64).log2()).ceil() as usize).max(1)
}

/// Multiply-add-shift coefficients of copy `copy` under `seed`.
#[inline]
fn coefficients(seed: u64, copy: usize) -> (u128, u128) {
    let w = |i: u64| seeds::derive(seed, copy as u64, i) as u128;
    let a = (w(0) << 64 | w(1)) | 1;
    let b = w(2) << 64 | w(3);
    (a, b)
}

#[inline]
fn rank_with(a: u128, b: u128, id: u64) -> i8 {
    let h = (a.wrapping_mul(id as u128).wrapping_add(b) >> 64) as u64;
    h.trailing_zeros() as i8
}

/// `rank_j(id)`: index of the lowest set bit of the copy-`j` hash (64 if zero).
pub fn rank(seed: u64, copy: usize, id: u64) -> i8 {
    let (a, b) = coefficients(seed, copy);
    rank_with(a, b, id)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DistinctSketch {
    seed: u64,
    registers: Vec<i8>,
}

impl DistinctSketch {
    pub fn new(copies: usize, seed: u64) -> Self {
        assert!(copies >= 1, "a sketch needs at least one copy");
        Self { seed, registers: vec![EMPTY_REGISTER; copies] }
    }

    pub fn registers(&self) -> &[i8] {
        &self.registers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_empty(&self) -> bool {
        self.registers.iter().all(|&r| r == EMPTY_REGISTER)
    }

    pub fn insert(&mut self, id: u64) {
        for (j, reg) in self.registers.iter_mut().enumerate() {
            *reg = (*reg).max(rank(self.seed, j, id));
        }
    }

    /// Register-wise max; `self` becomes the sketch of the union.
    pub fn merge(&mut self, other: &DistinctSketch) -> Result<()> {
        if self.seed != other.seed {
            return Err(Error::SketchMismatch("seeds differ"));
        }
        if self.registers.len() != other.registers.len() {
            return Err(Error::SketchMismatch("copy counts differ"));
        }
        merge_registers(&mut self.registers, &other.registers);
        Ok(())
    }

    /// Median over copies of `2^register`; 0 for the empty sketch.
    pub fn estimate(&self) -> f64 {
        estimate_registers(&self.registers)
    }
}

impl Extend<u64> for DistinctSketch {
    fn extend<I: IntoIterator<Item = u64>>(&mut self, iter: I) {
        for id in iter {
            self.insert(id);
        }
    }
}

#[inline]
fn merge_registers(into: &mut [i8], from: &[i8]) {
    for (a, b) in into.iter_mut().zip(from) {
        *a = (*a).max(*b);
    }
}

/// Lower median of `2^r` over the registers. For even copy counts the lower
/// of the two middle values is taken.
pub fn estimate_registers(registers: &[i8]) -> f64 {
    if registers.iter().all(|&r| r == EMPTY_REGISTER) {
        return 0.0;
    }
    let mut sorted = registers.to_vec();
    sorted.sort_unstable();
    let median = sorted[(sorted.len() - 1) / 2];
    2f64.powi(median as i32)
}

/// `|B(p, R) ∩ P| · R^z` by linear scan.
pub fn exact_nval(data: &Dataset, p: usize, radius: f64, z: f64) -> f64 {
    let center = data.point(p);
    let count = data.points().filter(|q| euclid(center, q) <= radius).count();
    count as f64 * radius.powf(z)
}

/// Estimated `nval(B(p, R))` for every point at one radius.
///
/// In lsh mode: hash every point with the tables a radius-`R` neighborhood
/// index would use, sketch each bucket, merge the `ℓ` bucket sketches of each
/// point and scale the union-size estimate by `R^z`. In exact mode the count is
/// exact.
pub fn compute_values(data: &Dataset, radius: f64, z: f64, index: &IndexParams, rank_seed: u64) -> Vec<f64> {
    let scale = radius.powf(z);
    if index.mode == IndexMode::Exact {
        return (0..data.n()).map(|p| exact_nval(data, p, radius, z)).collect();
    }
    union_estimates(data, radius, index, rank_seed).into_iter().map(|e| e * scale).collect()
}

/// Estimated `|∪_i T_i[f_i(p)]|` for every point.
pub fn union_estimates(data: &Dataset, radius: f64, index: &IndexParams, rank_seed: u64) -> Vec<f64> {
    let n = data.n();
    let t = copies_for(n);
    let coeffs: Vec<(u128, u128)> = (0..t).map(|j| coefficients(rank_seed, j)).collect();
    let mut ranks = vec![0i8; n * t];
    for (id, row) in ranks.chunks_exact_mut(t).enumerate() {
        for (reg, &(a, b)) in row.iter_mut().zip(&coeffs) {
            *reg = rank_with(a, b, id as u64);
        }
    }
    let mut acc = vec![EMPTY_REGISTER; n * t];
    let mut buckets: Vec<i8> = Vec::new();
    lsh_index::for_each_partition(data, radius, index, |bucket_of, num_buckets| {
        buckets.clear();
        buckets.resize(num_buckets * t, EMPTY_REGISTER);
        for (id, &b) in bucket_of.iter().enumerate() {
            let b = b as usize;
            merge_registers(&mut buckets[b * t..(b + 1) * t], &ranks[id * t..(id + 1) * t]);
        }
        for (id, &b) in bucket_of.iter().enumerate() {
            let b = b as usize;
            merge_registers(&mut acc[id * t..(id + 1) * t], &buckets[b * t..(b + 1) * t]);
        }
    });
    acc.chunks_exact(t).map(estimate_registers).collect()
}

/// Exact `|B(p, R_ℓ)|` for every point and level, from one sorted distance
/// row per point.
pub fn exact_counts(data: &Dataset, info: &ScaleInfo) -> Vec<Vec<u32>> {
    let n = data.n();
    let radii: Vec<f64> = (0..info.num_levels).map(|l| info.radius(l)).collect();
    let mut counts = vec![vec![0u32; n]; info.num_levels];
    let mut row = vec![0.0f64; n];
    for p in 0..n {
        let center = data.point(p);
        for (q, slot) in row.iter_mut().enumerate() {
            *slot = euclid(center, data.point(q));
        }
        row.sort_unstable_by(f64::total_cmp);
        for (level, r) in radii.iter().enumerate() {
            counts[level][p] = row.partition_point(|&x| x <= *r) as u32;
        }
    }
    counts
}

/// `nval` for every `(point, level)`, frozen after construction.
#[derive(Debug, Clone)]
pub struct ValueTable {
    n: usize,
    num_levels: usize,
    values: Vec<f64>,
}

impl ValueTable {
    /// Values at every level of `info`. Levels draw independent table and
    /// rank seeds from `seed`.
    pub fn compute(data: &Dataset, info: &ScaleInfo, z: f64, failure_prob: f64, seed: u64, mode: IndexMode) -> Self {
        let n = data.n();
        let mut values = Vec::with_capacity(n * info.num_levels);
        match mode {
            IndexMode::Exact => {
                for (level, row) in exact_counts(data, info).into_iter().enumerate() {
                    let scale = info.radius(level).powf(z);
                    values.extend(row.into_iter().map(|cnt| cnt as f64 * scale));
                }
            }
            IndexMode::Lsh => {
                for level in 0..info.num_levels {
                    let params = IndexParams {
                        c: info.c,
                        failure_prob,
                        num_levels: info.num_levels,
                        seed: seeds::derive(seed, seeds::STREAM_VALUE_TABLES, level as u64),
                        mode,
                    };
                    let rank_seed = seeds::derive(seed, seeds::STREAM_VALUE_RANKS, level as u64);
                    values.extend(compute_values(data, info.radius(level), z, &params, rank_seed));
                }
            }
        }
        Self { n, num_levels: info.num_levels, values }
    }

    pub fn from_levels(levels: Vec<Vec<f64>>) -> Self {
        let n = levels.first().map_or(0, Vec::len);
        assert!(levels.iter().all(|l| l.len() == n), "ragged value table");
        Self { n, num_levels: levels.len(), values: levels.concat() }
    }

    #[inline]
    pub fn get(&self, point: usize, level: usize) -> f64 {
        self.values[level * self.n + point]
    }

    pub fn level(&self, level: usize) -> &[f64] {
        &self.values[level * self.n..(level + 1) * self.n]
    }

    pub fn num_levels(&self) -> usize {
        self.num_levels
    }

    pub fn n(&self) -> usize {
        self.n
    }
}
