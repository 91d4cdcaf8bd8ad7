//! Point sets, Euclidean distances, clustering cost and the radius schedule.
//!
//! Everything downstream assumes the normalized setting produced by
//! [`normalize`]: the smallest nonzero pairwise distance is (just above) 1 and
//! `Δ` is a power of `2c` bounding the diameter. Radii are never accumulated;
//! [`ScaleInfo::radius`] recomputes `Δ/(2c)^ℓ` from the level index.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::seeds;

/// Above this size the minimum distance search may switch to the randomized grid.
pub const BRUTE_FORCE_CLOSEST_PAIR_MAX_N: usize = 8192;

/// Levels below `log_{2c}(Δ)`; the smallest radius is `(2c)^-7`.
pub const EXTRA_LEVELS: usize = 7;

/// Relative slack applied to the normalization scale so rounding can never
/// push the closest pair below distance 1.
const SCALE_SLACK: f64 = 1e-12;
const ALREADY_NORMALIZED_TOL: f64 = 1e-9;

/// Immutable multiset of `n` points in `R^d`, stored row-major. Point ids are
/// row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    coords: Vec<f64>,
    n: usize,
    d: usize,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let d = points.first().ok_or(Error::EmptyDataset)?.len();
        let mut coords = Vec::with_capacity(points.len() * d);
        for p in &points {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: p.len() });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(d, coords)
    }

    pub fn from_flat(d: usize, coords: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParam("dimension must be at least 1".into()));
        }
        if coords.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !coords.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch { expected: d, found: coords.len() % d });
        }
        if let Some(pos) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { point: pos / d });
        }
        let n = coords.len() / d;
        Ok(Self { coords, n, d })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn point(&self, id: usize) -> &[f64] {
        &self.coords[id * self.d..(id + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.d)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Distance between two stored points.
    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        euclid(self.point(a), self.point(b))
    }

    /// Number of distinct locations (exact coordinate equality).
    pub fn distinct_count(&self) -> usize {
        let mut seen = rustc_hash::FxHashSet::default();
        for p in self.points() {
            seen.insert(p.iter().map(|x| canonical_bits(*x)).collect::<Vec<_>>());
        }
        seen.len()
    }

    fn scaled(&self, scale: f64) -> Self {
        Self { coords: self.coords.iter().map(|x| x * scale).collect(), n: self.n, d: self.d }
    }

    /// Length of the diagonal of the axis-aligned bounding box.
    pub fn bounding_diagonal(&self) -> f64 {
        let mut sq = 0.0;
        for j in 0..self.d {
            let (lo, hi) =
                self.points().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[j]), hi.max(p[j])));
            sq += (hi - lo) * (hi - lo);
        }
        sq.sqrt()
    }
}

// -0.0 and 0.0 are the same location.
#[inline]
fn canonical_bits(x: f64) -> u64 {
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

#[inline]
pub(crate) fn euclid(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Euclidean distance.
pub fn distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    Ok(euclid(p, q))
}

/// `Σ_p min_{s ∈ S} dist(p, s)^z` with `S` given as explicit points.
pub fn cost(data: &Dataset, centers: &[&[f64]], z: f64) -> Result<f64> {
    if centers.is_empty() {
        return Err(Error::EmptyCenters);
    }
    if let Some(bad) = centers.iter().find(|c| c.len() != data.d()) {
        return Err(Error::DimensionMismatch { expected: data.d(), found: bad.len() });
    }
    Ok(data
        .points()
        .map(|p| {
            let nearest = centers.iter().map(|c| euclid(p, c)).fold(f64::INFINITY, f64::min);
            nearest.powf(z)
        })
        .sum())
}

/// [`cost`] for centers named by point id.
pub fn cost_of_ids(data: &Dataset, ids: &[usize], z: f64) -> Result<f64> {
    if let Some(&id) = ids.iter().find(|&&id| id >= data.n()) {
        return Err(Error::IdOutOfRange { id, n: data.n() });
    }
    let centers: Vec<&[f64]> = ids.iter().map(|&id| data.point(id)).collect();
    cost(data, &centers, z)
}

/// Parameters of one clustering run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    pub k: usize,
    pub z: f64,
    pub c: f64,
    pub seed: u64,
}

impl ClusterParams {
    pub fn new(k: usize, z: f64, c: f64, seed: u64) -> Result<Self> {
        let params = Self { k, z, c, seed };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidParam("k must be at least 1".into()));
        }
        if !(self.z >= 1.0 && self.z.is_finite()) {
            return Err(Error::InvalidParam(format!("z must be a finite real >= 1, got {}", self.z)));
        }
        validate_c(self.c)
    }
}

pub(crate) fn validate_c(c: f64) -> Result<()> {
    if !(c >= 5.0 && c.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "c must be at least 5 (the approximation analysis assumes c >= 5), got {c}"
        )));
    }
    Ok(())
}

/// Result of [`normalize`]: the applied scale and the level schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleInfo {
    /// Factor applied to every coordinate.
    pub scale: f64,
    /// `(2c)^exponent`, an upper bound on the normalized diameter.
    pub delta: f64,
    pub exponent: u32,
    /// `exponent + 8`.
    pub num_levels: usize,
    pub c: f64,
}

impl ScaleInfo {
    pub fn new(c: f64, exponent: u32, scale: f64) -> Self {
        let base = 2.0 * c;
        Self { scale, delta: base.powi(exponent as i32), exponent, num_levels: exponent as usize + EXTRA_LEVELS + 1, c }
    }

    /// `Δ / (2c)^level`, computed from exact integer powers of `2c`.
    pub fn radius(&self, level: usize) -> f64 {
        debug_assert!(level < self.num_levels);
        let base = 2.0 * self.c;
        let e = self.exponent as i64 - level as i64;
        if e >= 0 {
            base.powi(e as i32)
        } else {
            1.0 / base.powi((-e) as i32)
        }
    }

    pub fn min_level(&self) -> usize {
        self.num_levels - 1
    }
}

/// Radii `Δ/(2c)^ℓ` for `ℓ = 0..=log_{2c}(Δ)+7`, strictly decreasing.
pub fn level_radii(info: &ScaleInfo) -> Vec<f64> {
    (0..info.num_levels).map(|l| info.radius(l)).collect()
}

/// Smallest `m ≥ 0` with `(2c)^m ≥ diameter`.
pub fn delta_exponent(diameter: f64, c: f64) -> u32 {
    let base = 2.0 * c;
    let mut m = 0u32;
    while base.powi(m as i32) < diameter {
        m += 1;
    }
    m
}

/// Rescales so the smallest nonzero pairwise distance is 1 and picks `Δ` as
/// the smallest power of `2c` above the bounding-box diagonal.
pub fn normalize(data: &Dataset, c: f64) -> Result<(Dataset, ScaleInfo)> {
    validate_c(c)?;
    let Some((min_dist, _, _)) = min_nonzero_distance(data) else {
        return Ok((data.clone(), ScaleInfo::new(c, 0, 1.0)));
    };
    let scale =
        if (1.0..=1.0 + ALREADY_NORMALIZED_TOL).contains(&min_dist) { 1.0 } else { (1.0 + SCALE_SLACK) / min_dist };
    let scaled = if scale == 1.0 { data.clone() } else { data.scaled(scale) };
    let exponent = delta_exponent(scaled.bounding_diagonal(), c);
    Ok((scaled, ScaleInfo::new(c, exponent, scale)))
}

/// Smallest nonzero pairwise distance and a pair attaining it, or `None` when
/// all points coincide.
pub fn min_nonzero_distance(data: &Dataset) -> Option<(f64, usize, usize)> {
    let reps = distinct_representatives(data);
    if reps.len() < 2 {
        return None;
    }
    // The grid probes 3^d cells per insertion; only worth it when that is
    // well below a linear scan.
    let grid_worthwhile = 3f64.powi(data.d() as i32) * 8.0 < reps.len() as f64;
    if reps.len() > BRUTE_FORCE_CLOSEST_PAIR_MAX_N && grid_worthwhile {
        closest_pair_grid(data, &reps, 0x5eed)
    } else {
        closest_pair_brute(data, &reps)
    }
}

/// One id per distinct location.
pub fn distinct_representatives(data: &Dataset) -> Vec<usize> {
    let mut seen: FxHashMap<Vec<u64>, usize> = FxHashMap::default();
    let mut reps = Vec::new();
    for (id, p) in data.points().enumerate() {
        let key: Vec<u64> = p.iter().map(|x| canonical_bits(*x)).collect();
        seen.entry(key).or_insert_with(|| {
            reps.push(id);
            id
        });
    }
    reps
}

/// Exact all-pairs scan over `ids`, which must be pairwise distinct locations.
pub fn closest_pair_brute(data: &Dataset, ids: &[usize]) -> Option<(f64, usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for (i, &a) in ids.iter().enumerate() {
        let pa = data.point(a);
        for &b in &ids[i + 1..] {
            let dist = euclid(pa, data.point(b));
            if best.is_none_or(|(bd, _, _)| dist < bd) {
                best = Some((dist, a, b));
            }
        }
    }
    best
}

/// Randomized incremental grid closest pair (expected linear number of
/// distance evaluations for fixed `d`). `ids` must be distinct locations.
pub fn closest_pair_grid(data: &Dataset, ids: &[usize], seed: u64) -> Option<(f64, usize, usize)> {
    if ids.len() < 2 {
        return None;
    }
    let mut order = ids.to_vec();
    order.shuffle(&mut seeds::rng(seed));
    let d = data.d();
    let mut best = (data.dist(order[0], order[1]), order[0], order[1]);
    let mut grid = CellGrid::build(data, &order[..2], best.0);
    let mut offsets = vec![0i64; d];
    for i in 2..order.len() {
        let p = order[i];
        let base = grid.cell_of(data.point(p));
        let mut improved: Option<(f64, usize)> = None;
        // Enumerate {-1,0,1}^d.
        offsets.iter_mut().for_each(|o| *o = -1);
        loop {
            let cell: Vec<i64> = base.iter().zip(&offsets).map(|(b, o)| b + o).collect();
            if let Some(members) = grid.cells.get(&cell) {
                for &q in members {
                    let dist = data.dist(p, q as usize);
                    let bound = improved.map_or(best.0, |(b, _)| b);
                    if dist < bound {
                        improved = Some((dist, q as usize));
                    }
                }
            }
            let mut j = 0;
            while j < d && offsets[j] == 1 {
                offsets[j] = -1;
                j += 1;
            }
            if j == d {
                break;
            }
            offsets[j] += 1;
        }
        match improved {
            Some((dist, q)) => {
                best = (dist, q, p);
                grid = CellGrid::build(data, &order[..=i], dist);
            }
            None => grid.insert(data.point(p), p),
        }
    }
    Some(best)
}

struct CellGrid {
    side: f64,
    cells: FxHashMap<Vec<i64>, Vec<u32>>,
}

impl CellGrid {
    fn build(data: &Dataset, ids: &[usize], side: f64) -> Self {
        let mut grid = Self { side, cells: FxHashMap::default() };
        for &id in ids {
            grid.insert(data.point(id), id);
        }
        grid
    }

    fn cell_of(&self, p: &[f64]) -> Vec<i64> {
        p.iter().map(|x| (x / self.side).floor() as i64).collect()
    }

    fn insert(&mut self, p: &[f64], id: usize) {
        let cell = self.cell_of(p);
        self.cells.entry(cell).or_default().push(id as u32);
    }
}

/// Gaussian random projection to `target_dim` dimensions, entries
/// `N(0, 1/target_dim)`. Deterministic in `seed`.
pub fn jl_project(data: &Dataset, target_dim: usize, seed: u64) -> Result<Dataset> {
    if target_dim == 0 {
        return Err(Error::InvalidParam("target dimension must be at least 1".into()));
    }
    let d = data.d();
    let mut rng = seeds::rng(seed);
    let norm = 1.0 / (target_dim as f64).sqrt();
    let matrix: Vec<f64> = (0..target_dim * d)
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            g * norm
        })
        .collect();
    let mut out = Vec::with_capacity(data.n() * target_dim);
    for p in data.points() {
        for row in matrix.chunks_exact(d) {
            out.push(row.iter().zip(p).map(|(m, x)| m * x).sum());
        }
    }
    Dataset::from_flat(target_dim, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn line(xs: &[f64]) -> Dataset {
        Dataset::new(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    fn random_dataset(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = seeds::rng(seed);
        Dataset::new((0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert!((distance(&[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0]).unwrap() - 1.732_050_8).abs() < 1e-7);
        assert!(matches!(distance(&[0.0], &[0.0, 1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dataset_rejects_ragged_and_nonfinite() {
        assert!(matches!(Dataset::new(vec![vec![0.0], vec![1.0, 2.0]]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(Dataset::new(vec![vec![f64::NAN]]), Err(Error::NonFinite { point: 0 })));
        assert!(matches!(Dataset::new(vec![]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn cost_examples() {
        let single = line(&[4.0]);
        assert_eq!(cost_of_ids(&single, &[0], 2.0).unwrap(), 0.0);
        let two = line(&[0.0, 2.0]);
        assert_eq!(cost_of_ids(&two, &[0], 1.0).unwrap(), 2.0);
        assert_eq!(cost_of_ids(&two, &[0], 2.0).unwrap(), 4.0);
        assert!(matches!(cost_of_ids(&two, &[], 2.0), Err(Error::EmptyCenters)));
    }

    #[test]
    fn cost_matches_direct_sum() {
        let data = random_dataset(5, 2, 11);
        let centers = [1usize, 3];
        let mut expected = 0.0;
        for i in 0..5 {
            let p = data.point(i);
            let mut best = f64::INFINITY;
            for &c in &centers {
                let q = data.point(c);
                let sq = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                best = best.min(sq);
            }
            expected += best;
        }
        let got = cost_of_ids(&data, &centers, 2.0).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn normalize_examples() {
        let (scaled, info) = normalize(&line(&[0.0, 0.5]), 5.0).unwrap();
        assert!((info.scale - 2.0).abs() < 1e-9);
        assert!((scaled.point(1)[0] - 1.0).abs() < 1e-9);

        let (_, info) = normalize(&line(&[0.0, 1.0, 10.0]), 5.0).unwrap();
        assert_eq!(info.scale, 1.0);
        assert_eq!(info.delta, 10.0);
        assert_eq!(info.num_levels, 9);
    }

    #[test]
    fn normalize_degenerate_inputs() {
        let (same, info) = normalize(&line(&[3.0, 3.0, 3.0]), 5.0).unwrap();
        assert_eq!(same, line(&[3.0, 3.0, 3.0]));
        assert_eq!((info.delta, info.scale, info.num_levels), (1.0, 1.0, 8));
        assert!(normalize(&line(&[0.0, 1.0]), 4.0).is_err());
    }

    #[test]
    fn normalize_random_min_distance() {
        let data = random_dataset(20, 3, 5);
        let (scaled, info) = normalize(&data, 5.0).unwrap();
        let mut min = f64::INFINITY;
        for i in 0..20 {
            for j in 0..20 {
                if i != j {
                    let p = scaled.point(i);
                    let q = scaled.point(j);
                    let sq: f64 = (0..3).map(|k| (p[k] - q[k]).powi(2)).sum();
                    if sq > 0.0 {
                        min = min.min(sq.sqrt());
                    }
                }
            }
        }
        assert!((1.0..=1.0 + 1e-9).contains(&min), "min = {min}");
        assert!(info.delta >= scaled.bounding_diagonal());
        assert!(info.delta / 10.0 < scaled.bounding_diagonal());
    }

    #[test]
    fn duplicates_do_not_affect_normalization() {
        let (scaled, info) = normalize(&line(&[0.0, 0.0, 0.25, 0.25, 1.0]), 5.0).unwrap();
        assert_eq!(scaled.n(), 5);
        assert!((info.scale - 4.0).abs() < 1e-9);
        assert_eq!(scaled.point(0), scaled.point(1));
    }

    #[test]
    fn level_radii_examples() {
        let info = ScaleInfo::new(5.0, 2, 1.0);
        let radii = level_radii(&info);
        let expected = [100.0, 10.0, 1.0, 0.1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7];
        assert_eq!(radii, expected);

        let unit = ScaleInfo::new(5.0, 0, 1.0);
        let radii = level_radii(&unit);
        assert_eq!(radii.len(), 8);
        assert_eq!(radii[0], 1.0);
        assert_eq!(*radii.last().unwrap(), 1e-7);

        let odd = ScaleInfo::new(6.5, 3, 1.0);
        for w in level_radii(&odd).windows(2) {
            assert!((w[0] / w[1] - 13.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_closest_pair_matches_brute_force() {
        for seed in 0..10 {
            let data = random_dataset(300, 2, 100 + seed);
            let ids: Vec<usize> = (0..300).collect();
            let (g, _, _) = closest_pair_grid(&data, &ids, seed).unwrap();
            let (b, _, _) = closest_pair_brute(&data, &ids).unwrap();
            assert_eq!(g, b);
        }
    }

    #[test]
    fn jl_shape_and_linearity() {
        let data = Dataset::new(vec![vec![0.0; 6], vec![1.0; 6]]).unwrap();
        let projected = jl_project(&data, 6, 3).unwrap();
        assert_eq!(projected.d(), 6);
        assert!(projected.point(0).iter().all(|&x| x == 0.0));
        assert_eq!(projected, jl_project(&data, 6, 3).unwrap());
        assert!(jl_project(&data, 0, 3).is_err());
    }

    #[test]
    fn jl_preserves_most_distances() {
        let data = random_dataset(50, 64, 77);
        let mut kept = 0usize;
        let mut total = 0usize;
        for seed in 0..20 {
            let projected = jl_project(&data, 16, seed).unwrap();
            for i in 0..50 {
                for j in i + 1..50 {
                    let ratio = projected.dist(i, j) / data.dist(i, j);
                    total += 1;
                    kept += usize::from((0.5..=2.0).contains(&ratio));
                }
            }
        }
        assert!(kept as f64 >= 0.9 * total as f64, "{kept}/{total}");
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in prop::collection::vec(-1e3f64..1e3, 3),
                               b in prop::collection::vec(-1e3f64..1e3, 3),
                               c in prop::collection::vec(-1e3f64..1e3, 3)) {
            let ab = distance(&a, &b).unwrap();
            let bc = distance(&b, &c).unwrap();
            let ac = distance(&a, &c).unwrap();
            prop_assert!(ac <= (ab + bc) * (1.0 + 1e-9) + 1e-12);
            prop_assert_eq!(ab, distance(&b, &a).unwrap());
        }

        #[test]
        fn cost_monotone_under_superset(seed in 0u64..1000, extra in 1usize..4) {
            let data = random_dataset(12, 2, seed);
            let small = vec![0usize, 5];
            let mut big = small.clone();
            big.extend((0..extra).map(|i| 6 + i));
            prop_assert!(cost_of_ids(&data, &big, 2.0).unwrap() <= cost_of_ids(&data, &small, 2.0).unwrap());
        }

        #[test]
        fn normalize_is_idempotent(seed in 0u64..1000) {
            let data = random_dataset(15, 3, seed);
            let (once, _) = normalize(&data, 5.0).unwrap();
            let (twice, info) = normalize(&once, 5.0).unwrap();
            prop_assert!((info.scale - 1.0).abs() <= 1e-9);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn first_radius_covers_diameter(seed in 0u64..1000, c in 5.0f64..9.0) {
            let data = random_dataset(10, 2, seed);
            let (scaled, info) = normalize(&data, c).unwrap();
            let mut diameter = 0.0f64;
            for i in 0..10 {
                for j in 0..10 {
                    diameter = diameter.max(scaled.dist(i, j));
                }
            }
            prop_assert!(level_radii(&info)[0] >= diameter);
        }
    }
}
