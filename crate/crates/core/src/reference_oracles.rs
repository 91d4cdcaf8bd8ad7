//! Ground truth for tests and acceptance runs: exhaustive optimal clustering
//! over input points, a k-means++ (D^z sampling) baseline, and a direct
//! quadratic-time transcription of the greedy ball selection with exact
//! neighborhoods and exact counts.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::greedy_core::{BallRef, SequenceTrace, Solution};
use crate::metricspace::{normalize, ClusterParams, Dataset};
use crate::seeds;

/// Upper bound on the number of subsets [`brute_optimal`] will enumerate.
pub const MAX_SUBSETS: u128 = 10_000_000;

/// Largest input the transcription accepts.
pub const TRANSCRIPTION_MAX_N: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub cost: f64,
    pub centers: Vec<usize>,
    pub enumerated: u64,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn plain_dist(p: &[f64], q: &[f64]) -> f64 {
    let mut sq = 0.0;
    for i in 0..p.len() {
        sq += (p[i] - q[i]) * (p[i] - q[i]);
    }
    sq.sqrt()
}

/// Exhaustive minimum of `cost(P, S)` over all `k`-subsets `S ⊆ P`.
pub fn brute_optimal(data: &Dataset, k: usize, z: f64) -> Result<OptResult> {
    let n = data.n();
    if k == 0 || k > n {
        return Err(Error::InvalidParam(format!("k must lie in 1..={n}, got {k}")));
    }
    let subsets = binomial(n, k);
    if subsets > MAX_SUBSETS {
        return Err(Error::InstanceTooLarge { subsets, limit: MAX_SUBSETS });
    }
    let weights: Vec<f64> = (0..n * n).map(|i| plain_dist(data.point(i / n), data.point(i % n)).powf(z)).collect();
    let mut chosen: Vec<usize> = (0..k).collect();
    let mut best = OptResult { cost: f64::INFINITY, centers: chosen.clone(), enumerated: 0 };
    loop {
        best.enumerated += 1;
        let cost: f64 = (0..n).map(|p| chosen.iter().map(|&c| weights[p * n + c]).fold(f64::INFINITY, f64::min)).sum();
        if cost < best.cost {
            best.cost = cost;
            best.centers.clone_from(&chosen);
        }
        // Advance to the next combination in lexicographic order.
        let Some(i) = (0..k).rev().find(|&i| chosen[i] < n - k + i) else {
            break;
        };
        chosen[i] += 1;
        for j in i + 1..k {
            chosen[j] = chosen[j - 1] + 1;
        }
    }
    Ok(best)
}

/// k-means++ seeding generalized to `D^z` sampling. Stops early when every
/// point already coincides with a center.
pub fn kmeanspp(data: &Dataset, k: usize, z: f64, seed: u64) -> Vec<usize> {
    let n = data.n();
    if k == 0 {
        return Vec::new();
    }
    let mut rng = seeds::rng(seed);
    let mut centers = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = (0..n).map(|p| data.dist(p, centers[0])).collect();
    while centers.len() < k {
        let weights: Vec<f64> = nearest.iter().map(|d| d.powf(z)).collect();
        let Ok(sampler) = WeightedIndex::new(&weights) else {
            break;
        };
        let next = sampler.sample(&mut rng);
        centers.push(next);
        for (p, slot) in nearest.iter_mut().enumerate() {
            *slot = slot.min(data.dist(p, next));
        }
    }
    centers
}

/// Line-by-line greedy ball selection on the normalized input with exact
/// neighborhoods, exact counts and full scans; same tie-breaking as
/// [`crate::greedy_core`]. Stops after `params.k` centers or when no ball is
/// available.
pub fn transcribed_algorithm(data: &Dataset, params: &ClusterParams) -> Result<Solution> {
    if data.n() > TRANSCRIPTION_MAX_N {
        return Err(Error::InvalidParam(format!(
            "transcription is quadratic; n = {} exceeds {TRANSCRIPTION_MAX_N}",
            data.n()
        )));
    }
    let (points, info) = normalize(data, params.c)?;
    let n = points.n();
    let levels = info.num_levels;
    let radius: Vec<f64> = (0..levels).map(|l| info.radius(l)).collect();
    let c = params.c;

    // nval(B(p, R)) = |P ∩ B(p, R)| · R^z
    let mut nval = vec![vec![0.0; levels]; n];
    for p in 0..n {
        for l in 0..levels {
            let mut count = 0usize;
            for q in 0..n {
                if plain_dist(points.point(p), points.point(q)) <= radius[l] {
                    count += 1;
                }
            }
            nval[p][l] = count as f64 * radius[l].powf(params.z);
        }
    }
    let mut available = vec![vec![true; levels]; n];
    let mut in_structure = vec![vec![true; n]; levels];
    let mut solution = Solution::default();

    while solution.centers.len() < params.k {
        let mut head: Option<(f64, usize, usize)> = None;
        for p in 0..n {
            for l in 0..levels {
                if !available[p][l] {
                    continue;
                }
                let better = match head {
                    None => true,
                    Some((v, hp, hl)) => nval[p][l] > v || (nval[p][l] == v && (p < hp || (p == hp && l < hl))),
                };
                if better {
                    head = Some((nval[p][l], p, l));
                }
            }
        }
        let Some((_, mut x, mut l)) = head else {
            solution.early_terminated = true;
            break;
        };
        let mut trace = SequenceTrace { balls: vec![BallRef { point: x, level: l }] };
        while l + 1 < levels {
            let reach = 10.0 * c * radius[l];
            let mut next: Option<(f64, usize)> = None;
            for p in 0..n {
                if plain_dist(points.point(x), points.point(p)) > reach {
                    continue;
                }
                let v = nval[p][l + 1];
                if next.is_none_or(|(bv, bp)| v > bv || (v == bv && p < bp)) {
                    next = Some((v, p));
                }
            }
            x = next.expect("x lies in its own neighborhood").1;
            l += 1;
            trace.balls.push(BallRef { point: x, level: l });
        }
        let center = x;
        for l in 0..levels {
            let reach = 100.0 * c.powi(4) * radius[l];
            for p in 0..n {
                if in_structure[l][p] && plain_dist(points.point(center), points.point(p)) <= reach {
                    available[p][l] = false;
                    in_structure[l][p] = false;
                }
            }
        }
        solution.centers.push(center);
        solution.traces.push(trace);
    }
    Ok(solution)
}
