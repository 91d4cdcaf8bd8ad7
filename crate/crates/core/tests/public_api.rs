use fastk_core::greedy_core::{cluster, GreedyConfig, GreedyState, Mode};
use fastk_core::metricspace::{cost_of_ids, normalize};
use fastk_core::reference_oracles::kmeanspp;
use fastk_core::Dataset;

// Deterministic well-separated groups: `groups` tight clumps on a line.
fn clumps(groups: usize, per: usize) -> Dataset {
    let mut pts = Vec::new();
    for g in 0..groups {
        for i in 0..per {
            let jitter = ((i * 7919 + g * 104729) % 97) as f64 / 97.0;
            pts.push(vec![100.0 * g as f64 + jitter, jitter * 0.5]);
        }
    }
    Dataset::new(pts).unwrap()
}

#[test]
fn one_center_per_clump() {
    let data = clumps(4, 25);
    for mode in [Mode::Exact, Mode::Lsh] {
        let solution = cluster(&data, 4, GreedyConfig::new(2.0, 5.0, 3, mode)).unwrap();
        let mut groups: Vec<usize> = solution.centers.iter().map(|&c| c / 25).collect();
        groups.sort_unstable();
        assert_eq!(groups, vec![0, 1, 2, 3], "{mode:?}");
    }
}

#[test]
fn resumed_runs_match_a_single_run() {
    let data = clumps(5, 12);
    let (normalized, info) = normalize(&data, 6.0).unwrap();
    let config = GreedyConfig::new(1.0, 6.0, 11, Mode::Lsh);
    let mut stepwise = GreedyState::init(&normalized, &info, config).unwrap();
    for k in 1..=8 {
        stepwise.run(k);
    }
    let mut whole = GreedyState::init(&normalized, &info, config).unwrap();
    whole.run(8);
    assert_eq!(stepwise.solution(), whole.solution());
}

#[test]
fn comparable_to_kmeanspp_on_clumps() {
    let data = clumps(6, 20);
    let ours = cluster(&data, 6, GreedyConfig::new(2.0, 5.0, 0, Mode::Exact)).unwrap();
    let ours = cost_of_ids(&data, &ours.centers, 2.0).unwrap();
    let best_pp =
        (0..10).map(|s| cost_of_ids(&data, &kmeanspp(&data, 6, 2.0, s), 2.0).unwrap()).fold(f64::INFINITY, f64::min);
    assert!(ours <= 10.0 * best_pp, "{ours} vs {best_pp}");
}
