use hemilearn_bench::{sweep, Algorithm, ExperimentConfig};

fn summaries(text: &str) -> Vec<(Algorithm, f64)> {
    let config = ExperimentConfig::parse(text).unwrap();
    let result = sweep(&config);
    result
        .groups
        .iter()
        .map(|(_, s)| {
            assert_eq!(s.completed, s.attempted);
            (s.template.algo.parse().unwrap(), s.mean_user_queries)
        })
        .collect()
}

#[test]
fn finer_precision_costs_more_for_every_algorithm() {
    let rows = summaries(
        "instance = restaurants-cuisine\nalgorithms = learnhm, indgreedy, indgreedy-sit\naxis = eps\n\
         values = 0.1, 0.05, 0.02, 0.01, 0.005\nn = 60\nseeds = 2\n",
    );
    for algo in [Algorithm::LearnHm, Algorithm::IndGreedy, Algorithm::IndGreedySit] {
        let counts: Vec<f64> = rows.iter().filter(|(a, _)| *a == algo).map(|(_, q)| *q).collect();
        assert_eq!(counts.len(), 5);
        assert!(counts.windows(2).all(|w| w[0] < w[1]), "{algo}: {counts:?}");
    }
}

#[test]
fn noise_cost_saturates_for_wide_noise() {
    let rows = summaries(
        "instance = clustered\nk = 3\nn = 10\neps = 0.05\nnoise = gaussian\naxis = sigma\n\
         values = 0.02, 0.05, 0.1, 0.2, 0.5, 1, 2, 5\nseeds = 4\n",
    );
    let counts: Vec<f64> = rows.iter().map(|(_, q)| *q).collect();
    assert!(counts[..6].windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    let tail = &counts[5..];
    let top = tail.iter().cloned().fold(f64::MIN, f64::max);
    assert!(tail.iter().all(|&c| c >= 0.9 * top), "{counts:?}");
}
