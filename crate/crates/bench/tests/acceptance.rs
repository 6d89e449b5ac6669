//! End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
//! test fails if any check fails.

use std::time::{Duration, Instant};

use hemilearn::instances::gen_clustered;
use hemilearn::learner::{
    learn_hm, predicted_bounds, BoundSetting, LearnerOptions, NoiseBudget, NoiseHandling, OnlineLearner, Precision,
    RunStats, SideInformation,
};
use hemilearn::response::{compute_gamma, NoiseModel, SimulatedUser};
use hemilearn::{hemimetric_closure, Matrix};
use hemilearn_bench::config::TrialParams;
use hemilearn_bench::{build_instance, execute, verify, Algorithm, InstanceKind, RestaurantModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
    limit: Duration,
}

/// Noise-free runs gathered from the first five checks.
#[derive(Default)]
struct Validity {
    runs: usize,
    problems: Vec<String>,
}

impl Validity {
    fn record(&mut self, label: &str, stats: &RunStats, eps: f64) {
        self.runs += 1;
        if stats.invariant_violations > 0 {
            self.problems.push(format!("{label}: {} bound violations", stats.invariant_violations));
        }
        match stats.final_linf_error {
            Some(e) if e <= eps + 1e-9 => {}
            other => self.problems.push(format!("{label}: final error {other:?} above {eps}")),
        }
    }
}

fn checked_run(params: &TrialParams, algo: Algorithm, seed: u64, validity: &mut Validity) -> RunStats {
    let (row, stats) = execute(params, algo, seed, true).expect("trial runs");
    validity.record(&format!("{} n={} seed={seed}", algo, params.n), &stats, row.eps);
    stats
}

fn timed<F: FnOnce() -> (bool, String)>(
    id: u32,
    name: &'static str,
    limit_secs: u64,
    f: F,
) -> Outcome {
    let started = Instant::now();
    let (ok, detail) = f();
    let elapsed = started.elapsed();
    let limit = Duration::from_secs(limit_secs);
    Outcome { id, name, passed: ok && elapsed < limit, detail, elapsed, limit }
}

fn baseline_count(validity: &mut Validity) -> Outcome {
    timed(1, "baseline count on ten items", 1, || {
        let random = {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            hemimetric_closure(&Matrix::from_fn(10, |i, j| if i == j { 0.0 } else { rng.gen() }), 1.0).unwrap()
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("random.csv");
        hemilearn::metric::save_instance(&path, &random).unwrap();
        let kinds = [
            InstanceKind::Clustered { k: 3, r_in: 0.1 },
            InstanceKind::Uniform { value: 0.5 },
            InstanceKind::Uniform { value: 0.0 },
            InstanceKind::Restaurants(RestaurantModel::Mixed),
            InstanceKind::File(path),
        ];
        let mut counts = Vec::new();
        for kind in kinds {
            let params = TrialParams::new(kind, 10, 0.01);
            counts.push(checked_run(&params, Algorithm::IndGreedy, 0, validity).user_queries);
        }
        (counts.iter().all(|&c| c == 630), format!("counts {counts:?}, expected 630"))
    })
}

fn hardest_instance(validity: &mut Validity) -> Outcome {
    timed(2, "half-range instance matches the baseline", 5, || {
        let mut ok = true;
        let mut detail = Vec::new();
        for n in [10, 30] {
            let params = TrialParams::new(InstanceKind::Uniform { value: 0.5 }, n, 0.01);
            let ours = checked_run(&params, Algorithm::LearnHm, 0, validity).user_queries;
            let base = checked_run(&params, Algorithm::IndGreedy, 0, validity).user_queries;
            ok &= ours == base;
            detail.push(format!("n={n}: {ours} vs {base}"));
        }
        (ok, detail.join(", "))
    })
}

fn quantized_recovery(validity: &mut Validity) -> Outcome {
    timed(3, "quantized clusters: bound and exact recovery", 10, || {
        let params = TrialParams::new(InstanceKind::Quantized { k: 5, step: 1.0 / 64.0 }, 50, 0.01);
        let mut worst = 0;
        let mut exact = true;
        for seed in 0..10 {
            let stats = checked_run(&params, Algorithm::LearnHm, seed, validity);
            worst = worst.max(stats.user_queries);
            exact &= stats.final_linf_error == Some(0.0);
        }
        let bound = predicted_bounds(&BoundSetting {
            n: 50,
            k: 5,
            r: 1.0,
            precision: Precision::Quantized { step: 1.0 / 64.0 },
            noise: None,
        })
        .unwrap();
        (
            worst as f64 <= 3000.0 && bound == 3000.0 && exact,
            format!("max {worst} queries (bound {bound}), exact recovery {exact}"),
        )
    })
}

fn clustered_bound(validity: &mut Validity) -> Outcome {
    timed(4, "clustered instances within the query bound", 60, || {
        let params = TrialParams::new(InstanceKind::Clustered { k: 5, r_in: 0.1 }, 100, 0.01);
        let bound = predicted_bounds(&BoundSetting {
            n: 100,
            k: 5,
            r: 1.0,
            precision: Precision::Clustered { r_in: 0.1, epsilon: 0.01 },
            noise: None,
        })
        .unwrap();
        let counts: Vec<u64> =
            (0..5).map(|seed| checked_run(&params, Algorithm::LearnHm, seed, validity).user_queries).collect();
        (
            bound == 57000.0 && counts.iter().all(|&c| c as f64 <= bound),
            format!("counts {counts:?}, bound {bound}"),
        )
    })
}

fn projection_optimality(validity: &mut Validity) -> Outcome {
    timed(5, "projections against exhaustive enumeration", 300, || {
        let report = verify(5, 200, 2024).unwrap();
        validity.runs += report.trials;
        for f in &report.failures {
            validity.problems.push(format!("projection trial {f}"));
        }
        let first = report.failures.first().map(|f| format!("; first failure {f}")).unwrap_or_default();
        (report.ok(), format!("{} of {} trials passed{first}", report.passed, report.trials))
    })
}

fn validity_invariant(validity: &Validity) -> Outcome {
    timed(6, "bounds contain the hidden matrix throughout", 1, || {
        let shown: Vec<&String> = validity.problems.iter().take(3).collect();
        (
            validity.runs > 0 && validity.problems.is_empty(),
            format!("{} runs, {} problems {shown:?}", validity.runs, validity.problems.len()),
        )
    })
}

fn restaurant_comparison() -> Outcome {
    timed(7, "restaurant models: savings over the baselines", 300, || {
        let mut ok = true;
        let mut detail = Vec::new();
        for seed in 0..3 {
            let m1 = TrialParams::new(InstanceKind::Restaurants(RestaurantModel::Cuisine), 100, 0.01);
            let ours = execute(&m1, Algorithm::LearnHm, seed, false).unwrap().0.user_queries;
            let base = execute(&m1, Algorithm::IndGreedy, seed, false).unwrap().0.user_queries;
            let sit = execute(&m1, Algorithm::IndGreedySit, seed, false).unwrap().0.user_queries;
            let acquisition = SideInformation::from_truth(&build_instance(&m1, seed).unwrap()).acquisition_cost();
            let ratio1 = ours as f64 / base as f64;
            ok &= ratio1 <= 0.3 && sit > ours && acquisition == 70000;

            let m2 = TrialParams::new(InstanceKind::Restaurants(RestaurantModel::Mixed), 100, 0.01);
            let ours2 = execute(&m2, Algorithm::LearnHm, seed, false).unwrap().0.user_queries;
            let base2 = execute(&m2, Algorithm::IndGreedy, seed, false).unwrap().0.user_queries;
            let ratio2 = ours2 as f64 / base2 as f64;
            ok &= ratio2 <= 0.7;
            detail.push(format!("seed {seed}: cuisine {ratio1:.3} (sit {sit} vs {ours}), mixed {ratio2:.3}"));
        }
        (ok, detail.join("; "))
    })
}

fn noisy_guarantee() -> Outcome {
    timed(8, "noisy runs: failure rate and query bound", 1800, || {
        let (n, k, eps, delta, sigma) = (20, 4, 0.05, 0.1, 0.05);
        let bound = predicted_bounds(&BoundSetting {
            n,
            k,
            r: 1.0,
            precision: Precision::Clustered { r_in: 0.1, epsilon: eps },
            noise: Some(NoiseBudget { delta, sigma_max: sigma }),
        })
        .unwrap();
        let (_, gamma) = compute_gamma(n, delta, sigma, eps, 1.0).unwrap();
        let opts = LearnerOptions::new(eps).with_noise_handling(NoiseHandling::UnboundedRobust, delta);
        let mut misses = 0;
        let mut over_bound = 0;
        let mut worst = 0;
        for seed in 0..20 {
            let (truth, _) = gen_clustered(n, k, 1.0, 0.1, seed).unwrap();
            let model = NoiseModel::truncated_gaussian(NoiseModel::uniform_sigma(n, sigma)).unwrap();
            let mut user = SimulatedUser::new(truth.clone(), model, 1000 + seed).unwrap();
            match learn_hm(&mut user, n, 1.0, &opts) {
                Ok((est, stats)) => {
                    if est.entries().linf_distance(truth.entries()) > eps + 1e-9 {
                        misses += 1;
                    }
                    worst = worst.max(stats.user_queries);
                    if stats.user_queries as f64 > bound {
                        over_bound += 1;
                    }
                }
                Err(_) => {
                    misses += 1;
                    over_bound += 1;
                }
            }
        }
        (
            misses <= 4 && over_bound == 0,
            format!("{misses} of 20 runs missed precision, max {worst} queries, bound {bound:.0} (gamma {gamma:.1})"),
        )
    })
}

fn online_equivalence() -> Outcome {
    timed(9, "item-by-item learning matches batch", 5, || {
        let (d, _) = gen_clustered(10, 3, 1.0, 0.1, 12).unwrap();
        let opts = LearnerOptions::new(0.01);
        let mut user = SimulatedUser::noise_free(d.clone());
        let mut online = OnlineLearner::new(1.0, 10, &opts, &user).unwrap();
        for _ in 1..10 {
            online.extend(&mut user).unwrap();
        }
        let (_, a) = online.finish();
        let (_, b) = learn_hm(&mut SimulatedUser::noise_free(d), 10, 1.0, &opts).unwrap();
        (a.user_queries == b.user_queries, format!("online {} vs batch {}", a.user_queries, b.user_queries))
    })
}

fn speedup_scaling() -> Outcome {
    timed(10, "run time growth from 100 to 200 items", 600, || {
        let sizes = [100, 200];
        let seeds = 5;
        let params: Vec<TrialParams> = sizes
            .iter()
            .map(|&n| TrialParams::new(InstanceKind::Clustered { k: 5, r_in: 0.1 }, n, 0.01))
            .collect();
        // Learner time only, best of three interleaved repeats per run, so
        // that scheduler hiccups do not land on one size alone.
        let mut best = vec![vec![f64::INFINITY; seeds]; sizes.len()];
        let mut counts = vec![vec![0u64; seeds]; sizes.len()];
        for _ in 0..3 {
            for seed in 0..seeds {
                for (a, p) in params.iter().enumerate() {
                    let (row, stats) = execute(p, Algorithm::LearnHm, seed as u64, false).unwrap();
                    best[a][seed] = best[a][seed].min(stats.wall_clock_ms);
                    counts[a][seed] = row.user_queries;
                }
            }
        }
        let mut within = true;
        for (a, &n) in sizes.iter().enumerate() {
            let bound = predicted_bounds(&BoundSetting {
                n,
                k: 5,
                r: 1.0,
                precision: Precision::Clustered { r_in: 0.1, epsilon: 0.01 },
                noise: None,
            })
            .unwrap();
            within &= counts[a].iter().all(|&c| c as f64 <= bound);
        }
        let total: Vec<f64> = best.iter().map(|t| t.iter().sum()).collect();
        let ratio = total[1] / total[0];
        (
            ratio <= 10.0 && within,
            format!(
                "mean {:.1} ms vs {:.1} ms, ratio {ratio:.2}, counts {counts:?}",
                total[0] / seeds as f64,
                total[1] / seeds as f64
            ),
        )
    })
}

#[test]
fn acceptance_criteria() {
    let mut validity = Validity::default();
    let mut outcomes = vec![
        baseline_count(&mut validity),
        hardest_instance(&mut validity),
        quantized_recovery(&mut validity),
        clustered_bound(&mut validity),
        projection_optimality(&mut validity),
    ];
    outcomes.push(validity_invariant(&validity));
    outcomes.push(restaurant_comparison());
    outcomes.push(noisy_guarantee());
    outcomes.push(online_equivalence());
    outcomes.push(speedup_scaling());

    for o in &outcomes {
        println!(
            "[{}] criterion {:>2}: {} ({:.2?} of {:?}) {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.id,
            o.name,
            o.elapsed,
            o.limit,
            o.detail
        );
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
