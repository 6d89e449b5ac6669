//! Self-test of the projections against the exhaustive grid oracle.

use std::fmt;

use hemilearn::projection::{brute_force_bounds, certificate_check, lu_proj, ProjectionScope, Scope};
use hemilearn::{hemimetric_closure, BoundsState, LabeledDatum, Matrix, Query};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::BenchError;

/// Grid resolution of the random hidden matrices and offers.
pub const GRID_STEP: f64 = 0.125;
const GRID_UNITS: u32 = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyFailure {
    pub seed: u64,
    pub n: usize,
    pub labels: usize,
    pub message: String,
}

impl fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "seed {} (n = {}, {} labels): {}", self.seed, self.n, self.labels, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub trials: usize,
    pub passed: usize,
    pub failures: Vec<VerifyFailure>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs `trials` random label logs on grid matrices with 3 to `n_max`
/// items. Trial `t` uses seed `seed + t`.
pub fn verify(n_max: usize, trials: usize, seed: u64) -> Result<VerifyReport, BenchError> {
    verify_with_fault(n_max, trials, seed, None)
}

/// [`verify`] with every projection skipping pivot `skip % n`, which the
/// checks are expected to catch.
pub fn verify_with_fault(
    n_max: usize,
    trials: usize,
    seed: u64,
    skip: Option<usize>,
) -> Result<VerifyReport, BenchError> {
    if !(2..=hemilearn::projection::MAX_ENUMERATION_ITEMS).contains(&n_max) {
        return Err(BenchError::Trial(format!(
            "verify needs 2 <= n <= {}, got {n_max}",
            hemilearn::projection::MAX_ENUMERATION_ITEMS
        )));
    }
    let mut report = VerifyReport { trials, ..VerifyReport::default() };
    for t in 0..trials as u64 {
        let trial_seed = seed.wrapping_add(t);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let n = rng.gen_range(n_max.min(3)..=n_max);
        let labels = rng.gen_range(0..=2 * n);
        let (truth, log) = random_log(n, labels, &mut rng);
        let scope = match skip {
            None => Scope::Full,
            Some(k) => {
                let pivots = (0..n).filter(|&p| p != k % n).collect();
                let pairs = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
                Scope::Restricted(ProjectionScope::new(pivots, pairs))
            }
        };
        match check_log(n, &truth, &log, &scope) {
            Ok(()) => report.passed += 1,
            Err(message) => report.failures.push(VerifyFailure { seed: trial_seed, n, labels, message }),
        }
    }
    Ok(report)
}

fn random_log(n: usize, labels: usize, rng: &mut ChaCha8Rng) -> (Matrix, Vec<LabeledDatum>) {
    let raw = Matrix::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else {
            f64::from(rng.gen_range(0..=GRID_UNITS)) * GRID_STEP
        }
    });
    let truth = hemimetric_closure(&raw, 1.0).expect("grid entries lie in [0, 1]").into_entries();
    let log = (0..labels)
        .map(|_| {
            let i = rng.gen_range(0..n);
            let j = (i + rng.gen_range(1..n)) % n;
            let c = f64::from(rng.gen_range(0..=GRID_UNITS)) * GRID_STEP;
            LabeledDatum { query: Query::new(i, j, c), accepted: c >= truth[(i, j)], cost: 1 }
        })
        .collect();
    (truth, log)
}

/// Projects after every label and once over the whole log, then compares
/// the result with the grid oracle.
fn check_log(n: usize, truth: &Matrix, log: &[LabeledDatum], scope: &Scope) -> Result<(), String> {
    let mut b = BoundsState::fresh(n, 1.0);
    for (step, datum) in log.iter().enumerate() {
        b.apply_label(datum);
        let (l, u) = lu_proj(&b.lower, &b.upper, scope).map_err(|e| format!("label {step}: {e}"))?;
        let report = certificate_check(&b.lower, &b.upper, &l, &u);
        if let Some(issue) = report.issues.first() {
            return Err(format!("label {step}: {issue}"));
        }
        b.lower = l;
        b.upper = u;
        if !b.brackets(truth) {
            return Err(format!("label {step}: bounds exclude the hidden matrix"));
        }
    }
    let mut local = BoundsState::fresh(n, 1.0);
    for datum in log {
        local.apply_label(datum);
    }
    let (l, u) = lu_proj(&local.lower, &local.upper, scope).map_err(|e| e.to_string())?;
    if let Some(issue) = certificate_check(&local.lower, &local.upper, &l, &u).issues.first() {
        return Err(issue.to_string());
    }
    let (l_min, u_max) = brute_force_bounds(log, n, 1.0, GRID_STEP).map_err(|e| e.to_string())?;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let t = truth[(i, j)];
            if !(l[(i, j)] <= t + 1e-12 && t <= u[(i, j)] + 1e-12) {
                return Err(format!("entry ({i}, {j}): bounds [{}, {}] exclude {t}", l[(i, j)], u[(i, j)]));
            }
            let lower_gap = l_min[(i, j)] - l[(i, j)];
            if !(-1e-12..=GRID_STEP + 1e-12).contains(&lower_gap) {
                return Err(format!(
                    "entry ({i}, {j}): lower bound {} against grid minimum {}",
                    l[(i, j)],
                    l_min[(i, j)]
                ));
            }
            let upper_gap = u[(i, j)] - u_max[(i, j)];
            if !(-1e-12..=GRID_STEP + 1e-12).contains(&upper_gap) {
                return Err(format!(
                    "entry ({i}, {j}): upper bound {} against grid maximum {}",
                    u[(i, j)],
                    u_max[(i, j)]
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_log_gives_full_box() {
        let truth = Matrix::off_diagonal(4, 0.5);
        assert_eq!(check_log(4, &truth, &[], &Scope::Full), Ok(()));
        let (l, u) = brute_force_bounds(&[], 4, 1.0, GRID_STEP).unwrap();
        assert_eq!(l, Matrix::zeros(4));
        assert_eq!(u, Matrix::off_diagonal(4, 1.0));
    }

    #[test]
    fn random_logs_pass() {
        let report = verify(4, 60, 11).unwrap();
        assert!(report.ok(), "{:?}", report.failures);
        assert_eq!(report.passed, 60);
    }

    #[test]
    fn skipped_pivot_is_caught_and_named() {
        let report = verify_with_fault(4, 60, 11, Some(0)).unwrap();
        assert!(!report.ok());
        assert!(report.failures.iter().all(|f| f.message.contains('(')));
    }

    #[test]
    fn rejects_large_n() {
        assert!(verify(7, 1, 0).is_err());
    }
}
