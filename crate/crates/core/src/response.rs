//! Simulated users and the repeated-query wrappers that turn noisy answers
//! into reliable labels.
//!
//! Under the truncated-Gaussian model a user's private threshold for a pair
//! is drawn from a normal centred on the true distance and truncated to a
//! symmetric window inside `[0, r]`; an offer is accepted iff it reaches the
//! drawn threshold. Acceptance is therefore exactly one half at the true
//! distance and gets harder to resolve the closer the offer lies to it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erf;

use crate::bounds::{LabeledDatum, Query};
use crate::error::{invalid, Error, Result};
use crate::matrix::Matrix;
use crate::metric::DistanceMatrix;

/// Default raw-query cap for one robust label.
pub const DEFAULT_RAW_QUERY_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseKind {
    NoiseFree,
    TruncatedGaussian,
    /// Truncated-Gaussian noise scaled so its rate never exceeds `eta_bn`.
    Bounded { eta_bn: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    kind: NoiseKind,
    sigma: Option<Matrix>,
}

impl NoiseModel {
    pub fn noise_free() -> Self {
        Self {
            kind: NoiseKind::NoiseFree,
            sigma: None,
        }
    }

    pub fn truncated_gaussian(sigma: Matrix) -> Result<Self> {
        Self::stochastic(NoiseKind::TruncatedGaussian, sigma)
    }

    pub fn bounded(sigma: Matrix, eta_bn: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&eta_bn) {
            return Err(invalid(format!("noise bound must lie in [0, 0.5), got {eta_bn}")));
        }
        Self::stochastic(NoiseKind::Bounded { eta_bn }, sigma)
    }

    /// The same spread `sigma` on every pair.
    pub fn uniform_sigma(n: usize, sigma: f64) -> Matrix {
        Matrix::off_diagonal(n, sigma)
    }

    fn stochastic(kind: NoiseKind, sigma: Matrix) -> Result<Self> {
        if sigma.as_slice().iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(invalid("noise spreads must be finite and nonnegative"));
        }
        Ok(Self {
            kind,
            sigma: Some(sigma),
        })
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn is_noise_free(&self) -> bool {
        self.kind == NoiseKind::NoiseFree
    }

    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        self.sigma.as_ref().map_or(0.0, |s| s[(i, j)])
    }

    pub fn max_sigma(&self) -> f64 {
        self.sigma
            .as_ref()
            .map_or(0.0, |s| s.as_slice().iter().copied().fold(0.0, f64::max))
    }
}

/// Probability that offer `c` for `(i, j)` is accepted.
pub fn acceptance_probability(model: &NoiseModel, truth: &DistanceMatrix, i: usize, j: usize, c: f64) -> Result<f64> {
    let n = truth.n();
    if i >= n || j >= n {
        return Err(invalid(format!("pair ({i}, {j}) out of range for {n} items")));
    }
    if let Some(s) = &model.sigma {
        if s.n() != n {
            return Err(invalid("noise spread matrix does not match the instance size"));
        }
    }
    let d = truth.get(i, j);
    let indicator = if c >= d { 1.0 } else { 0.0 };
    let p = match model.kind {
        NoiseKind::NoiseFree => indicator,
        NoiseKind::TruncatedGaussian => truncated_cdf(d, truth.r(), model.sigma(i, j), c),
        NoiseKind::Bounded { eta_bn } => {
            let p = truncated_cdf(d, truth.r(), model.sigma(i, j), c);
            if c < d {
                2.0 * eta_bn * p
            } else {
                1.0 - 2.0 * eta_bn * (1.0 - p)
            }
        }
    };
    Ok(p)
}

/// CDF at `c` of a normal with mean `d` and spread `sigma`, truncated to
/// `[d - w, d + w]` with `w = min(d, r - d)`. Falls back to the step at `d`
/// when the window or the spread vanishes.
fn truncated_cdf(d: f64, r: f64, sigma: f64, c: f64) -> f64 {
    let half_width = d.min(r - d);
    if half_width <= 0.0 || sigma <= 0.0 {
        return if c >= d { 1.0 } else { 0.0 };
    }
    if c < d - half_width {
        return 0.0;
    }
    if c > d + half_width {
        return 1.0;
    }
    let norm = erf(half_width / (sigma * std::f64::consts::SQRT_2));
    if norm <= 0.0 {
        return if c >= d { 1.0 } else { 0.0 };
    }
    let z = (c - d) / (sigma * std::f64::consts::SQRT_2);
    (0.5 + 0.5 * erf(z) / norm).clamp(0.0, 1.0)
}

/// Bernoulli draw with [`acceptance_probability`].
pub fn sample_response<R: Rng + ?Sized>(model: &NoiseModel, truth: &DistanceMatrix, q: &Query, rng: &mut R) -> Result<bool> {
    let p = acceptance_probability(model, truth, q.i, q.j, q.c)?;
    Ok(if p >= 1.0 {
        true
    } else if p <= 0.0 {
        false
    } else {
        rng.gen::<f64>() < p
    })
}

/// Anything that answers threshold queries.
pub trait ResponseSource {
    fn respond(&mut self, q: &Query) -> bool;

    /// The hidden distances, when known (simulations only).
    fn ground_truth(&self) -> Option<&DistanceMatrix> {
        None
    }
}

/// A simulated user with a hidden hemimetric, a noise model and its own
/// seeded generator.
#[derive(Clone, Debug)]
pub struct SimulatedUser {
    truth: DistanceMatrix,
    model: NoiseModel,
    rng: ChaCha8Rng,
    raw_queries: u64,
}

impl SimulatedUser {
    pub fn new(truth: DistanceMatrix, model: NoiseModel, seed: u64) -> Result<Self> {
        if let Some(s) = &model.sigma {
            if s.n() != truth.n() {
                return Err(invalid("noise spread matrix does not match the instance size"));
            }
        }
        Ok(Self {
            truth,
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
            raw_queries: 0,
        })
    }

    pub fn noise_free(truth: DistanceMatrix) -> Self {
        Self::new(truth, NoiseModel::noise_free(), 0).expect("noise-free model fits any size")
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    /// Raw queries answered so far.
    pub fn raw_queries(&self) -> u64 {
        self.raw_queries
    }
}

impl ResponseSource for SimulatedUser {
    fn respond(&mut self, q: &Query) -> bool {
        self.raw_queries += 1;
        sample_response(&self.model, &self.truth, q, &mut self.rng).expect("query inside the instance")
    }

    fn ground_truth(&self) -> Option<&DistanceMatrix> {
        Some(&self.truth)
    }
}

/// Failure-probability split and caps for the repeated-query wrappers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobustQueryConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub n: usize,
    pub r: f64,
    /// Offer shift for the side queries, as a fraction of `epsilon`.
    pub alpha: f64,
    /// Per-label failure probability of a single repeated query.
    pub delta_prime: f64,
    /// Overall failure budget handed to each side query of the three-offer
    /// wrapper.
    pub delta_double_prime: f64,
    pub max_raw_queries: u64,
}

/// `ceil(log2(x))`, robust to `x` landing a hair above a power of two.
pub fn ceil_log2(x: f64) -> f64 {
    (x.log2() - 1e-9).ceil()
}

impl RobustQueryConfig {
    pub fn new(epsilon: f64, delta: f64, n: usize, r: f64) -> Result<Self> {
        Self::with_alpha(epsilon, delta, n, r, 1.0 / 3.0)
    }

    pub fn with_alpha(epsilon: f64, delta: f64, n: usize, r: f64, alpha: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < r) {
            return Err(invalid(format!("precision must lie in (0, r), got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("failure probability must lie in (0, 1), got {delta}")));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(invalid(format!("alpha must lie in (0, 0.5), got {alpha}")));
        }
        if n < 1 {
            return Err(invalid("need at least one item"));
        }
        let steps = ceil_log2(r / epsilon).max(1.0);
        let shifted_steps = ceil_log2(r / (epsilon * (1.0 - 2.0 * alpha))).max(1.0);
        Ok(Self {
            epsilon,
            delta,
            n,
            r,
            alpha,
            delta_prime: delta / ((n * n) as f64 * steps),
            delta_double_prime: (delta / 3.0) * steps / shifted_steps,
            max_raw_queries: DEFAULT_RAW_QUERY_CAP,
        })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.max_raw_queries = cap;
        self
    }

    /// Configuration of each side query in the three-offer wrapper: the
    /// same precision and item count with `delta_double_prime` as the
    /// overall failure budget.
    fn side_config(&self) -> Self {
        let steps = ceil_log2(self.r / self.epsilon).max(1.0);
        Self {
            delta: self.delta_double_prime,
            delta_prime: self.delta_double_prime / ((self.n * self.n) as f64 * steps),
            ..*self
        }
    }
}

/// Confidence radius after `l` answers at failure probability `delta_prime`.
pub fn confidence_radius(l: u64, delta_prime: f64) -> f64 {
    let l = l as f64;
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    ((pi2 * l * l / (3.0 * delta_prime)).ln() / (2.0 * l)).sqrt()
}

/// One repeated query: accumulates answers until the acceptance rate is
/// confidently on one side of one half.
#[derive(Clone, Debug)]
struct RepeatedQuery {
    query: Query,
    delta_prime: f64,
    answers: u64,
    accepts: u64,
}

impl RepeatedQuery {
    fn new(query: Query, delta_prime: f64) -> Self {
        Self {
            query,
            delta_prime,
            answers: 0,
            accepts: 0,
        }
    }

    fn observe(&mut self, accepted: bool) -> Option<bool> {
        self.answers += 1;
        self.accepts += u64::from(accepted);
        let rate = self.accepts as f64 / self.answers as f64;
        let radius = confidence_radius(self.answers, self.delta_prime);
        if rate - radius >= 0.5 {
            Some(true)
        } else if rate + radius < 0.5 {
            Some(false)
        } else {
            None
        }
    }
}

/// Repeats `q` until the majority answer is certain at level
/// `cfg.delta_prime`. The returned cost is the number of repetitions.
pub fn get_user_response_bounded<S: ResponseSource + ?Sized>(
    source: &mut S,
    q: &Query,
    cfg: &RobustQueryConfig,
) -> Result<LabeledDatum> {
    let mut rq = RepeatedQuery::new(*q, cfg.delta_prime);
    loop {
        if rq.answers >= cfg.max_raw_queries {
            return Err(Error::BudgetExhausted {
                cap: cfg.max_raw_queries,
                stats: None,
            });
        }
        if let Some(accepted) = rq.observe(source.respond(q)) {
            return Ok(LabeledDatum {
                query: *q,
                accepted,
                cost: rq.answers,
            });
        }
    }
}

/// Repeats the offer `c` together with `c - alpha*epsilon` and
/// `c + alpha*epsilon` (clamped to `[0, r]`), one answer at a time in that
/// order, and returns the label of whichever becomes certain first. Offers
/// far from the true distance resolve quickly even when `c` sits right on
/// it. The cost counts answers across all three.
pub fn get_user_response_unbounded<S: ResponseSource + ?Sized>(
    source: &mut S,
    q: &Query,
    cfg: &RobustQueryConfig,
) -> Result<LabeledDatum> {
    let shift = cfg.alpha * cfg.epsilon;
    let side = cfg.side_config();
    let mut offers = [
        RepeatedQuery::new(*q, side.delta_prime),
        RepeatedQuery::new(Query::new(q.i, q.j, (q.c - shift).max(0.0)), side.delta_prime),
        RepeatedQuery::new(Query::new(q.i, q.j, (q.c + shift).min(cfg.r)), side.delta_prime),
    ];
    let mut total = 0u64;
    loop {
        for rq in offers.iter_mut() {
            if total >= cfg.max_raw_queries {
                return Err(Error::BudgetExhausted {
                    cap: cfg.max_raw_queries,
                    stats: None,
                });
            }
            total += 1;
            let answer = source.respond(&rq.query);
            if let Some(accepted) = rq.observe(answer) {
                return Ok(LabeledDatum {
                    query: rq.query,
                    accepted,
                    cost: total,
                });
            }
        }
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Worst-case noise rate `eta_max` seen by the three-offer wrapper and the
/// repetition factor `gamma` it implies, for spreads up to `sigma_max`.
pub fn compute_gamma(n: usize, delta: f64, sigma_max: f64, epsilon: f64, r: f64) -> Result<(f64, f64)> {
    if !(sigma_max > 0.0 && sigma_max.is_finite()) {
        return Err(invalid(format!("sigma_max must be positive, got {sigma_max}")));
    }
    if !(epsilon > 0.0 && r > 0.0) {
        return Err(invalid("precision and r must be positive"));
    }
    let near = std_normal_cdf(epsilon / (3.0 * sigma_max)) - 0.5;
    let mass = std_normal_cdf(r / (2.0 * sigma_max)) - std_normal_cdf(-r / (2.0 * sigma_max));
    let eta_max = 0.5 - near / mass;
    let gamma = gamma_from_eta(n, delta, eta_max)?;
    Ok((eta_max, gamma))
}

/// `3 ln(3 n^2 / delta) / (1/2 - eta)^2`.
pub fn gamma_from_eta(n: usize, delta: f64, eta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("failure probability must lie in (0, 1), got {delta}")));
    }
    if n < 1 {
        return Err(invalid("need at least one item"));
    }
    if eta.is_nan() || eta >= 0.5 - 1e-12 {
        return Err(Error::DegenerateParameters(format!(
            "noise rate bound {eta} leaves no margin below one half"
        )));
    }
    let margin = 0.5 - eta;
    Ok(3.0 * (3.0 * (n * n) as f64 / delta).ln() / (margin * margin))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(d: f64) -> DistanceMatrix {
        DistanceMatrix::from_rows(&[[0.0, d], [d, 0.0]], 1.0).unwrap()
    }

    fn gaussian(sigma: f64) -> NoiseModel {
        NoiseModel::truncated_gaussian(NoiseModel::uniform_sigma(2, sigma)).unwrap()
    }

    /// Truncated-normal CDF from the textbook formula with `Phi` written
    /// via `erfc`, independent of the symmetric form used above.
    fn reference_cdf(d: f64, r: f64, sigma: f64, c: f64) -> f64 {
        use statrs::function::erf::erfc;
        let phi = |x: f64| 0.5 * erfc(-x / std::f64::consts::SQRT_2);
        let w = d.min(r - d);
        let (a, b) = (d - w, d + w);
        if c < a {
            return 0.0;
        }
        if c > b {
            return 1.0;
        }
        (phi((c - d) / sigma) - phi((a - d) / sigma)) / (phi((b - d) / sigma) - phi((a - d) / sigma))
    }

    #[test]
    fn below_window_is_rejected() {
        let p = acceptance_probability(&gaussian(0.1), &pair(0.6), 0, 1, 0.1).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn half_at_true_distance() {
        for d in [0.1, 0.5, 0.93] {
            let p = acceptance_probability(&gaussian(0.07), &pair(d), 0, 1, d).unwrap();
            assert_eq!(p, 0.5);
        }
    }

    #[test]
    fn zero_distance_always_accepted() {
        for c in [0.0, 0.3, 1.0] {
            assert_eq!(acceptance_probability(&gaussian(0.1), &pair(0.0), 0, 1, c).unwrap(), 1.0);
        }
    }

    #[test]
    fn matches_reference_formula() {
        for &(d, s, c) in &[(0.6, 0.1, 0.55), (0.3, 0.05, 0.33), (0.8, 0.2, 0.7), (0.5, 1.0, 0.1)] {
            let got = acceptance_probability(&gaussian(s), &pair(d), 0, 1, c).unwrap();
            assert!((got - reference_cdf(d, 1.0, s, c)).abs() < 1e-12, "{d} {s} {c}");
        }
    }

    #[test]
    fn bounded_noise_rate_is_capped() {
        let m = NoiseModel::bounded(NoiseModel::uniform_sigma(2, 0.3), 0.2).unwrap();
        let d = pair(0.5);
        let below = acceptance_probability(&m, &d, 0, 1, 0.499).unwrap();
        let at = acceptance_probability(&m, &d, 0, 1, 0.5).unwrap();
        assert!(below <= 0.2 + 1e-12);
        assert!((at - 0.8).abs() < 1e-12);
        assert!(NoiseModel::bounded(NoiseModel::uniform_sigma(2, 0.3), 0.5).is_err());
    }

    #[test]
    fn rejects_bad_indices() {
        assert!(acceptance_probability(&gaussian(0.1), &pair(0.5), 0, 2, 0.5).is_err());
    }

    #[test]
    fn noise_free_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = NoiseModel::noise_free();
        assert!(sample_response(&m, &pair(0.5), &Query::new(0, 1, 0.5), &mut rng).unwrap());
        assert!(!sample_response(&m, &pair(0.5), &Query::new(0, 1, 0.49), &mut rng).unwrap());
    }

    #[test]
    fn monte_carlo_matches_probability() {
        let m = gaussian(0.1);
        let d = pair(0.4);
        let q = Query::new(0, 1, 0.43);
        let p = acceptance_probability(&m, &d, 0, 1, q.c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let hits = (0..10_000).filter(|_| sample_response(&m, &d, &q, &mut rng).unwrap()).count();
        assert!((hits as f64 / 1e4 - p).abs() < 0.02);
    }

    #[test]
    fn radius_values() {
        assert!((confidence_radius(1, 0.05) - 1.447).abs() < 1e-3);
        let first_small = (1..100).find(|&l| confidence_radius(l, 0.05) <= 0.5).unwrap();
        assert_eq!(first_small, 21);
    }

    #[test]
    fn unanimous_answers_stop_at_21() {
        let mut cfg = RobustQueryConfig::new(0.1, 0.5, 2, 1.0).unwrap();
        cfg.delta_prime = 0.05;
        let mut user = SimulatedUser::noise_free(pair(0.3));
        let yes = get_user_response_bounded(&mut user, &Query::new(0, 1, 0.5), &cfg).unwrap();
        assert!(yes.accepted);
        assert_eq!(yes.cost, 21);
        let no = get_user_response_bounded(&mut user, &Query::new(0, 1, 0.1), &cfg).unwrap();
        assert!(!no.accepted);
        assert_eq!(no.cost, 21);
    }

    #[test]
    fn cap_is_enforced() {
        let cfg = RobustQueryConfig::new(0.1, 0.1, 2, 1.0).unwrap().with_cap(5);
        let mut user = SimulatedUser::noise_free(pair(0.3));
        assert!(matches!(
            get_user_response_bounded(&mut user, &Query::new(0, 1, 0.5), &cfg),
            Err(Error::BudgetExhausted { cap: 5, .. })
        ));
        assert!(matches!(
            get_user_response_unbounded(&mut user, &Query::new(0, 1, 0.5), &cfg),
            Err(Error::BudgetExhausted { cap: 5, .. })
        ));
    }

    #[test]
    fn config_failure_split() {
        let cfg = RobustQueryConfig::new(0.01, 0.1, 10, 1.0).unwrap();
        assert!((cfg.delta_prime - 0.1 / 700.0).abs() < 1e-15);
        // ceil(log2(100)) = 7, ceil(log2(300)) = 9
        assert!((cfg.delta_double_prime - (0.1 / 3.0) * 7.0 / 9.0).abs() < 1e-15);
        assert!(RobustQueryConfig::new(1.5, 0.1, 10, 1.0).is_err());
        assert!(RobustQueryConfig::new(0.1, 1.0, 10, 1.0).is_err());
    }

    #[test]
    fn bounded_wrapper_error_rate() {
        let m = NoiseModel::bounded(NoiseModel::uniform_sigma(2, 0.2), 0.3).unwrap();
        let d = pair(0.5);
        let cfg = RobustQueryConfig::new(0.1, 0.1, 2, 1.0).unwrap();
        let mut wrong = 0;
        for seed in 0..200 {
            let mut user = SimulatedUser::new(d.clone(), m.clone(), seed).unwrap();
            let c = if seed % 2 == 0 { 0.45 } else { 0.55 };
            let out = get_user_response_bounded(&mut user, &Query::new(0, 1, c), &cfg).unwrap();
            if out.accepted != (c >= 0.5) {
                wrong += 1;
            }
        }
        assert!(wrong as f64 / 200.0 <= cfg.delta_prime + 0.02);
    }

    #[test]
    fn unbounded_offers_clamp_and_stay_consistent() {
        let cfg = RobustQueryConfig::new(0.3, 0.1, 2, 1.0).unwrap();
        let mut user = SimulatedUser::noise_free(pair(0.05));
        let out = get_user_response_unbounded(&mut user, &Query::new(0, 1, 0.0), &cfg).unwrap();
        assert!([0.0, 0.1].iter().any(|c| (out.query.c - c).abs() < 1e-12));
        assert_eq!(out.accepted, out.query.c >= 0.05);
        assert_eq!(out.cost, user.raw_queries());
    }

    #[test]
    fn unbounded_resolves_offer_at_threshold() {
        let m = gaussian(0.05);
        let d = pair(0.5);
        let cfg = RobustQueryConfig::new(0.05, 0.1, 2, 1.0).unwrap();
        let mut correct = 0;
        for seed in 0..100 {
            let mut user = SimulatedUser::new(d.clone(), m.clone(), seed).unwrap();
            let out = get_user_response_unbounded(&mut user, &Query::new(0, 1, 0.5), &cfg).unwrap();
            if out.accepted == (out.query.c >= 0.5) {
                correct += 1;
            }
        }
        assert!(correct >= 90, "{correct}");
    }

    #[test]
    fn gamma_examples() {
        let g = gamma_from_eta(10, 0.05, 0.25).unwrap();
        assert!((g - 3.0 * 6000f64.ln() / 0.0625).abs() < 1e-9);
        assert!((g - 417.6).abs() < 0.1);
        let (eta, _) = compute_gamma(10, 0.05, 1e6, 0.03, 1.0).unwrap();
        assert!((eta - 0.49).abs() < 1e-6);
        let (eta, g) = compute_gamma(10, 0.05, 1e-3, 1.5, 1.0).unwrap();
        assert!(eta.abs() < 1e-9);
        assert!((g - 3.0 * 6000f64.ln() / 0.25).abs() < 1e-6);
        assert!(matches!(gamma_from_eta(10, 0.05, 0.5), Err(Error::DegenerateParameters(_))));
    }
}
