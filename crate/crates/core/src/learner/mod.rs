//! The learning loop, its baselines and the closed-form query bounds.
//!
//! [`learn_hm`] alternates query proposal, label collection and bound
//! tightening until every pair is known to precision `epsilon`. The
//! estimate returned is the final upper-bound matrix, which is always a
//! hemimetric when projection is enabled.

mod baselines;
mod driver;
mod online;
mod predicted;
mod record;

pub use baselines::{ind_greedy, ind_greedy_sit, SideInformation};
pub use driver::learn_hm;
pub use online::OnlineLearner;
pub use predicted::{predicted_bounds, BoundSetting, NoiseBudget, Precision};
pub use record::{ResultRow, RESULT_HEADER};

use crate::error::{invalid, Result};
use crate::matrix::Matrix;
use crate::bounds::LabeledDatum;
use crate::response::DEFAULT_RAW_QUERY_CAP;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionMode {
    /// Tighten every pair after every label.
    Full,
    /// Tighten only the pairs linking the current item to the learned
    /// clique, and only once the queried pair is learned.
    Fast,
    /// Never tighten across pairs.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyKind {
    QClique,
    QGreedy,
}

/// How one label is obtained from the user.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseHandling {
    /// Ask once and trust the answer.
    Direct,
    /// Repeat the offer until the majority is certain.
    BoundedRobust,
    /// Repeat the offer and two shifted offers, keep the first certain one.
    UnboundedRobust,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnerOptions {
    pub epsilon: f64,
    pub delta: f64,
    pub projection: ProjectionMode,
    pub policy: PolicyKind,
    /// Grid step of the hidden distances, when known.
    pub quantization: Option<f64>,
    pub noise_handling: NoiseHandling,
    /// Count iterations at which some updated bound excludes the hidden
    /// distance (needs a source that exposes its ground truth).
    pub check_invariants: bool,
    pub max_raw_queries: u64,
}

impl LearnerOptions {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            delta: 0.1,
            projection: ProjectionMode::Fast,
            policy: PolicyKind::QClique,
            quantization: None,
            noise_handling: NoiseHandling::Direct,
            check_invariants: false,
            max_raw_queries: DEFAULT_RAW_QUERY_CAP,
        }
    }

    /// Options for distances on a grid of step `step`, with precision half
    /// a step.
    pub fn quantized(step: f64) -> Self {
        Self {
            quantization: Some(step),
            ..Self::new(step / 2.0)
        }
    }

    pub fn with_projection(mut self, projection: ProjectionMode) -> Self {
        self.projection = projection;
        self
    }

    pub fn with_policy(mut self, policy: PolicyKind) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_noise_handling(mut self, handling: NoiseHandling, delta: f64) -> Self {
        self.noise_handling = handling;
        self.delta = delta;
        self
    }

    pub fn checked(mut self) -> Self {
        self.check_invariants = true;
        self
    }

    pub fn validate(&self, r: f64) -> Result<()> {
        if !(r.is_finite() && r > 0.0) {
            return Err(invalid(format!("distance bound r must be positive, got {r}")));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(invalid(format!("precision must be positive, got {}", self.epsilon)));
        }
        if let Some(step) = self.quantization {
            if !(step > 0.0 && step <= r) {
                return Err(invalid(format!("grid step must lie in (0, r], got {step}")));
            }
            if self.epsilon >= step {
                return Err(invalid("precision must be below the grid step"));
            }
        }
        if self.noise_handling != NoiseHandling::Direct && !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("failure probability must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    /// Labels obtained.
    pub iterations: u64,
    /// Raw user interactions, including repetitions and side-information
    /// acquisition.
    pub user_queries: u64,
    /// Raw user interactions spent on each ordered pair, row-major.
    pub per_pair_queries: Vec<u64>,
    pub final_linf_error: Option<f64>,
    pub wall_clock_ms: f64,
    pub query_log: Vec<LabeledDatum>,
    /// Updated bounds found to exclude the hidden distance.
    pub invariant_violations: u64,
}

impl RunStats {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            per_pair_queries: vec![0; n * n],
            ..Self::default()
        }
    }

    pub(crate) fn record(&mut self, n: usize, datum: &LabeledDatum) {
        self.iterations += 1;
        self.user_queries += datum.cost;
        self.per_pair_queries[datum.query.i * n + datum.query.j] += datum.cost;
        self.query_log.push(*datum);
    }

    pub(crate) fn grow(&mut self, n: usize) {
        let old = n - 1;
        let mut grown = vec![0; n * n];
        for i in 0..old {
            grown[i * n..i * n + old].copy_from_slice(&self.per_pair_queries[i * old..(i + 1) * old]);
        }
        self.per_pair_queries = grown;
    }

    pub fn pair_queries(&self, n: usize, i: usize, j: usize) -> u64 {
        self.per_pair_queries[i * n + j]
    }
}

fn linf_error(estimate: &Matrix, truth: &Matrix) -> f64 {
    estimate.linf_distance(truth)
}
