use crate::error::{invalid, Result};
use crate::response::{ceil_log2, compute_gamma};

/// How the hidden distances are structured.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Precision {
    /// Learned to `epsilon`, with intra-cluster distances at most `r_in`.
    Clustered { r_in: f64, epsilon: f64 },
    /// Exact recovery of distances on a grid of step `step`, with zero
    /// intra-cluster distance.
    Quantized { step: f64 },
}

/// Noise parameters for the repeated-query bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseBudget {
    pub delta: f64,
    pub sigma_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundSetting {
    pub n: usize,
    pub k: usize,
    pub r: f64,
    pub precision: Precision,
    pub noise: Option<NoiseBudget>,
}

/// Upper bound on the number of user interactions the clique learner needs
/// in `setting`.
///
/// - clustered: `2nK ceil(log2(r/eps)) + n^2 ceil(log2((2 r_in + 3 eps)/eps))`
/// - quantized: `2nK ceil(log2(r/step))`
///
/// With noise, every label may cost up to `gamma` repetitions and the
/// binary searches run at a third of the precision, so the logarithm
/// arguments become `3r/eps`, `(6 r_in + 9 eps)/eps` and `3r/step`.
pub fn predicted_bounds(setting: &BoundSetting) -> Result<f64> {
    let BoundSetting { n, k, r, precision, noise } = *setting;
    if k == 0 || k > n {
        return Err(invalid(format!("cluster count must lie in [1, n], got {k}")));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid(format!("distance bound r must be positive, got {r}")));
    }
    let (n_f, k_f) = (n as f64, k as f64);
    match precision {
        Precision::Clustered { r_in, epsilon } => {
            if !(epsilon > 0.0 && epsilon < r) {
                return Err(invalid(format!("precision must lie in (0, r), got {epsilon}")));
            }
            if !(0.0..=r).contains(&r_in) {
                return Err(invalid(format!("intra-cluster radius must lie in [0, r], got {r_in}")));
            }
            match noise {
                None => Ok(2.0 * n_f * k_f * ceil_log2(r / epsilon)
                    + n_f * n_f * ceil_log2((2.0 * r_in + 3.0 * epsilon) / epsilon)),
                Some(nb) => {
                    let (_, gamma) = compute_gamma(n, nb.delta, nb.sigma_max, epsilon, r)?;
                    Ok(gamma
                        * (2.0 * n_f * k_f * ceil_log2(3.0 * r / epsilon)
                            + n_f * n_f * ceil_log2((6.0 * r_in + 9.0 * epsilon) / epsilon)))
                }
            }
        }
        Precision::Quantized { step } => {
            if !(step > 0.0 && step <= r) {
                return Err(invalid(format!("grid step must lie in (0, r], got {step}")));
            }
            match noise {
                None => Ok(2.0 * n_f * k_f * ceil_log2(r / step)),
                Some(nb) => {
                    let (_, gamma) = compute_gamma(n, nb.delta, nb.sigma_max, step / 2.0, r)?;
                    Ok(gamma * 2.0 * n_f * k_f * ceil_log2(3.0 * r / step))
                }
            }
        }
    }
}
