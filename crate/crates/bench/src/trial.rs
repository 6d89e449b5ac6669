//! Building instances and oracles, and running one algorithm on them.

use std::time::Instant;

use hemilearn::instances::{
    gen_attribute_instance, gen_clustered, gen_quantized_clustered, gen_synthetic_restaurants, AttributeWeights,
};
use hemilearn::learner::{
    ind_greedy, ind_greedy_sit, learn_hm, LearnerOptions, NoiseHandling, PolicyKind, ProjectionMode, ResultRow,
    RunStats, SideInformation,
};
use hemilearn::metric::load_instance;
use hemilearn::response::{NoiseModel, SimulatedUser};
use hemilearn::{DistanceMatrix, Matrix};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{policy_name, projection_name, Algorithm, InstanceKind, NoiseSetting, TrialParams, RestaurantModel};
use crate::BenchError;

/// Keeps the oracle's random stream apart from the generator's.
const ORACLE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// The hidden matrix for `params` under `seed`.
pub fn build_instance(params: &TrialParams, seed: u64) -> Result<DistanceMatrix, BenchError> {
    let n = params.n;
    let d = match &params.instance {
        InstanceKind::Clustered { k, r_in } => gen_clustered(n, *k, params.r, *r_in, seed)?.0,
        InstanceKind::Quantized { k, step } => gen_quantized_clustered(n, *k, params.r, *step, seed)?.0,
        InstanceKind::Restaurants(model) => {
            let items = gen_synthetic_restaurants(seed);
            if n > items.len() {
                return Err(BenchError::Trial(format!("at most {} restaurants are available, asked for {n}", items.len())));
            }
            let weights = match model {
                RestaurantModel::Cuisine => AttributeWeights::cuisine_clustered(),
                RestaurantModel::Mixed => AttributeWeights::mixed(),
            };
            gen_attribute_instance(&items[..n], &weights, params.r, seed)?
        }
        InstanceKind::Uniform { value } => DistanceMatrix::new(Matrix::off_diagonal(n, *value), params.r)?,
        InstanceKind::File(path) => {
            let full = load_instance(path)?;
            if n > full.n() {
                return Err(BenchError::Trial(format!("{} has {} items, asked for {n}", path.display(), full.n())));
            }
            if n == full.n() {
                full
            } else {
                let mut order: Vec<usize> = (0..full.n()).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                full.select(&order[..n])
            }
        }
    };
    Ok(d)
}

/// Learner options for `params`; quantized instances run at half a grid step.
pub fn learner_options(params: &TrialParams) -> LearnerOptions {
    let opts = match params.instance {
        InstanceKind::Quantized { step, .. } => LearnerOptions::quantized(step),
        _ => LearnerOptions::new(params.eps),
    };
    let handling = match params.noise {
        NoiseSetting::None => NoiseHandling::Direct,
        NoiseSetting::Gaussian => NoiseHandling::UnboundedRobust,
        NoiseSetting::Bounded => NoiseHandling::BoundedRobust,
    };
    opts.with_projection(params.projection)
        .with_policy(params.policy)
        .with_noise_handling(handling, params.delta)
}

fn oracle(params: &TrialParams, truth: DistanceMatrix, seed: u64) -> Result<SimulatedUser, BenchError> {
    let n = truth.n();
    let model = match params.noise {
        NoiseSetting::None => return Ok(SimulatedUser::noise_free(truth)),
        NoiseSetting::Gaussian => NoiseModel::truncated_gaussian(NoiseModel::uniform_sigma(n, params.sigma))?,
        NoiseSetting::Bounded => NoiseModel::bounded(NoiseModel::uniform_sigma(n, params.sigma), params.eta_bn)?,
    };
    Ok(SimulatedUser::new(truth, model, seed ^ ORACLE_STREAM)?)
}

/// The parameter columns of a result row; the counts are left at zero.
pub fn row_template(params: &TrialParams, algo: Algorithm, seed: u64) -> ResultRow {
    let opts = learner_options(params);
    let (policy, projection) = match algo {
        Algorithm::LearnHm => (policy_name(params.policy), projection_name(params.projection)),
        _ => (policy_name(PolicyKind::QGreedy), projection_name(ProjectionMode::None)),
    };
    let (k, r_in) = match params.instance {
        InstanceKind::Clustered { k, r_in } => (Some(k), Some(r_in)),
        InstanceKind::Quantized { k, .. } => (Some(k), Some(0.0)),
        _ => (None, None),
    };
    let noisy = params.noise != NoiseSetting::None;
    ResultRow {
        algo: algo.name().to_string(),
        policy: policy.to_string(),
        projection_mode: projection.to_string(),
        n: params.n,
        k,
        r: params.r,
        r_in,
        eps: opts.epsilon,
        delta: noisy.then_some(params.delta),
        noise_kind: params.noise.name().to_string(),
        sigma: noisy.then_some(params.sigma),
        eta_bn: (params.noise == NoiseSetting::Bounded).then_some(params.eta_bn),
        seed,
        iterations: 0,
        user_queries: 0,
        linf_error: None,
        wall_clock_ms: None,
    }
}

/// Runs `algo` on the instance for `seed` and returns its row together with
/// the full statistics. With `checked` the learner verifies after every
/// update that its bounds still contain the hidden matrix.
pub fn execute(
    params: &TrialParams,
    algo: Algorithm,
    seed: u64,
    checked: bool,
) -> Result<(ResultRow, RunStats), BenchError> {
    let truth = build_instance(params, seed)?;
    let mut opts = learner_options(params);
    opts.check_invariants = checked;
    let mut user = oracle(params, truth.clone(), seed)?;
    let started = Instant::now();
    let (_, stats) = match algo {
        Algorithm::LearnHm => learn_hm(&mut user, params.n, params.r, &opts)?,
        Algorithm::IndGreedy => ind_greedy(&mut user, params.n, params.r, &opts)?,
        Algorithm::IndGreedySit => {
            let side = SideInformation::from_truth(&truth);
            ind_greedy_sit(&mut user, &side, params.n, params.r, &opts)?
        }
    };
    let elapsed = started.elapsed().as_secs_f64() * 1e3;
    let mut row = row_template(params, algo, seed);
    row.iterations = stats.iterations;
    row.user_queries = stats.user_queries;
    row.linf_error = stats.final_linf_error;
    row.wall_clock_ms = params.timing.then_some(elapsed);
    Ok((row, stats))
}

pub fn run_trial(params: &TrialParams, algo: Algorithm, seed: u64) -> Result<ResultRow, BenchError> {
    execute(params, algo, seed, false).map(|(row, _)| row)
}
