use std::time::Instant;

use super::driver::Session;
use super::{LearnerOptions, PolicyKind, RunStats};
use crate::bounds::BoundsState;
use crate::error::{invalid, Error, Result};
use crate::metric::DistanceMatrix;
use crate::response::ResponseSource;

/// Learns items one at a time as they arrive.
///
/// Item `m` is the `m`-th item of the oracle. Each arrival adds a row and
/// column of unconstrained bounds and runs the clique policy until the new
/// item is learned against all earlier ones. Since the clique policy never
/// looks past the first unlearned item, the total cost after `n` arrivals
/// equals a batch run over the same `n` items.
pub struct OnlineLearner<'o> {
    session: Session<'o>,
    started: Instant,
}

impl<'o> OnlineLearner<'o> {
    /// Starts with the oracle's first item. `planned_items` sizes the
    /// failure-probability split of robust labels and should match the
    /// batch run being mirrored.
    pub fn new<S: ResponseSource + ?Sized>(
        r: f64,
        planned_items: usize,
        opts: &'o LearnerOptions,
        oracle: &S,
    ) -> Result<Self> {
        if opts.policy != PolicyKind::QClique {
            return Err(invalid("online learning needs the clique policy"));
        }
        Ok(Self {
            session: Session::new(BoundsState::fresh(1, r), planned_items, opts, oracle)?,
            started: Instant::now(),
        })
    }

    pub fn n(&self) -> usize {
        self.session.bounds.n()
    }

    pub fn bounds(&self) -> &BoundsState {
        &self.session.bounds
    }

    pub fn stats(&self) -> &RunStats {
        &self.session.stats
    }

    /// Adds the next item and learns its distances to all earlier items.
    pub fn extend<S: ResponseSource + ?Sized>(&mut self, oracle: &mut S) -> Result<()> {
        if !self.session.is_converged() {
            return Err(Error::Precondition("current items are not fully learned".into()));
        }
        self.session.grow();
        self.session.run(oracle)
    }

    /// Current estimate and statistics.
    pub fn snapshot(&self) -> (DistanceMatrix, RunStats) {
        let (d, mut stats) = self.session.snapshot();
        stats.wall_clock_ms = self.started.elapsed().as_secs_f64() * 1e3;
        (d, stats)
    }

    pub fn finish(self) -> (DistanceMatrix, RunStats) {
        self.session.finish(self.started)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::learn_hm;
    use crate::matrix::Matrix;
    use crate::response::SimulatedUser;

    fn truth() -> DistanceMatrix {
        let w = Matrix::from_fn(5, |i, j| if i == j { 0.0 } else { ((i * 7 + j * 3) % 10) as f64 / 10.0 + 0.05 });
        crate::metric::hemimetric_closure(&w, 1.0).unwrap()
    }

    #[test]
    fn first_arrival_learns_two_distances() {
        let t = truth();
        let opts = LearnerOptions::new(0.1);
        let mut user = SimulatedUser::noise_free(t.clone());
        let mut online = OnlineLearner::new(1.0, 2, &opts, &user).unwrap();
        assert_eq!(online.n(), 1);
        online.extend(&mut user).unwrap();
        let mut fresh = SimulatedUser::noise_free(t.prefix(2));
        let (_, batch) = learn_hm(&mut fresh, 2, 1.0, &opts).unwrap();
        assert_eq!(online.stats().user_queries, batch.user_queries);
        assert_eq!(online.n(), 2);
    }

    #[test]
    fn growth_starts_unconstrained_and_matches_batch() {
        let t = truth();
        let opts = LearnerOptions::new(0.05);
        let mut user = SimulatedUser::noise_free(t.clone());
        let mut online = OnlineLearner::new(1.0, 5, &opts, &user).unwrap();
        for _ in 1..5 {
            online.extend(&mut user).unwrap();
        }
        let (d_online, s_online) = online.finish();
        let (d_batch, s_batch) = learn_hm(&mut SimulatedUser::noise_free(t), 5, 1.0, &opts).unwrap();
        assert_eq!(s_online.user_queries, s_batch.user_queries);
        assert_eq!(s_online.query_log, s_batch.query_log);
        assert_eq!(d_online, d_batch);
    }

    #[test]
    fn new_row_is_unconstrained() {
        let mut b = BoundsState::fresh(2, 1.0);
        b.upper[(0, 1)] = 0.3;
        b.grow();
        assert_eq!((b.lower[(2, 0)], b.upper[(2, 0)]), (0.0, 1.0));
        assert_eq!((b.lower[(1, 2)], b.upper[(1, 2)]), (0.0, 1.0));
    }

    #[test]
    fn rejects_greedy_policy() {
        let opts = LearnerOptions::new(0.1).with_policy(PolicyKind::QGreedy);
        let user = SimulatedUser::noise_free(truth());
        assert!(OnlineLearner::new(1.0, 5, &opts, &user).is_err());
    }
}
