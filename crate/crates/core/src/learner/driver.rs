use std::time::Instant;

use super::{linf_error, LearnerOptions, NoiseHandling, PolicyKind, ProjectionMode, RunStats};
use crate::bounds::{BoundsState, LabeledDatum, Query};
use crate::error::{Error, Result};
use crate::matrix::{Matrix, TOL};
use crate::metric::{floyd_warshall_in_place, DistanceMatrix};
use crate::policy::{q_greedy, CliqueTracker, CliqueView};
use crate::projection::{lower_full, lower_scoped, upper_scoped};
use crate::response::{get_user_response_bounded, get_user_response_unbounded, ResponseSource, RobustQueryConfig};

/// Learns all pairwise distances of `n` items to precision
/// `opts.epsilon`. Returns the final upper bounds and run statistics.
pub fn learn_hm<S: ResponseSource + ?Sized>(
    oracle: &mut S,
    n: usize,
    r: f64,
    opts: &LearnerOptions,
) -> Result<(DistanceMatrix, RunStats)> {
    let started = Instant::now();
    let mut session = Session::new(BoundsState::fresh(n, r), n, opts, oracle)?;
    session.run(oracle)?;
    Ok(session.finish(started))
}

/// Obtains labels according to the noise handling and tallies costs.
pub(crate) struct Responder {
    handling: NoiseHandling,
    robust: Option<RobustQueryConfig>,
}

impl Responder {
    pub(crate) fn new(opts: &LearnerOptions, n: usize, r: f64) -> Result<Self> {
        let robust = match opts.noise_handling {
            NoiseHandling::Direct => None,
            _ => Some(RobustQueryConfig::new(opts.epsilon, opts.delta, n.max(1), r)?.with_cap(opts.max_raw_queries)),
        };
        Ok(Self {
            handling: opts.noise_handling,
            robust,
        })
    }

    pub(crate) fn ask<S: ResponseSource + ?Sized>(&self, oracle: &mut S, q: &Query, stats: &RunStats) -> Result<LabeledDatum> {
        let out = match (self.handling, &self.robust) {
            (NoiseHandling::BoundedRobust, Some(cfg)) => get_user_response_bounded(oracle, q, cfg),
            (NoiseHandling::UnboundedRobust, Some(cfg)) => get_user_response_unbounded(oracle, q, cfg),
            _ => Ok(LabeledDatum {
                query: *q,
                accepted: oracle.respond(q),
                cost: 1,
            }),
        };
        out.map_err(|e| match e {
            Error::BudgetExhausted { cap, .. } => Error::BudgetExhausted {
                cap,
                stats: Some(Box::new(stats.clone())),
            },
            other => other,
        })
    }

    pub(crate) fn is_direct(&self) -> bool {
        self.handling == NoiseHandling::Direct
    }
}

/// Applies a label to its pair. Robust labels can be wrong, so when the new
/// bound crosses the opposite one the pair is pinned to the newest offer.
pub(crate) fn apply_label(b: &mut BoundsState, datum: &LabeledDatum, lenient: bool) {
    b.apply_label(datum);
    let Query { i, j, c } = datum.query;
    if lenient && b.lower[(i, j)] > b.upper[(i, j)] {
        b.lower[(i, j)] = c;
        b.upper[(i, j)] = c;
    }
}

/// Collapses `(i, j)` onto the only grid point left in `[L, U]` once the
/// interval is narrower than the step.
pub(crate) fn collapse(b: &mut BoundsState, step: f64, i: usize, j: usize) {
    let (l, u) = (b.lower[(i, j)], b.upper[(i, j)]);
    if u - l >= step - 1e-12 || u == l {
        return;
    }
    let v = ((u + TOL) / step).floor() * step;
    if v >= l - TOL && v <= u + TOL {
        b.lower[(i, j)] = v;
        b.upper[(i, j)] = v;
    }
}

/// Counts pairs whose bounds exclude the hidden distance.
pub(crate) fn count_violations(b: &BoundsState, truth: &Matrix, pairs: impl Iterator<Item = (usize, usize)>) -> u64 {
    pairs
        .filter(|&(i, j)| b.lower[(i, j)] > truth[(i, j)] + TOL || b.upper[(i, j)] < truth[(i, j)] - TOL)
        .count() as u64
}

pub(crate) struct Session<'o> {
    pub(crate) bounds: BoundsState,
    pub(crate) stats: RunStats,
    opts: &'o LearnerOptions,
    tracker: CliqueTracker,
    responder: Responder,
    truth: Option<Matrix>,
    scratch_pairs: Vec<(usize, usize)>,
}

impl<'o> Session<'o> {
    /// `planned_items` sizes the failure-probability split of robust labels.
    pub(crate) fn new<S: ResponseSource + ?Sized>(
        bounds: BoundsState,
        planned_items: usize,
        opts: &'o LearnerOptions,
        oracle: &S,
    ) -> Result<Self> {
        opts.validate(bounds.r())?;
        let responder = Responder::new(opts, planned_items, bounds.r())?;
        let truth = oracle.ground_truth().map(|d| d.entries().clone());
        if let Some(t) = &truth {
            if t.n() < bounds.n() {
                return Err(crate::error::invalid("oracle knows fewer items than the learner"));
            }
        }
        Ok(Self {
            stats: RunStats::new(bounds.n()),
            bounds,
            opts,
            tracker: CliqueTracker::new(),
            responder,
            truth,
            scratch_pairs: Vec::new(),
        })
    }

    pub(crate) fn run<S: ResponseSource + ?Sized>(&mut self, oracle: &mut S) -> Result<()> {
        while self.step(oracle)? {}
        Ok(())
    }

    pub(crate) fn is_converged(&mut self) -> bool {
        self.tracker.refresh(&self.bounds, self.opts.epsilon).next_item.is_none()
    }

    pub(crate) fn grow(&mut self) {
        self.bounds.grow();
        self.stats.grow(self.bounds.n());
    }

    /// One proposal, label and tightening. Returns `false` once every pair
    /// is learned.
    fn step<S: ResponseSource + ?Sized>(&mut self, oracle: &mut S) -> Result<bool> {
        let eps = self.opts.epsilon;
        let proposal = match self.opts.policy {
            PolicyKind::QGreedy => q_greedy(&self.bounds, eps),
            PolicyKind::QClique => self.tracker.propose(&self.bounds, eps),
        };
        let q = match proposal {
            Ok(q) => q,
            Err(Error::PolicyExhausted) => return Ok(false),
            Err(e) => return Err(e),
        };
        let datum = self.responder.ask(oracle, &q, &self.stats)?;
        let n = self.bounds.n();
        self.stats.record(n, &datum);
        let lenient = !self.responder.is_direct();
        apply_label(&mut self.bounds, &datum, lenient);
        let (i, j) = (q.i, q.j);
        if let Some(step) = self.opts.quantization {
            collapse(&mut self.bounds, step, i, j);
        }

        let mut changed = std::mem::take(&mut self.scratch_pairs);
        changed.clear();
        changed.push((i, j));
        match self.opts.projection {
            ProjectionMode::None => {}
            ProjectionMode::Full => {
                self.project_full(lenient)?;
                changed.clear();
                changed.extend(self.bounds.lower.off_diagonal_pairs());
            }
            ProjectionMode::Fast => {
                if !crate::bounds::exceeds(self.bounds.gap(i, j), eps) {
                    self.project_fast(i, j, lenient, &mut changed)?;
                }
            }
        }
        if let Some(step) = self.opts.quantization {
            for &(a, b) in &changed {
                collapse(&mut self.bounds, step, a, b);
            }
        }
        if self.opts.check_invariants {
            if let Some(t) = &self.truth {
                self.stats.invariant_violations += count_violations(&self.bounds, t, changed.iter().copied());
            }
        }
        self.scratch_pairs = changed;
        Ok(true)
    }

    fn project_full(&mut self, lenient: bool) -> Result<()> {
        let b = &mut self.bounds;
        let pairs: Vec<_> = b.lower.off_diagonal_pairs().collect();
        floyd_warshall_in_place(&mut b.upper);
        if lenient {
            clamp_lower(b, pairs.iter().copied());
        }
        lower_full(&mut b.lower, &b.upper);
        settle_crossings(b, &pairs, lenient)
    }

    fn project_fast(&mut self, i: usize, j: usize, lenient: bool, changed: &mut Vec<(usize, usize)>) -> Result<()> {
        let view = match self.opts.policy {
            PolicyKind::QClique => self.tracker.refresh(&self.bounds, self.opts.epsilon),
            PolicyKind::QGreedy => CliqueView::of(&self.bounds, self.opts.epsilon),
        };
        let (pivot, item) = (i.min(j), i.max(j));
        let members = (0..view.size).filter(|&c| c != item);
        let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(2 * view.size);
        pairs.extend(members.clone().map(|c| (c, item)));
        pairs.extend(members.map(|c| (item, c)));
        pairs.sort_unstable();
        let b = &mut self.bounds;
        upper_scoped(&mut b.upper, &[pivot], &pairs);
        if lenient {
            clamp_lower(b, pairs.iter().copied());
        }
        lower_scoped(&mut b.lower, &b.upper, &[pivot], &pairs);
        settle_crossings(b, &pairs, lenient)?;
        changed.extend(pairs);
        Ok(())
    }

    pub(crate) fn finish(mut self, started: Instant) -> (DistanceMatrix, RunStats) {
        let n = self.bounds.n();
        if let Some(t) = &self.truth {
            self.stats.final_linf_error = Some(linf_error(&self.bounds.upper, &t.prefix(n)));
        }
        self.stats.wall_clock_ms = started.elapsed().as_secs_f64() * 1e3;
        let r = self.bounds.r();
        let estimate = DistanceMatrix::new(self.bounds.upper, r).expect("upper bounds stay within [0, r]");
        (estimate, self.stats)
    }

    pub(crate) fn snapshot(&self) -> (DistanceMatrix, RunStats) {
        let mut stats = self.stats.clone();
        let n = self.bounds.n();
        if let Some(t) = &self.truth {
            stats.final_linf_error = Some(linf_error(&self.bounds.upper, &t.prefix(n)));
        }
        let estimate = DistanceMatrix::new(self.bounds.upper.clone(), self.bounds.r()).expect("upper bounds stay within [0, r]");
        (estimate, stats)
    }
}

fn clamp_lower(b: &mut BoundsState, pairs: impl Iterator<Item = (usize, usize)>) {
    for (i, j) in pairs {
        if b.lower[(i, j)] > b.upper[(i, j)] {
            b.lower[(i, j)] = b.upper[(i, j)];
        }
    }
}

/// Noise-free labels can never make bounds cross; robust ones can, and then
/// the lower bound yields.
fn settle_crossings(b: &mut BoundsState, pairs: &[(usize, usize)], lenient: bool) -> Result<()> {
    for &(i, j) in pairs {
        if b.lower[(i, j)] > b.upper[(i, j)] + TOL {
            if !lenient {
                return Err(Error::Infeasible(format!(
                    "bounds for ({i}, {j}) crossed: {} > {}",
                    b.lower[(i, j)],
                    b.upper[(i, j)]
                )));
            }
            b.lower[(i, j)] = b.upper[(i, j)];
        }
    }
    Ok(())
}
