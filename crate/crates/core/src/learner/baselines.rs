//! Per-pair binary search, with and without triplet side information.

use std::cmp::Reverse;
use std::collections::BTreeSet;
use std::time::Instant;

use ordered_float::OrderedFloat;

use super::driver::{apply_label, collapse, count_violations, Responder};
use super::{linf_error, LearnerOptions, RunStats};
use crate::bounds::{exceeds, BoundsState, Query};
use crate::error::{invalid, Error, Result};
use crate::matrix::TOL;
use crate::metric::DistanceMatrix;
use crate::response::{ceil_log2, ResponseSource};

type GapKey = (Reverse<OrderedFloat<f64>>, usize, usize);

/// Open pairs ordered by decreasing gap, then lexicographically.
struct GapQueue {
    set: BTreeSet<GapKey>,
    epsilon: f64,
}

impl GapQueue {
    fn new(b: &BoundsState, epsilon: f64) -> Self {
        let mut q = Self {
            set: BTreeSet::new(),
            epsilon,
        };
        for (i, j) in b.lower.off_diagonal_pairs() {
            q.insert(b, i, j);
        }
        q
    }

    fn insert(&mut self, b: &BoundsState, i: usize, j: usize) {
        let g = b.gap(i, j);
        if exceeds(g, self.epsilon) {
            self.set.insert((Reverse(OrderedFloat(g)), i, j));
        }
    }

    fn remove(&mut self, gap: f64, i: usize, j: usize) {
        self.set.remove(&(Reverse(OrderedFloat(gap)), i, j));
    }

    fn pop(&mut self) -> Option<(usize, usize)> {
        self.set.pop_first().map(|(_, i, j)| (i, j))
    }
}

/// Binary search on every ordered pair independently, always bisecting the
/// widest remaining interval. `opts.projection` and `opts.policy` are
/// ignored.
pub fn ind_greedy<S: ResponseSource + ?Sized>(
    oracle: &mut S,
    n: usize,
    r: f64,
    opts: &LearnerOptions,
) -> Result<(DistanceMatrix, RunStats)> {
    run_independent(oracle, n, r, opts, None)
}

/// [`ind_greedy`] with the order of every row of the hidden matrix known in
/// advance. After each label the row of the queried pair is re-tightened so
/// that its bounds respect that order. The cost of acquiring the order is
/// charged to `user_queries` before the first query.
pub fn ind_greedy_sit<S: ResponseSource + ?Sized>(
    oracle: &mut S,
    side: &SideInformation,
    n: usize,
    r: f64,
    opts: &LearnerOptions,
) -> Result<(DistanceMatrix, RunStats)> {
    if side.n() != n {
        return Err(invalid("side information covers a different number of items"));
    }
    run_independent(oracle, n, r, opts, Some(side))
}

fn run_independent<S: ResponseSource + ?Sized>(
    oracle: &mut S,
    n: usize,
    r: f64,
    opts: &LearnerOptions,
    side: Option<&SideInformation>,
) -> Result<(DistanceMatrix, RunStats)> {
    let started = Instant::now();
    opts.validate(r)?;
    let responder = Responder::new(opts, n, r)?;
    let lenient = !responder.is_direct();
    let truth = oracle.ground_truth().map(|d| d.entries().clone());
    let mut b = BoundsState::fresh(n, r);
    let mut stats = RunStats::new(n);
    if let Some(side) = side {
        stats.user_queries += side.acquisition_cost();
        for i in 0..n {
            side.tighten_row(&mut b, i, lenient)?;
        }
    }
    let mut queue = GapQueue::new(&b, opts.epsilon);
    let mut row_before = vec![(0.0, 0.0); n];

    while let Some((i, j)) = queue.pop() {
        let q = Query::new(i, j, b.midpoint(i, j));
        let datum = responder.ask(oracle, &q, &stats)?;
        stats.record(n, &datum);
        apply_label(&mut b, &datum, lenient);
        if let Some(step) = opts.quantization {
            collapse(&mut b, step, i, j);
        }
        if let Some(side) = side {
            for (k, slot) in row_before.iter_mut().enumerate() {
                *slot = (b.lower[(i, k)], b.upper[(i, k)]);
            }
            // Reinsert (i, j) under its current key so the row scan below
            // can treat every pair alike.
            queue.insert(&b, i, j);
            let new_key = (b.lower[(i, j)], b.upper[(i, j)]);
            row_before[j] = new_key;
            side.tighten_row(&mut b, i, lenient)?;
            for k in (0..n).filter(|&k| k != i) {
                let (l0, u0) = row_before[k];
                if (l0, u0) == (b.lower[(i, k)], b.upper[(i, k)]) {
                    continue;
                }
                queue.remove(u0 - l0, i, k);
                if let Some(step) = opts.quantization {
                    collapse(&mut b, step, i, k);
                }
                queue.insert(&b, i, k);
            }
        } else {
            queue.insert(&b, i, j);
        }
        if opts.check_invariants {
            if let Some(t) = &truth {
                let row: Box<dyn Iterator<Item = (usize, usize)>> = if side.is_some() {
                    Box::new((0..n).filter(move |&k| k != i).map(move |k| (i, k)))
                } else {
                    Box::new(std::iter::once((i, j)))
                };
                stats.invariant_violations += count_violations(&b, t, row);
            }
        }
    }
    if let Some(t) = &truth {
        stats.final_linf_error = Some(linf_error(&b.upper, t));
    }
    stats.wall_clock_ms = started.elapsed().as_secs_f64() * 1e3;
    let estimate = DistanceMatrix::new(b.upper, r)?;
    Ok((estimate, stats))
}

/// The order of every row of a hidden distance matrix: for each `i` and
/// each pair `j, k`, whether `D[i][j] <= D[i][k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SideInformation {
    /// `rank[i][j]`: dense rank of `D[i][j]` within row `i`.
    rank: Vec<Vec<u32>>,
    /// Row items sorted by rank.
    order: Vec<Vec<usize>>,
    acquisition_cost: u64,
}

impl SideInformation {
    /// Derives every triplet answer from the hidden matrix. Ties are
    /// answered yes in both directions.
    pub fn from_truth(d: &DistanceMatrix) -> Self {
        let n = d.n();
        let mut rank = Vec::with_capacity(n);
        let mut order = Vec::with_capacity(n);
        for i in 0..n {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| d.get(i, a).total_cmp(&d.get(i, b)).then(a.cmp(&b)));
            let mut row = vec![0u32; n];
            let mut current = 0u32;
            for w in 0..n {
                if w > 0 && d.get(i, idx[w]) != d.get(i, idx[w - 1]) {
                    current += 1;
                }
                row[idx[w]] = current;
            }
            rank.push(row);
            order.push(idx);
        }
        let cost = if n > 1 { (n * n) as u64 * ceil_log2(n as f64) as u64 } else { 0 };
        Self {
            rank,
            order,
            acquisition_cost: cost,
        }
    }

    pub fn n(&self) -> usize {
        self.rank.len()
    }

    /// Whether `D[i][j] <= D[i][k]`.
    pub fn answer(&self, i: usize, j: usize, k: usize) -> bool {
        self.rank[i][j] <= self.rank[i][k]
    }

    /// Queries charged for acquiring the answers: `n^2 ceil(log2 n)`.
    pub fn acquisition_cost(&self) -> u64 {
        self.acquisition_cost
    }

    /// Applies `U[i][j] <= U[i][k]` and `L[i][k] >= L[i][j]` for every
    /// `D[i][j] <= D[i][k]` in row `i`, to a fixpoint. Upper bounds become
    /// suffix minima and lower bounds prefix maxima in rank order, with
    /// tied items sharing their group's extreme.
    pub(crate) fn tighten_row(&self, b: &mut BoundsState, i: usize, lenient: bool) -> Result<()> {
        let order = &self.order[i];
        let rank = &self.rank[i];
        let n = order.len();
        // Upper: walk from the largest rank down, one tie group at a time.
        let mut end = n;
        let mut running = f64::INFINITY;
        while end > 0 {
            let mut start = end - 1;
            while start > 0 && rank[order[start - 1]] == rank[order[end - 1]] {
                start -= 1;
            }
            for &k in &order[start..end] {
                running = running.min(b.upper[(i, k)]);
            }
            for &k in &order[start..end] {
                b.upper[(i, k)] = running;
            }
            end = start;
        }
        let mut start = 0;
        let mut running = f64::NEG_INFINITY;
        while start < n {
            let mut end = start + 1;
            while end < n && rank[order[end]] == rank[order[start]] {
                end += 1;
            }
            for &k in &order[start..end] {
                running = running.max(b.lower[(i, k)]);
            }
            for &k in &order[start..end] {
                b.lower[(i, k)] = running;
            }
            start = end;
        }
        for k in 0..n {
            if b.lower[(i, k)] > b.upper[(i, k)] + TOL {
                if !lenient {
                    return Err(Error::Infeasible(format!(
                        "side information contradicts the labels at ({i}, {k})"
                    )));
                }
                b.lower[(i, k)] = b.upper[(i, k)];
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn rank_matrix(&self) -> crate::matrix::Matrix {
        let n = self.n();
        crate::matrix::Matrix::from_fn(n, |i, j| f64::from(self.rank[i][j]))
    }
}
