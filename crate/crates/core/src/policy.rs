//! Query selection.
//!
//! [`q_greedy`] bisects the pair with the widest interval. [`q_clique`]
//! grows a prefix of items whose pairwise distances are all learned, and
//! always bisects a pair between that prefix and the next item, so the
//! triangle inequalities through already-learned items can do most of the
//! work.

use crate::bounds::{exceeds, max_gap, BoundsState, Query};
use crate::error::{Error, Result};

/// Bisects the lexicographically first pair with the largest gap.
pub fn q_greedy(b: &BoundsState, epsilon: f64) -> Result<Query> {
    let (i, j, gap) = max_gap(b)?;
    if !exceeds(gap, epsilon) {
        return Err(Error::PolicyExhausted);
    }
    Ok(Query::new(i, j, b.midpoint(i, j)))
}

/// The learned prefix `{0, ..., size - 1}` and the item after it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CliqueView {
    pub size: usize,
    /// `None` once every item belongs to the clique.
    pub next_item: Option<usize>,
}

impl CliqueView {
    pub fn of(b: &BoundsState, epsilon: f64) -> Self {
        let n = b.n();
        let mut size = n.min(1);
        while size < n && (0..size).all(|i| b.learned(i, size, epsilon)) {
            size += 1;
        }
        Self {
            size,
            next_item: (size < n).then_some(size),
        }
    }

    pub fn contains(&self, item: usize) -> bool {
        item < self.size
    }
}

/// Bisects a pair between the learned prefix and the next item.
///
/// With `a` the next item and `b` the first prefix member whose distances
/// to `a` are not both learned, the offer is for `(a, b)` while that
/// direction is open, then for `(b, a)`.
pub fn q_clique(b: &BoundsState, epsilon: f64) -> Result<Query> {
    let view = CliqueView::of(b, epsilon);
    let a = view.next_item.ok_or(Error::PolicyExhausted)?;
    let partner = (0..a)
        .find(|&i| !b.learned(i, a, epsilon))
        .expect("maximal prefix has an open pair with the next item");
    Ok(orient(b, a, partner, epsilon))
}

fn orient(b: &BoundsState, a: usize, partner: usize, epsilon: f64) -> Query {
    if exceeds(b.gap(a, partner), epsilon) {
        Query::new(a, partner, b.midpoint(a, partner))
    } else {
        Query::new(partner, a, b.midpoint(partner, a))
    }
}

/// Incremental [`q_clique`].
///
/// Gaps never widen during a run, so both the clique size and the scan
/// position for the next open partner only move forward; amortized cost
/// per proposal is O(1) plus the items that became learned.
#[derive(Clone, Debug, Default)]
pub struct CliqueTracker {
    size: usize,
    cursor: usize,
}

impl CliqueTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Advances past every learned pair and returns the current view.
    pub fn refresh(&mut self, b: &BoundsState, epsilon: f64) -> CliqueView {
        let n = b.n();
        if self.size == 0 && n > 0 {
            self.size = 1;
        }
        while self.size < n {
            while self.cursor < self.size && b.learned(self.cursor, self.size, epsilon) {
                self.cursor += 1;
            }
            if self.cursor < self.size {
                break;
            }
            self.size += 1;
            self.cursor = 0;
        }
        CliqueView {
            size: self.size,
            next_item: (self.size < n).then_some(self.size),
        }
    }

    pub fn propose(&mut self, b: &BoundsState, epsilon: f64) -> Result<Query> {
        let view = self.refresh(b, epsilon);
        let a = view.next_item.ok_or(Error::PolicyExhausted)?;
        Ok(orient(b, a, self.cursor, epsilon))
    }
}
