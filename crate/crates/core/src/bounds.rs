//! Per-pair lower/upper bounds on the unknown hemimetric, and the query
//! records that tighten them.

use crate::error::{invalid, Result};
use crate::matrix::{Matrix, TOL};

/// Slack added to the precision when comparing a gap against it, so that a
/// gap landing exactly on `epsilon` counts as learned.
pub const GAP_SLACK: f64 = 1e-12;

/// True when `gap` still exceeds precision `epsilon`.
#[inline]
pub fn exceeds(gap: f64, epsilon: f64) -> bool {
    gap > epsilon + GAP_SLACK
}

/// An offer `c` for switching from item `i` to item `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Query {
    pub i: usize,
    pub j: usize,
    pub c: f64,
}

impl Query {
    pub fn new(i: usize, j: usize, c: f64) -> Self {
        Self { i, j, c }
    }
}

/// A query together with its observed label.
///
/// `query.c` holds the offer the label refers to, which robust response
/// wrappers may shift away from the proposed offer. `cost` counts raw user
/// interactions spent on this label.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledDatum {
    pub query: Query,
    pub accepted: bool,
    pub cost: u64,
}

impl LabeledDatum {
    pub fn label(&self) -> u8 {
        u8::from(self.accepted)
    }
}

/// The version-space hypercube `[lower, upper]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundsState {
    r: f64,
    pub lower: Matrix,
    pub upper: Matrix,
}

impl BoundsState {
    /// Unconstrained state: `lower = 0`, `upper = r` off the diagonal.
    pub fn fresh(n: usize, r: f64) -> Self {
        Self {
            r,
            lower: Matrix::zeros(n),
            upper: Matrix::off_diagonal(n, r),
        }
    }

    pub fn from_parts(lower: Matrix, upper: Matrix, r: f64) -> Result<Self> {
        if lower.n() != upper.n() {
            return Err(invalid("lower and upper bounds differ in size"));
        }
        for i in 0..lower.n() {
            if lower[(i, i)] != 0.0 || upper[(i, i)] != 0.0 {
                return Err(invalid(format!("nonzero diagonal at ({i}, {i})")));
            }
            for j in 0..lower.n() {
                let (l, u) = (lower[(i, j)], upper[(i, j)]);
                if l < -TOL || u > r + TOL || l > u + TOL {
                    return Err(invalid(format!(
                        "bounds at ({i}, {j}) violate 0 <= {l} <= {u} <= {r}"
                    )));
                }
            }
        }
        Ok(Self { r, lower, upper })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.lower.n()
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.r
    }

    #[inline]
    pub fn gap(&self, i: usize, j: usize) -> f64 {
        self.upper[(i, j)] - self.lower[(i, j)]
    }

    #[inline]
    pub fn midpoint(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.lower[(i, j)] + self.upper[(i, j)])
    }

    /// True when both directed gaps between `i` and `j` are within `epsilon`.
    #[inline]
    pub fn learned(&self, i: usize, j: usize, epsilon: f64) -> bool {
        !exceeds(self.gap(i, j), epsilon) && !exceeds(self.gap(j, i), epsilon)
    }

    /// Tightens the queried pair from a label: acceptance caps the upper
    /// bound at the offer, rejection lifts the lower bound to it.
    pub fn apply_label(&mut self, datum: &LabeledDatum) {
        let Query { i, j, c } = datum.query;
        if datum.accepted {
            if c < self.upper[(i, j)] {
                self.upper[(i, j)] = c;
            }
        } else if c > self.lower[(i, j)] {
            self.lower[(i, j)] = c;
        }
    }

    /// Adds one item with unconstrained bounds `[0, r]` to every pair it
    /// is part of.
    pub fn grow(&mut self) {
        self.lower = self.lower.grown(0.0);
        self.upper = self.upper.grown(self.r);
    }

    /// True when `lower <= truth <= upper` holds on every entry within
    /// [`TOL`].
    pub fn brackets(&self, truth: &Matrix) -> bool {
        self.lower.le_within(truth, TOL) && truth.le_within(&self.upper, TOL)
    }
}

/// The lexicographically smallest off-diagonal pair with the largest gap,
/// and that gap.
pub fn max_gap(b: &BoundsState) -> Result<(usize, usize, f64)> {
    let n = b.n();
    if n < 2 {
        return Err(invalid("max_gap needs at least two items"));
    }
    let mut best = (0, 1, f64::NEG_INFINITY);
    for i in 0..n {
        let (lr, ur) = (b.lower.row(i), b.upper.row(i));
        for j in 0..n {
            if i == j {
                continue;
            }
            let g = ur[j] - lr[j];
            if g > best.2 {
                best = (i, j, g);
            }
        }
    }
    Ok(best)
}
