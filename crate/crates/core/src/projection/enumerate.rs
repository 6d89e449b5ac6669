//! Exhaustive grid oracle for the tightest bounds implied by a label log.
//!
//! Every entry is an integer multiple of the grid step. Labels restrict each
//! entry to an integer interval (acceptance: `d <= c`, rejection:
//! `d >= c`), and the triangle inequalities couple the entries. For every
//! entry the smallest and largest feasible grid value is found by a
//! depth-first search with forward checking, which visits the same solution
//! space as a full enumeration but stops at the first witness.

use crate::bounds::LabeledDatum;
use crate::error::{invalid, Error, Result};
use crate::matrix::{Matrix, TOL};

/// Largest item count accepted by [`brute_force_bounds`].
pub const MAX_ENUMERATION_ITEMS: usize = 6;

/// Search-node budget across one [`brute_force_bounds`] call.
pub const VISIT_CAP: u64 = 100_000_000;

const UNSET: i32 = -1;

/// Elementwise minimum and maximum over all grid hemimetrics with entries in
/// `{0, step, ..., r}` consistent with `data`.
pub fn brute_force_bounds(data: &[LabeledDatum], n: usize, r: f64, step: f64) -> Result<(Matrix, Matrix)> {
    brute_force_bounds_with_cap(data, n, r, step, VISIT_CAP)
}

pub(crate) fn brute_force_bounds_with_cap(
    data: &[LabeledDatum],
    n: usize,
    r: f64,
    step: f64,
    cap: u64,
) -> Result<(Matrix, Matrix)> {
    if n > MAX_ENUMERATION_ITEMS {
        return Err(invalid(format!(
            "enumeration supports at most {MAX_ENUMERATION_ITEMS} items, got {n}"
        )));
    }
    if !(step.is_finite() && step > 0.0 && r.is_finite() && r > 0.0) {
        return Err(invalid("grid step and r must be positive"));
    }
    let top = (r / step).round();
    if (top * step - r).abs() > TOL || top > 1e6 {
        return Err(invalid(format!("r = {r} is not a (small) multiple of the grid step {step}")));
    }
    let mut search = Search::new(n, top as i32, cap);
    for d in data {
        let q = d.query;
        if q.i >= n || q.j >= n || q.i == q.j {
            return Err(invalid(format!("label on invalid pair ({}, {})", q.i, q.j)));
        }
        let v = q.i * n + q.j;
        let units = q.c / step;
        if d.accepted {
            let hi = (units + TOL).floor() as i32;
            search.hi[v] = search.hi[v].min(hi);
        } else {
            let lo = (units - TOL).ceil() as i32;
            search.lo[v] = search.lo[v].max(lo);
        }
    }

    // First witness; also the initial estimate of both extremes.
    let witness = search
        .solve(None, Order::Ascending)?
        .ok_or_else(|| Error::Infeasible("no grid hemimetric is consistent with the labels".into()))?;
    let mut best_lo = witness.clone();
    let mut best_hi = witness;

    let vars = search.vars.clone();
    for &v in &vars {
        let mut target = search.lo[v];
        while target < best_lo[v] {
            if let Some(sol) = search.solve(Some((v, target)), Order::Ascending)? {
                absorb(&mut best_lo, &mut best_hi, &sol);
                break;
            }
            target += 1;
        }
        let mut target = search.hi[v];
        while target > best_hi[v] {
            if let Some(sol) = search.solve(Some((v, target)), Order::Descending)? {
                absorb(&mut best_lo, &mut best_hi, &sol);
                break;
            }
            target -= 1;
        }
    }
    let to_matrix = |units: &[i32]| Matrix::from_fn(n, |i, j| if i == j { 0.0 } else { units[i * n + j] as f64 * step });
    Ok((to_matrix(&best_lo), to_matrix(&best_hi)))
}

fn absorb(lo: &mut [i32], hi: &mut [i32], sol: &[i32]) {
    for (k, &x) in sol.iter().enumerate() {
        lo[k] = lo[k].min(x);
        hi[k] = hi[k].max(x);
    }
}

#[derive(Clone, Copy)]
enum Order {
    Ascending,
    Descending,
}

struct Search {
    n: usize,
    lo: Vec<i32>,
    hi: Vec<i32>,
    vars: Vec<usize>,
    value: Vec<i32>,
    visits: u64,
    cap: u64,
}

impl Search {
    fn new(n: usize, top: i32, cap: u64) -> Self {
        let vars: Vec<usize> = (0..n * n).filter(|v| v / n != v % n).collect();
        let mut hi = vec![top; n * n];
        for i in 0..n {
            hi[i * n + i] = 0;
        }
        let mut value = vec![UNSET; n * n];
        for i in 0..n {
            value[i * n + i] = 0;
        }
        Self {
            n,
            lo: vec![0; n * n],
            hi,
            vars,
            value,
            visits: 0,
            cap,
        }
    }

    /// Finds one consistent assignment, optionally with `fixed.0` pinned to
    /// `fixed.1`.
    fn solve(&mut self, fixed: Option<(usize, i32)>, order: Order) -> Result<Option<Vec<i32>>> {
        for &v in &self.vars {
            self.value[v] = UNSET;
        }
        if let Some((v, x)) = fixed {
            if x < self.lo[v] || x > self.hi[v] {
                return Ok(None);
            }
            self.value[v] = x;
            let (lo, hi) = self.domain(v);
            if x < lo || x > hi {
                return Ok(None);
            }
        }
        let found = self.dfs(order)?;
        Ok(found.then(|| self.value.clone()))
    }

    /// Interval for variable `v` implied by its label bounds and every
    /// triangle whose other two entries are assigned.
    fn domain(&self, v: usize) -> (i32, i32) {
        let n = self.n;
        let (i, j) = (v / n, v % n);
        let (mut lo, mut hi) = (self.lo[v], self.hi[v]);
        let d = |a: usize, b: usize| self.value[a * n + b];
        for k in 0..n {
            if k == i || k == j {
                continue;
            }
            // d(i,j) <= d(i,k) + d(k,j)
            let (ik, kj) = (d(i, k), d(k, j));
            if ik != UNSET && kj != UNSET {
                hi = hi.min(ik + kj);
            }
            // d(i,k) <= d(i,j) + d(j,k)
            let jk = d(j, k);
            if ik != UNSET && jk != UNSET {
                lo = lo.max(ik - jk);
            }
            // d(k,j) <= d(k,i) + d(i,j)
            let ki = d(k, i);
            if kj != UNSET && ki != UNSET {
                lo = lo.max(kj - ki);
            }
        }
        (lo, hi)
    }

    fn dfs(&mut self, order: Order) -> Result<bool> {
        self.visits += 1;
        if self.visits > self.cap {
            return Err(Error::ResourceExhausted { visits: self.visits });
        }
        // Forward check every open variable; branch on the tightest one.
        let mut pick: Option<(usize, i32, i32)> = None;
        for &v in &self.vars {
            if self.value[v] != UNSET {
                continue;
            }
            let (lo, hi) = self.domain(v);
            if lo > hi {
                return Ok(false);
            }
            if pick.is_none_or(|(_, plo, phi)| hi - lo < phi - plo) {
                pick = Some((v, lo, hi));
            }
        }
        let Some((v, lo, hi)) = pick else {
            return Ok(true);
        };
        let step = |x: i32, this: &mut Self| -> Result<bool> {
            this.value[v] = x;
            if this.dfs(order)? {
                return Ok(true);
            }
            this.value[v] = UNSET;
            Ok(false)
        };
        match order {
            Order::Ascending => {
                for x in lo..=hi {
                    if step(x, self)? {
                        return Ok(true);
                    }
                }
            }
            Order::Descending => {
                for x in (lo..=hi).rev() {
                    if step(x, self)? {
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }
}
