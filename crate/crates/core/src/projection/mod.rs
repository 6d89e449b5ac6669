//! Bound tightening through the hemimetric constraints.
//!
//! Upper bounds are projected onto the set of hemimetrics below the
//! per-entry caps (an all-pairs shortest-path relaxation). Lower bounds are
//! then lifted into the companion set `L(U)`:
//!
//! ```text
//! L[i][j] >= max(L[i][k] - U[j][k], L[k][j] - U[k][i])   for all k
//! ```
//!
//! which is not a set of hemimetrics. With full scope the pair of outputs
//! is the tightest hypercube that still contains every hemimetric
//! consistent with the observed labels. A [`ProjectionScope`] restricts the
//! relaxation to selected pivots and target pairs; that variant is cheaper
//! and may stop short of the optimum.

mod certificate;
mod enumerate;

pub use certificate::{certificate_check, CertificateIssue, CertificateReport};
pub use enumerate::{brute_force_bounds, MAX_ENUMERATION_ITEMS, VISIT_CAP};

use crate::error::{invalid, Error, Result};
use crate::matrix::{Matrix, TOL};
use crate::metric::floyd_warshall_in_place;

/// Pivots and ordered target pairs for a restricted projection.
///
/// Both lists are sorted and deduplicated on construction; updates run
/// pivot-major, then row-major over pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProjectionScope {
    pivots: Vec<usize>,
    pairs: Vec<(usize, usize)>,
}

impl ProjectionScope {
    pub fn new(mut pivots: Vec<usize>, mut pairs: Vec<(usize, usize)>) -> Self {
        pivots.sort_unstable();
        pivots.dedup();
        pairs.sort_unstable();
        pairs.dedup();
        Self { pivots, pairs }
    }

    /// Every pivot and every off-diagonal pair; equivalent to full scope.
    pub fn everything(n: usize) -> Self {
        let pairs = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        Self::new((0..n).collect(), pairs)
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty() || self.pairs.is_empty()
    }

    fn check(&self, n: usize) -> Result<()> {
        if let Some(&k) = self.pivots.iter().find(|&&k| k >= n) {
            return Err(invalid(format!("pivot {k} out of range for {n} items")));
        }
        for &(i, j) in &self.pairs {
            if i >= n || j >= n {
                return Err(invalid(format!("pair ({i}, {j}) out of range for {n} items")));
            }
            if i == j {
                return Err(invalid(format!("scope pair ({i}, {i}) is on the diagonal")));
            }
        }
        Ok(())
    }
}

/// Which constraints a projection exploits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scope {
    Full,
    Restricted(ProjectionScope),
}

/// Tightens upper bounds `u_tilde` into a hemimetric.
///
/// With [`Scope::Full`] the result is the elementwise-largest hemimetric
/// below `u_tilde`.
pub fn u_proj(u_tilde: &Matrix, scope: &Scope) -> Result<Matrix> {
    check_upper_input(u_tilde)?;
    let mut u = u_tilde.clone();
    match scope {
        Scope::Full => floyd_warshall_in_place(&mut u),
        Scope::Restricted(s) => {
            s.check(u.n())?;
            upper_scoped(&mut u, s.pivots(), s.pairs());
        }
    }
    Ok(u)
}

/// Lifts lower bounds `l_tilde` into `L(u)`.
///
/// `u` must already be a hemimetric (the output of [`u_proj`]). Fails when
/// `l_tilde` exceeds `u` anywhere, and reports the constraints as
/// infeasible if the lifted bounds cross `u`.
pub fn l_proj(l_tilde: &Matrix, u: &Matrix, scope: &Scope) -> Result<Matrix> {
    let n = l_tilde.n();
    if u.n() != n {
        return Err(invalid("lower and upper bounds differ in size"));
    }
    for i in 0..n {
        for j in 0..n {
            let l = l_tilde[(i, j)];
            if !l.is_finite() || l < 0.0 {
                return Err(invalid(format!("lower bound ({i}, {j}) = {l} is not a nonnegative number")));
            }
            if i == j && l != 0.0 {
                return Err(invalid(format!("nonzero lower bound on the diagonal at ({i}, {i})")));
            }
            if l > u[(i, j)] + TOL {
                return Err(invalid(format!(
                    "lower bound ({i}, {j}) = {l} exceeds upper bound {}",
                    u[(i, j)]
                )));
            }
        }
    }
    let mut l = l_tilde.clone();
    match scope {
        Scope::Full => lower_full(&mut l, u),
        Scope::Restricted(s) => {
            s.check(n)?;
            lower_scoped(&mut l, u, s.pivots(), s.pairs());
        }
    }
    if let Some((i, j)) = l.off_diagonal_pairs().find(|&(i, j)| l[(i, j)] > u[(i, j)] + TOL) {
        return Err(Error::Infeasible(format!(
            "lifted lower bound ({i}, {j}) = {} crosses upper bound {}",
            l[(i, j)],
            u[(i, j)]
        )));
    }
    Ok(l)
}

/// Upper projection followed by lower projection against the new upper
/// bounds.
pub fn lu_proj(l_tilde: &Matrix, u_tilde: &Matrix, scope: &Scope) -> Result<(Matrix, Matrix)> {
    let u = u_proj(u_tilde, scope)?;
    let l = l_proj(l_tilde, &u, scope)?;
    Ok((l, u))
}

fn check_upper_input(u: &Matrix) -> Result<()> {
    for i in 0..u.n() {
        for j in 0..u.n() {
            let v = u[(i, j)];
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!("upper bound ({i}, {j}) = {v} is not a nonnegative number")));
            }
            if i == j && v != 0.0 {
                return Err(invalid(format!("nonzero upper bound on the diagonal at ({i}, {i})")));
            }
        }
    }
    Ok(())
}

/// `u[i][j] = min(u[i][j], u[i][k] + u[k][j])` for each pivot, then pair.
pub(crate) fn upper_scoped(u: &mut Matrix, pivots: &[usize], pairs: &[(usize, usize)]) {
    for &k in pivots {
        for &(i, j) in pairs {
            let via = u[(i, k)] + u[(k, j)];
            if via < u[(i, j)] {
                u[(i, j)] = via;
            }
        }
    }
}

/// `l[i][j] = max(l[i][j], l[i][k] - u[j][k], l[k][j] - u[k][i])` for each
/// pivot, then pair.
pub(crate) fn lower_scoped(l: &mut Matrix, u: &Matrix, pivots: &[usize], pairs: &[(usize, usize)]) {
    for &k in pivots {
        for &(i, j) in pairs {
            let a = l[(i, k)] - u[(j, k)];
            let b = l[(k, j)] - u[(k, i)];
            let v = a.max(b);
            if v > l[(i, j)] {
                l[(i, j)] = v;
            }
        }
    }
}

/// Full lower relaxation over every pivot and pair, in loop order
/// `k`, `i`, `j`. Row and column `k` of `l` are fixed during pass `k`
/// (their update reduces to `max(x, x)`), so they are read from copies.
pub(crate) fn lower_full(l: &mut Matrix, u: &Matrix) {
    let n = l.n();
    let mut l_row_k = vec![0.0; n];
    let mut u_col_k = vec![0.0; n];
    for k in 0..n {
        l_row_k.copy_from_slice(l.row(k));
        for (j, slot) in u_col_k.iter_mut().enumerate() {
            *slot = u[(j, k)];
        }
        for i in 0..n {
            let l_ik = l[(i, k)];
            let u_ki = u[(k, i)];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let v = (l_ik - u_col_k[j]).max(l_row_k[j] - u_ki);
                if v > l[(i, j)] {
                    l[(i, j)] = v;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn u_proj_single_binding_path() {
        let ut = m(&[&[0.0, 1.0, 0.2], &[1.0, 0.0, 1.0], &[1.0, 0.2, 0.0]]);
        let u = u_proj(&ut, &Scope::Full).unwrap();
        let want = m(&[&[0.0, 0.4, 0.2], &[1.0, 0.0, 1.0], &[1.0, 0.2, 0.0]]);
        assert!(u.linf_distance(&want) < 1e-12);
    }

    #[test]
    fn u_proj_keeps_hemimetric() {
        let d = m(&[&[0.0, 1.0, 0.5], &[1.0, 0.0, 0.5], &[0.5, 0.5, 0.0]]);
        assert_eq!(u_proj(&d, &Scope::Full).unwrap(), d);
    }

    #[test]
    fn l_proj_counter_example_leaves_other_entries() {
        let u = Matrix::off_diagonal(3, 1.0);
        let mut lt = Matrix::zeros(3);
        lt[(0, 1)] = 0.5;
        assert_eq!(l_proj(&lt, &u, &Scope::Full).unwrap(), lt);
    }

    #[test]
    fn l_proj_single_constraint() {
        // 1-indexed: L[1][2] >= L[1][3] - U[2][3] = 0.8 - 0.2
        let mut u = Matrix::off_diagonal(3, 1.0);
        u[(1, 2)] = 0.2;
        let mut lt = Matrix::zeros(3);
        lt[(0, 2)] = 0.8;
        let l = l_proj(&lt, &u, &Scope::Full).unwrap();
        assert!((l[(0, 1)] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn l_proj_rejects_crossed_input() {
        let u = Matrix::off_diagonal(2, 0.5);
        let lt = Matrix::off_diagonal(2, 0.7);
        assert!(matches!(l_proj(&lt, &u, &Scope::Full), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn fresh_state_is_fixed_point() {
        let l = Matrix::zeros(4);
        let u = Matrix::off_diagonal(4, 1.0);
        let (l2, u2) = lu_proj(&l, &u, &Scope::Full).unwrap();
        assert_eq!((l2, u2), (l, u));
    }

    #[test]
    fn single_accept_does_not_propagate() {
        let l = Matrix::zeros(3);
        let mut u = Matrix::off_diagonal(3, 1.0);
        u[(0, 1)] = 0.5;
        let (l2, u2) = lu_proj(&l, &u, &Scope::Full).unwrap();
        assert_eq!(l2, l);
        assert_eq!(u2, u);
    }

    #[test]
    fn scope_validation() {
        let u = Matrix::off_diagonal(3, 1.0);
        let bad_pivot = Scope::Restricted(ProjectionScope::new(vec![3], vec![(0, 1)]));
        assert!(u_proj(&u, &bad_pivot).is_err());
        let diag_pair = Scope::Restricted(ProjectionScope::new(vec![0], vec![(1, 1)]));
        assert!(u_proj(&u, &diag_pair).is_err());
    }

    #[test]
    fn empty_scope_is_identity() {
        let mut u = Matrix::off_diagonal(3, 1.0);
        u[(0, 2)] = 0.1;
        u[(2, 1)] = 0.1;
        let lt = Matrix::zeros(3);
        let s = Scope::Restricted(ProjectionScope::default());
        let (l2, u2) = lu_proj(&lt, &u, &s).unwrap();
        assert_eq!(u2, u);
        assert_eq!(l2, lt);
    }

    #[test]
    fn everything_scope_matches_full() {
        let ut = m(&[
            &[0.0, 0.9, 0.1, 0.7],
            &[0.3, 0.0, 0.8, 0.2],
            &[0.6, 0.1, 0.0, 0.9],
            &[0.2, 0.5, 0.4, 0.0],
        ]);
        let mut lt = Matrix::zeros(4);
        lt[(0, 3)] = 0.3;
        lt[(2, 0)] = 0.3;
        let full = lu_proj(&lt, &ut, &Scope::Full).unwrap();
        let all = lu_proj(&lt, &ut, &Scope::Restricted(ProjectionScope::everything(4))).unwrap();
        assert_eq!(full, all);
    }
}
