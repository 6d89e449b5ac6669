use std::fmt;

use crate::matrix::{Matrix, TOL};
use crate::metric::{validate_hemimetric, Violation};

/// One failed optimality condition.
#[derive(Clone, Debug, PartialEq)]
pub enum CertificateIssue {
    ShapeMismatch,
    UpperNotHemimetric(Violation),
    UpperAboveInput { i: usize, j: usize },
    LowerBelowInput { i: usize, j: usize },
    LowerAboveUpper { i: usize, j: usize },
    /// `L[i][j] < L[i][k] - U[j][k]` or `L[i][j] < L[k][j] - U[k][i]`.
    LowerNotClosed { i: usize, k: usize, j: usize },
    NonzeroLowerDiagonal { i: usize },
    /// Decreased below the input with no pivot path attaining it.
    UnsupportedUpper { i: usize, j: usize },
    /// Increased above the input with no pivot constraint attaining it.
    UnsupportedLower { i: usize, j: usize },
}

impl fmt::Display for CertificateIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ShapeMismatch => write!(f, "matrix shapes differ"),
            Self::UpperNotHemimetric(v) => write!(f, "upper bounds are not a hemimetric: {v}"),
            Self::UpperAboveInput { i, j } => write!(f, "upper ({i}, {j}) exceeds its input"),
            Self::LowerBelowInput { i, j } => write!(f, "lower ({i}, {j}) is below its input"),
            Self::LowerAboveUpper { i, j } => write!(f, "lower ({i}, {j}) exceeds upper"),
            Self::LowerNotClosed { i, k, j } => {
                write!(f, "lower ({i}, {j}) violates its constraint through pivot {k}")
            }
            Self::NonzeroLowerDiagonal { i } => write!(f, "lower ({i}, {i}) is nonzero"),
            Self::UnsupportedUpper { i, j } => write!(f, "upper ({i}, {j}) has no supporting pivot"),
            Self::UnsupportedLower { i, j } => write!(f, "lower ({i}, {j}) has no supporting pivot"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CertificateReport {
    pub issues: Vec<CertificateIssue>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }

    /// Pairs whose change has no pivot support, in either bound.
    pub fn unsupported(&self) -> Vec<(usize, usize)> {
        self.issues
            .iter()
            .filter_map(|issue| match *issue {
                CertificateIssue::UnsupportedUpper { i, j }
                | CertificateIssue::UnsupportedLower { i, j } => Some((i, j)),
                _ => None,
            })
            .collect()
    }
}

/// Checks that `(l, u)` is the optimal tightening of `(l_tilde, u_tilde)`.
///
/// Besides feasibility (`u` a hemimetric below `u_tilde`, `l` in the lower
/// class of `u` and above `l_tilde`), each changed entry must be attained by
/// some pivot `k` distinct from `i` and `j`.
pub fn certificate_check(l_tilde: &Matrix, u_tilde: &Matrix, l: &Matrix, u: &Matrix) -> CertificateReport {
    let n = l_tilde.n();
    let mut issues = Vec::new();
    if u_tilde.n() != n || l.n() != n || u.n() != n {
        issues.push(CertificateIssue::ShapeMismatch);
        return CertificateReport { issues };
    }
    issues.extend(
        validate_hemimetric(u, f64::INFINITY)
            .into_iter()
            .map(CertificateIssue::UpperNotHemimetric),
    );
    for i in 0..n {
        if l[(i, i)].abs() > TOL {
            issues.push(CertificateIssue::NonzeroLowerDiagonal { i });
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (lij, uij) = (l[(i, j)], u[(i, j)]);
            if uij > u_tilde[(i, j)] + TOL {
                issues.push(CertificateIssue::UpperAboveInput { i, j });
            }
            if lij < l_tilde[(i, j)] - TOL {
                issues.push(CertificateIssue::LowerBelowInput { i, j });
            }
            if lij > uij + TOL {
                issues.push(CertificateIssue::LowerAboveUpper { i, j });
            }
            for k in 0..n {
                if lij < l[(i, k)] - u[(j, k)] - TOL || lij < l[(k, j)] - u[(k, i)] - TOL {
                    issues.push(CertificateIssue::LowerNotClosed { i, k, j });
                }
            }
            let pivots = || (0..n).filter(move |&k| k != i && k != j);
            let upper_ok = (uij - u_tilde[(i, j)]).abs() <= TOL
                || pivots().any(|k| (uij - (u[(i, k)] + u[(k, j)])).abs() <= TOL);
            if !upper_ok {
                issues.push(CertificateIssue::UnsupportedUpper { i, j });
            }
            let lower_ok = (lij - l_tilde[(i, j)]).abs() <= TOL
                || pivots().any(|k| {
                    let support = (l[(i, k)] - u[(j, k)]).max(l[(k, j)] - u[(k, i)]);
                    (lij - support).abs() <= TOL
                });
            if !lower_ok {
                issues.push(CertificateIssue::UnsupportedLower { i, j });
            }
        }
    }
    CertificateReport { issues }
}
