//! Bounded hemimetrics: validation, decrease-only closure and the plain-text
//! instance format.
//!
//! A hemimetric is a nonnegative matrix with zero diagonal satisfying every
//! triangle inequality `d[i][j] <= d[i][k] + d[k][j]`; symmetry is not
//! required. The closure of a matrix `W` is the elementwise-largest
//! hemimetric below `W`, i.e. the all-pairs shortest-path matrix of `W`.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::matrix::{Matrix, TOL};

/// An `n x n` distance matrix with entries in `[0, r]` and zero diagonal.
///
/// Triangle inequalities are not enforced by the constructor; use
/// [`DistanceMatrix::violations`] or build through [`hemimetric_closure`].
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    r: f64,
    entries: Matrix,
}

impl DistanceMatrix {
    pub fn new(entries: Matrix, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(invalid(format!("distance bound r must be positive, got {r}")));
        }
        for i in 0..entries.n() {
            for j in 0..entries.n() {
                let v = entries[(i, j)];
                if !v.is_finite() {
                    return Err(invalid(format!("non-finite entry at ({i}, {j})")));
                }
                if i == j && v != 0.0 {
                    return Err(invalid(format!("nonzero diagonal entry at ({i}, {i})")));
                }
                if v < -TOL || v > r + TOL {
                    return Err(invalid(format!("entry ({i}, {j}) = {v} outside [0, {r}]")));
                }
            }
        }
        Ok(Self { r, entries })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], r: f64) -> Result<Self> {
        let m = Matrix::from_rows(rows).ok_or_else(|| invalid("rows do not form a square matrix"))?;
        Self::new(m, r)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.entries.n()
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.r
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn into_entries(self) -> Matrix {
        self.entries
    }

    pub fn violations(&self) -> Vec<Violation> {
        validate_hemimetric(&self.entries, self.r)
    }

    pub fn is_hemimetric(&self) -> bool {
        self.violations().is_empty()
    }

    /// Restriction to the first `m` items.
    pub fn prefix(&self, m: usize) -> Self {
        Self {
            r: self.r,
            entries: self.entries.prefix(m),
        }
    }

    /// Restriction to the listed items, in the given order.
    pub fn select(&self, items: &[usize]) -> Self {
        Self {
            r: self.r,
            entries: Matrix::from_fn(items.len(), |a, b| self.get(items[a], items[b])),
        }
    }
}

/// A single failed hemimetric constraint.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Negative { i: usize, j: usize, value: f64 },
    NonzeroDiagonal { i: usize, value: f64 },
    ExceedsBound { i: usize, j: usize, value: f64 },
    /// `m[i][j] > m[i][k] + m[k][j]` by `excess`.
    Triangle { i: usize, k: usize, j: usize, excess: f64 },
    NonFinite { i: usize, j: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Negative { i, j, value } => write!(f, "negative entry ({i}, {j}) = {value}"),
            Violation::NonzeroDiagonal { i, value } => write!(f, "diagonal ({i}, {i}) = {value}"),
            Violation::ExceedsBound { i, j, value } => write!(f, "entry ({i}, {j}) = {value} exceeds r"),
            Violation::Triangle { i, k, j, excess } => {
                write!(f, "triangle ({i}, {k}, {j}) violated by {excess}")
            }
            Violation::NonFinite { i, j } => write!(f, "non-finite entry ({i}, {j})"),
        }
    }
}

/// Lists every violated hemimetric constraint of `m` with bound `r`,
/// using absolute tolerance [`TOL`].
pub fn validate_hemimetric(m: &Matrix, r: f64) -> Vec<Violation> {
    let n = m.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            if !v.is_finite() {
                out.push(Violation::NonFinite { i, j });
                continue;
            }
            if i == j {
                if v.abs() > TOL {
                    out.push(Violation::NonzeroDiagonal { i, value: v });
                }
                continue;
            }
            if v < -TOL {
                out.push(Violation::Negative { i, j, value: v });
            }
            if v > r + TOL {
                out.push(Violation::ExceedsBound { i, j, value: v });
            }
        }
    }
    for i in 0..n {
        for k in 0..n {
            let ik = m[(i, k)];
            for j in 0..n {
                let excess = m[(i, j)] - (ik + m[(k, j)]);
                if excess > TOL {
                    out.push(Violation::Triangle { i, k, j, excess });
                }
            }
        }
    }
    out
}

/// Relaxes `m` in place through every pivot `k` in ascending order:
/// `m[i][j] = min(m[i][j], m[i][k] + m[k][j])`.
///
/// Row `k` is invariant during pass `k` when the diagonal is zero, so it is
/// read from a copy.
pub(crate) fn floyd_warshall_in_place(m: &mut Matrix) {
    let n = m.n();
    let mut pivot_row = vec![0.0; n];
    for k in 0..n {
        pivot_row.copy_from_slice(m.row(k));
        for i in 0..n {
            if i == k {
                continue;
            }
            let ik = m[(i, k)];
            for (j, &kj) in pivot_row.iter().enumerate() {
                let via = ik + kj;
                if via < m[(i, j)] {
                    m[(i, j)] = via;
                }
            }
        }
    }
}

/// The elementwise-largest hemimetric below `clamp(w, 0, r)`.
///
/// Fails on negative entries or a nonzero diagonal.
pub fn hemimetric_closure(w: &Matrix, r: f64) -> Result<DistanceMatrix> {
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid(format!("distance bound r must be positive, got {r}")));
    }
    let n = w.n();
    for i in 0..n {
        for j in 0..n {
            let v = w[(i, j)];
            if !v.is_finite() {
                return Err(invalid(format!("non-finite entry at ({i}, {j})")));
            }
            if v < 0.0 {
                return Err(invalid(format!("negative entry {v} at ({i}, {j})")));
            }
            if i == j && v != 0.0 {
                return Err(invalid(format!("nonzero diagonal entry {v} at ({i}, {i})")));
            }
        }
    }
    let mut m = w.map(|v| v.min(r));
    floyd_warshall_in_place(&mut m);
    Ok(DistanceMatrix { r, entries: m })
}

/// Formats `v` with 12 significant digits, trailing zeros trimmed.
pub fn format_decimal(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".to_string() } else { v.to_string() };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

/// Writes the instance format: a `# hemimetric n=<n> r=<r>` header line and
/// one comma-separated row per item.
pub fn write_instance<W: Write>(mut out: W, d: &DistanceMatrix) -> Result<()> {
    writeln!(out, "# hemimetric n={} r={}", d.n(), format_decimal(d.r()))?;
    for row in d.entries().rows() {
        let line: Vec<String> = row.iter().map(|&v| format_decimal(v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn save_instance(path: impl AsRef<Path>, d: &DistanceMatrix) -> Result<()> {
    let file = fs::File::create(path.as_ref())?;
    let mut w = std::io::BufWriter::new(file);
    write_instance(&mut w, d)?;
    w.flush()?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<DistanceMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path)?;
    read_instance(file, path)
}

/// Parses the instance format; `origin` only labels error messages.
pub fn read_instance<R: Read>(input: R, origin: &Path) -> Result<DistanceMatrix> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(input).lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| parse_err(1, "empty instance file".into()))?;
    let (n, r) = parse_header(&header).ok_or_else(|| {
        parse_err(1, format!("expected `# hemimetric n=<n> r=<r>`, got `{header}`"))
    })?;
    let mut rows = Vec::with_capacity(n);
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let lineno = idx as u64 + 2;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| parse_err(lineno, format!("bad number: {e}")))?;
        if row.len() != n {
            return Err(parse_err(lineno, format!("expected {n} values, found {}", row.len())));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(parse_err(0, format!("expected {n} rows, found {}", rows.len())));
    }
    DistanceMatrix::from_rows(&rows, r)
}

fn parse_header(line: &str) -> Option<(usize, f64)> {
    let rest = line.trim().strip_prefix('#')?.trim();
    let rest = rest.strip_prefix("hemimetric")?;
    let mut n = None;
    let mut r = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("n=") {
            n = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("r=") {
            r = v.parse().ok();
        }
    }
    Some((n?, r?))
}
