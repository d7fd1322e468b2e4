//! Orthonormal bases of `(P_k, L^2(mu))` and the reproducing kernel
//! `K_k(x, y) = sum_j phi_j(x) phi_j(y)` with its diagonal `beta_k(x)`.
//!
//! The default construction is a pivoted Cholesky factorisation of the
//! exact-moment Gram matrix in graded-lex monomials. Pivoting is restricted
//! to each total-degree block, so the first `dim P_j` basis functions span
//! `P_j` for every `j <= k` and a single space carries the whole kernel
//! ladder `K_0, .., K_k`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::measures::{enumerate_multiindices, poly_dim, Domain, Measure, MultiIndex};
use crate::quadrature::JacobiRecurrence;

/// Relative pivot threshold for the double-precision assembly.
pub const PIVOT_THRESHOLD_DOUBLE: f64 = 1e-13;
/// Relative pivot threshold for the double-double assembly.
pub const PIVOT_THRESHOLD_EXTENDED: f64 = 1e-28;
/// Smallest relative pivot at which `BasisPath::Auto` trusts a monomial
/// basis: the orthonormality error is about the unit roundoff divided by
/// this ratio.
fn accurate_pivot(precision: Precision) -> f64 {
    match precision {
        Precision::Double => 1e-6,
        Precision::Extended => 1e-18,
    }
}
/// Degree cap of the recurrence path (bounded by the Gauss rule size).
pub const RECURRENCE_DEGREE_CAP: usize = 2000;

/// Arithmetic used to assemble and evaluate the monomial basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    Extended,
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "double" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            other => Err(Error::InvalidInput(format!(
                "unknown precision \"{other}\" (expected double or extended)"
            ))),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::Double => "double",
            Precision::Extended => "extended",
        })
    }
}

/// How the orthonormal basis is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisPath {
    /// Monomial Cholesky while its pivots guarantee accuracy; otherwise
    /// double-double (`n >= 2`) or the recurrence (one-dimensional ball).
    #[default]
    Auto,
    Monomial,
    /// Three-term Gegenbauer recurrence (one-dimensional ball only).
    Recurrence,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BasisOptions {
    pub precision: Precision,
    pub path: BasisPath,
    /// Overrides the default degree cap of the monomial path.
    pub degree_cap: Option<usize>,
}

impl BasisOptions {
    pub fn extended() -> Self {
        Self {
            precision: Precision::Extended,
            ..Self::default()
        }
    }
}

/// Default degree cap of the monomial path.
pub fn default_degree_cap(n: usize, precision: Precision) -> usize {
    match (precision, n) {
        (Precision::Double, 1) => 40,
        (Precision::Double, 2) => 25,
        (Precision::Double, 3) => 15,
        (Precision::Double, _) => 8,
        (Precision::Extended, 1) => 60,
        (Precision::Extended, 2) => 40,
        (Precision::Extended, 3) => 24,
        (Precision::Extended, _) => 12,
    }
}

#[derive(Debug, Clone)]
enum Coeffs {
    Double(Vec<f64>),
    Extended(Vec<TwoFloat>),
}

#[derive(Debug, Clone)]
enum Repr {
    Monomial {
        indices: Vec<MultiIndex>,
        /// Row-major `dim x dim`; row `i` is `phi_i` in graded-lex columns.
        coeffs: Coeffs,
        /// `row_len[i]`: columns past this are zero in row `i`.
        row_len: Vec<usize>,
    },
    Recurrence(JacobiRecurrence),
}

/// `beta_k(x) = K_k(x, x)` and the Christoffel function `1 / beta_k(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Christoffel {
    pub beta: f64,
    pub inv_beta: f64,
}

/// The reproducing-kernel Hilbert space `(P_k, L^2(mu))` with an explicit
/// orthonormal basis.
#[derive(Debug, Clone)]
pub struct PolySpace {
    measure: Measure,
    k: usize,
    dim: usize,
    precision: Precision,
    path: BasisPath,
    /// Smallest Cholesky pivot relative to the largest (1 on the recurrence path).
    pivot_ratio: f64,
    repr: Repr,
}

/// Builds the orthonormal basis of `(P_k, L^2(m))` with default options.
pub fn orthonormal_basis(m: &Measure, k: usize) -> Result<PolySpace> {
    PolySpace::new(m, k, BasisOptions::default())
}

impl PolySpace {
    pub fn new(m: &Measure, k: usize, opts: BasisOptions) -> Result<Self> {
        match opts.path {
            BasisPath::Recurrence => {
                let a = match (m.domain(), m.n()) {
                    (Domain::Ball { a }, 1) => *a,
                    _ => {
                        return Err(Error::InvalidInput(
                            "the recurrence path exists only for the one-dimensional ball".into(),
                        ))
                    }
                };
                Self::gegenbauer_with(m.clone(), a, k, opts.precision)
            }
            BasisPath::Monomial => Self::monomial(m, k, opts),
            BasisPath::Auto => Self::auto(m, k, opts),
        }
    }

    /// Picks the cheapest construction whose estimated orthonormality error
    /// (unit roundoff over the smallest relative pivot) stays near `1e-10`:
    /// the monomial path in the requested precision, else double-double
    /// (`n >= 2`), else the recurrence (one-dimensional ball).
    fn auto(m: &Measure, k: usize, opts: BasisOptions) -> Result<Self> {
        let accurate = |ps: &Self| ps.pivot_ratio >= accurate_pivot(ps.precision);
        if m.n() == 1 && m.is_ball() {
            let a = m.ball_exponent().unwrap_or(0.5);
            let cap = opts
                .degree_cap
                .unwrap_or_else(|| default_degree_cap(1, opts.precision));
            if k <= cap {
                match Self::monomial(m, k, opts) {
                    Ok(ps) if accurate(&ps) => return Ok(ps),
                    Ok(_) | Err(Error::GramSingular { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            return Self::gegenbauer_with(m.clone(), a, k, opts.precision);
        }
        let upgrade = BasisOptions {
            precision: Precision::Extended,
            ..opts
        };
        if opts.precision == Precision::Double {
            let cap = opts
                .degree_cap
                .unwrap_or_else(|| default_degree_cap(m.n(), Precision::Double));
            if k > cap {
                return Self::monomial(m, k, upgrade);
            }
            return match Self::monomial(m, k, opts) {
                Ok(ps) if accurate(&ps) => Ok(ps),
                Ok(_) | Err(Error::GramSingular { .. }) => Self::monomial(m, k, upgrade),
                Err(e) => Err(e),
            };
        }
        Self::monomial(m, k, opts)
    }

    /// Orthonormal Gegenbauer basis for `(1-x^2)^(a-1/2)` on `[-1, 1]` from
    /// the three-term recurrence.
    pub fn gegenbauer(a: f64, k: usize) -> Result<Self> {
        Self::gegenbauer_with(Measure::ball(1, a)?, a, k, Precision::Double)
    }

    fn gegenbauer_with(m: Measure, a: f64, k: usize, precision: Precision) -> Result<Self> {
        if k > RECURRENCE_DEGREE_CAP {
            return Err(Error::DegreeTooLarge {
                k,
                cap: RECURRENCE_DEGREE_CAP,
            });
        }
        let rec = JacobiRecurrence::new(k, a - 0.5, a - 0.5)?;
        Ok(Self {
            measure: m,
            k,
            dim: k + 1,
            precision,
            path: BasisPath::Recurrence,
            pivot_ratio: 1.0,
            repr: Repr::Recurrence(rec),
        })
    }

    fn monomial(m: &Measure, k: usize, opts: BasisOptions) -> Result<Self> {
        let n = m.n();
        let cap = opts
            .degree_cap
            .unwrap_or_else(|| default_degree_cap(n, opts.precision));
        if k > cap {
            return Err(Error::DegreeTooLarge { k, cap });
        }
        let indices = enumerate_multiindices(n, k);
        let dim = indices.len();
        let block_end: Vec<usize> = indices.iter().map(|a| poly_dim(n, a.degree())).collect();

        let mut sums: HashMap<MultiIndex, usize> = HashMap::new();
        let mut gram_index = vec![0usize; dim * dim];
        let mut distinct: Vec<MultiIndex> = Vec::new();
        for i in 0..dim {
            for j in 0..=i {
                let s = MultiIndex(
                    indices[i]
                        .0
                        .iter()
                        .zip(&indices[j].0)
                        .map(|(a, b)| a + b)
                        .collect(),
                );
                let id = *sums.entry(s.clone()).or_insert_with(|| {
                    distinct.push(s);
                    distinct.len() - 1
                });
                gram_index[i * dim + j] = id;
                gram_index[j * dim + i] = id;
            }
        }

        let (coeffs, ratio) = match opts.precision {
            Precision::Double => {
                let values = distinct
                    .iter()
                    .map(|s| m.moment(s))
                    .collect::<Result<Vec<f64>>>()?;
                let gram: Vec<f64> = gram_index.iter().map(|&id| values[id]).collect();
                let (c, r) = graded_cholesky_inverse(&gram, dim, &block_end, PIVOT_THRESHOLD_DOUBLE)
                    .map_err(|ratio| Error::GramSingular {
                        k,
                        ratio,
                        threshold: PIVOT_THRESHOLD_DOUBLE,
                    })?;
                (Coeffs::Double(c), r)
            }
            Precision::Extended => {
                let values: Vec<TwoFloat> = distinct.iter().map(|s| m.moment_dd(s)).collect();
                let gram: Vec<TwoFloat> = gram_index.iter().map(|&id| values[id]).collect();
                let (c, r) =
                    graded_cholesky_inverse(&gram, dim, &block_end, PIVOT_THRESHOLD_EXTENDED)
                        .map_err(|ratio| Error::GramSingular {
                            k,
                            ratio,
                            threshold: PIVOT_THRESHOLD_EXTENDED,
                        })?;
                (Coeffs::Extended(c), r)
            }
        };
        Ok(Self {
            measure: m.clone(),
            k,
            dim,
            precision: opts.precision,
            path: BasisPath::Monomial,
            pivot_ratio: ratio,
            repr: Repr::Monomial {
                indices,
                coeffs,
                row_len: block_end,
            },
        })
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn n(&self) -> usize {
        self.measure.n()
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `dim P_j`; the first `dim_at(j)` basis functions span `P_j`.
    pub fn dim_at(&self, j: usize) -> usize {
        poly_dim(self.n(), j.min(self.k))
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// Path actually used (never `Auto`).
    pub fn path(&self) -> BasisPath {
        self.path
    }

    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    /// Values `phi_0(x), .., phi_{dim-1}(x)`.
    pub fn basis_values(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.basis_values_into(x, &mut out);
        out
    }

    pub fn basis_values_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n());
        match &self.repr {
            Repr::Recurrence(rec) => rec.values_into(x[0], &mut out[..self.dim]),
            Repr::Monomial {
                indices,
                coeffs,
                row_len,
            } => match coeffs {
                Coeffs::Double(c) => {
                    let mono = monomials_f64(indices, x, self.k);
                    for (i, o) in out.iter_mut().enumerate().take(self.dim) {
                        let row = &c[i * self.dim..i * self.dim + row_len[i]];
                        *o = row.iter().zip(&mono).map(|(a, b)| a * b).sum();
                    }
                }
                Coeffs::Extended(c) => {
                    let mono = monomials_dd(indices, x, self.k);
                    for (i, o) in out.iter_mut().enumerate().take(self.dim) {
                        let row = &c[i * self.dim..i * self.dim + row_len[i]];
                        let mut acc = TwoFloat::from(0.0);
                        for (a, b) in row.iter().zip(&mono) {
                            acc += *a * *b;
                        }
                        *o = acc.hi() + acc.lo();
                    }
                }
            },
        }
    }

    /// `K_k(x, y)`.
    pub fn kernel(&self, x: &[f64], y: &[f64]) -> f64 {
        self.kernel_upto(self.k, x, y)
    }

    /// `K_j(x, y)` for `j <= k`, from the leading part of the graded basis.
    pub fn kernel_upto(&self, j: usize, x: &[f64], y: &[f64]) -> f64 {
        let d = self.dim_at(j);
        let px = self.basis_values(x);
        if x == y {
            return px[..d].iter().map(|v| v * v).sum();
        }
        let py = self.basis_values(y);
        px[..d].iter().zip(&py[..d]).map(|(a, b)| a * b).sum()
    }

    pub fn christoffel(&self, x: &[f64]) -> Christoffel {
        self.christoffel_upto(self.k, x)
    }

    pub fn christoffel_upto(&self, j: usize, x: &[f64]) -> Christoffel {
        let beta = self.kernel_upto(j, x, x);
        Christoffel {
            beta,
            inv_beta: 1.0 / beta,
        }
    }

    /// Basis values at each point, one row per point.
    pub fn basis_rows(&self, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        points.par_iter().map(|p| self.basis_values(p)).collect()
    }

    /// `[K_k(x_i, y_j)]`.
    pub fn kernel_matrix(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let bx = self.basis_rows(xs);
        let by = self.basis_rows(ys);
        bx.par_iter()
            .map(|u| by.iter().map(|v| dot(u, v)).collect())
            .collect()
    }

    /// Monomial coefficients of each basis function, graded-lex columns.
    pub fn coefficient_matrix(&self) -> (Vec<MultiIndex>, Vec<Vec<f64>>) {
        match &self.repr {
            Repr::Monomial {
                indices, coeffs, ..
            } => {
                let rows = (0..self.dim)
                    .map(|i| match coeffs {
                        Coeffs::Double(c) => c[i * self.dim..(i + 1) * self.dim].to_vec(),
                        Coeffs::Extended(c) => c[i * self.dim..(i + 1) * self.dim]
                            .iter()
                            .map(|v| v.hi() + v.lo())
                            .collect(),
                    })
                    .collect();
                (indices.clone(), rows)
            }
            Repr::Recurrence(rec) => {
                let indices = enumerate_multiindices(1, self.k);
                let d = self.dim;
                let mut rows = vec![vec![0.0; d]; d];
                rows[0][0] = 1.0 / rec.mass.sqrt();
                for j in 0..d - 1 {
                    for c in 0..d {
                        let mut v = -rec.diag[j] * rows[j][c];
                        if c > 0 {
                            v += rows[j][c - 1];
                        }
                        if j > 0 {
                            v -= rec.off[j] * rows[j - 1][c];
                        }
                        rows[j + 1][c] = v / rec.off[j + 1];
                    }
                }
                (indices, rows)
            }
        }
    }

    /// CSV export: one row per basis function, one column per monomial.
    pub fn to_csv(&self) -> String {
        let (indices, rows) = self.coefficient_matrix();
        let mut out = String::from("basis");
        for idx in &indices {
            out.push(',');
            out.push_str(&idx.to_string());
        }
        out.push('\n');
        for (i, row) in rows.iter().enumerate() {
            out.push_str(&format!("phi{i}"));
            for v in row {
                out.push(',');
                out.push_str(&crate::report::fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    /// `max |<phi_i, phi_j>_mu - delta_ij|`, by a quadrature exact in degree
    /// `2k`.
    pub fn orthonormality_defect(&self) -> Result<f64> {
        let rule = self.measure.rule(2 * self.k)?;
        let d = self.dim;
        let mut gram = vec![0.0; d * d];
        for (x, w) in rule.iter() {
            let v = self.basis_values(x);
            for i in 0..d {
                let wi = w * v[i];
                for j in 0..=i {
                    gram[i * d + j] += wi * v[j];
                }
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..=i {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[i * d + j] - target).abs());
            }
        }
        Ok(worst)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `K_k(x, y)` with a domain check on both points.
pub fn kernel_eval(ps: &PolySpace, x: &[f64], y: &[f64]) -> Result<f64> {
    ps.measure().check_point(x)?;
    ps.measure().check_point(y)?;
    Ok(ps.kernel(x, y))
}

/// `beta_k(x)` and `1 / beta_k(x)` with a domain check.
pub fn christoffel(ps: &PolySpace, x: &[f64]) -> Result<Christoffel> {
    ps.measure().check_point(x)?;
    Ok(ps.christoffel(x))
}

fn power_table(x: &[f64], k: usize) -> Vec<Vec<f64>> {
    x.iter()
        .map(|&v| {
            let mut p = Vec::with_capacity(k + 1);
            let mut acc = 1.0;
            for _ in 0..=k {
                p.push(acc);
                acc *= v;
            }
            p
        })
        .collect()
}

fn monomials_f64(indices: &[MultiIndex], x: &[f64], k: usize) -> Vec<f64> {
    let pow = power_table(x, k);
    indices
        .iter()
        .map(|a| {
            a.0.iter()
                .enumerate()
                .map(|(i, &e)| pow[i][e as usize])
                .product()
        })
        .collect()
}

fn monomials_dd(indices: &[MultiIndex], x: &[f64], k: usize) -> Vec<TwoFloat> {
    let pow: Vec<Vec<TwoFloat>> = x
        .iter()
        .map(|&v| {
            let mut p = Vec::with_capacity(k + 1);
            let mut acc = TwoFloat::from(1.0);
            for _ in 0..=k {
                p.push(acc);
                acc *= v;
            }
            p
        })
        .collect();
    indices
        .iter()
        .map(|a| {
            let mut acc = TwoFloat::from(1.0);
            for (i, &e) in a.0.iter().enumerate() {
                if e > 0 {
                    acc *= pow[i][e as usize];
                }
            }
            acc
        })
        .collect()
}

/// Arithmetic shared by the double and double-double factorisations.
trait Real:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
{
    fn zero() -> Self;
    fn div(self, rhs: Self) -> Self;
    fn one() -> Self;
    fn sqrt(self) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn div(self, rhs: Self) -> Self {
        self / rhs
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for TwoFloat {
    fn zero() -> Self {
        TwoFloat::from(0.0)
    }
    fn one() -> Self {
        TwoFloat::from(1.0)
    }
    fn div(self, rhs: Self) -> Self {
        crate::dd::div(self, rhs)
    }
    fn sqrt(self) -> Self {
        TwoFloat::sqrt(self)
    }
    fn to_f64(self) -> f64 {
        self.hi() + self.lo()
    }
}

/// Pivoted Cholesky `P G P^T = L L^T` with pivots chosen inside each degree
/// block, followed by `C = L^{-1}`. Returns `C` scattered back to graded-lex
/// columns (row-major `dim x dim`) and the smallest relative pivot, or the
/// offending relative pivot when it drops below `threshold`.
fn graded_cholesky_inverse<T: Real>(
    gram: &[T],
    dim: usize,
    block_end: &[usize],
    threshold: f64,
) -> std::result::Result<(Vec<T>, f64), f64> {
    let mut perm: Vec<usize> = (0..dim).collect();
    let mut resid: Vec<T> = (0..dim).map(|i| gram[i * dim + i]).collect();
    let mut l = vec![T::zero(); dim * dim];
    let mut max_pivot: f64 = 0.0;
    let mut min_ratio: f64 = 1.0;

    for s in 0..dim {
        let end = block_end[perm[s]].max(s + 1);
        let mut best = s;
        for q in s + 1..end {
            if resid[perm[q]].to_f64() > resid[perm[best]].to_f64() {
                best = q;
            }
        }
        if best != s {
            perm.swap(s, best);
            for c in 0..s {
                l.swap(s * dim + c, best * dim + c);
            }
        }
        let pivot = resid[perm[s]];
        let pf = pivot.to_f64();
        max_pivot = max_pivot.max(pf);
        let ratio = if max_pivot > 0.0 { pf / max_pivot } else { 0.0 };
        if !(ratio > threshold) {
            return Err(ratio);
        }
        min_ratio = min_ratio.min(ratio);
        let root = pivot.sqrt();
        l[s * dim + s] = root;
        let ps = perm[s];
        for r in s + 1..dim {
            let pr = perm[r];
            let mut v = gram[pr * dim + ps];
            for c in 0..s {
                v = v - l[r * dim + c] * l[s * dim + c];
            }
            let lrs = v.div(root);
            l[r * dim + s] = lrs;
            resid[pr] = resid[pr] - lrs * lrs;
        }
    }

    // forward substitution for C = L^{-1}
    let mut inv = vec![T::zero(); dim * dim];
    for i in 0..dim {
        let lii = l[i * dim + i];
        inv[i * dim + i] = T::one().div(lii);
        for j in 0..i {
            let mut acc = T::zero();
            for t in j..i {
                acc = acc + l[i * dim + t] * inv[t * dim + j];
            }
            inv[i * dim + j] = (T::zero() - acc).div(lii);
        }
    }
    let mut out = vec![T::zero(); dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            out[i * dim + perm[j]] = inv[i * dim + j];
        }
    }
    Ok((out, min_ratio))
}

/// One row of the diagonal-estimate table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalRow {
    pub k: usize,
    pub x: Vec<f64>,
    pub boundary_distance: f64,
    pub beta: f64,
    pub reference: f64,
    pub ratio: f64,
    /// Box domains: the point is close to two or more faces at once.
    pub near_corner: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalSummary {
    pub k: usize,
    pub min: f64,
    pub max: f64,
    /// `max / min` over the grid.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalTable {
    pub exponent: f64,
    pub rows: Vec<DiagonalRow>,
    pub per_k: Vec<DiagonalSummary>,
    pub min: f64,
    pub max: f64,
}

/// Ratios `beta_k(x) / min(k^n / d(x)^e, k^(n + 2e))` with `d` the distance
/// to the boundary and `e` the effective exponent (`a` on the ball, `1/2`
/// for Lebesgue measure). `k = 0` is evaluated with `k` replaced by 1 so the
/// reference stays positive.
pub fn diagonal_estimate_ratio(spaces: &[PolySpace], grid: &[Vec<f64>]) -> Result<DiagonalTable> {
    let first = spaces
        .first()
        .ok_or_else(|| Error::InvalidInput("need at least one degree".into()))?;
    let m = first.measure().clone();
    let e = m.effective_exponent();
    let n = m.n() as i32;
    for x in grid {
        m.check_point(x)?;
    }
    let mut rows = Vec::new();
    let mut per_k = Vec::new();
    for ps in spaces {
        if ps.measure() != &m {
            return Err(Error::InvalidInput("all spaces must share one measure".into()));
        }
        let k = ps.degree().max(1) as f64;
        let level: Vec<DiagonalRow> = grid
            .par_iter()
            .map(|x| {
                let d = crate::geometry::boundary_distance(&m, x);
                let beta = ps.christoffel(x).beta;
                let reference = (k.powi(n) / d.powf(e)).min(k.powf(n as f64 + 2.0 * e));
                DiagonalRow {
                    k: ps.degree(),
                    x: x.clone(),
                    boundary_distance: d,
                    beta,
                    reference,
                    ratio: beta / reference,
                    near_corner: crate::geometry::near_corner(&m, x),
                }
            })
            .collect();
        let min = level.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        let max = level.iter().map(|r| r.ratio).fold(0.0, f64::max);
        per_k.push(DiagonalSummary {
            k: ps.degree(),
            min,
            max,
            spread: max / min,
        });
        rows.extend(level);
    }
    let min = per_k.iter().map(|s| s.min).fold(f64::INFINITY, f64::min);
    let max = per_k.iter().map(|s| s.max).fold(0.0, f64::max);
    Ok(DiagonalTable {
        exponent: e,
        rows,
        per_k,
        min,
        max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn legendre() -> Measure {
        Measure::ball(1, 0.5).unwrap()
    }

    #[test]
    fn degree_zero_basis() {
        let ps = orthonormal_basis(&legendre(), 0).unwrap();
        assert_abs_diff_eq!(ps.basis_values(&[0.3])[0], 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(ps.kernel(&[0.1], &[-0.7]), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ps.christoffel(&[0.0]).beta, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn degree_one_basis() {
        // hand Gram-Schmidt on {1, x}: phi_1 = sqrt(3/2) x
        let ps = orthonormal_basis(&legendre(), 1).unwrap();
        let (_, rows) = ps.coefficient_matrix();
        assert_abs_diff_eq!(rows[1][0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rows[1][1], 1.5f64.sqrt(), epsilon = 1e-15);
        for (x, y) in [(0.3, -0.4), (1.0, 1.0), (-0.2, 0.9)] {
            assert_abs_diff_eq!(ps.kernel(&[x], &[y]), 0.5 + 1.5 * x * y, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(ps.christoffel(&[1.0]).beta, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn disk_degree_one_orthonormal() {
        let ps = orthonormal_basis(&Measure::ball(2, 0.5).unwrap(), 1).unwrap();
        assert_eq!(ps.dim(), 3);
        assert!(ps.orthonormality_defect().unwrap() < 1e-14);
    }

    #[test]
    fn recurrence_matches_monomial_path() {
        for a in [0.0, 0.5, 1.0, 2.5] {
            let m = Measure::ball(1, a).unwrap();
            let mono = PolySpace::new(
                &m,
                12,
                BasisOptions {
                    path: BasisPath::Monomial,
                    precision: Precision::Extended,
                    ..Default::default()
                },
            )
            .unwrap();
            let rec = PolySpace::gegenbauer(a, 12).unwrap();
            for x in [-0.95, -0.3, 0.0, 0.41, 1.0] {
                let b1 = mono.christoffel(&[x]).beta;
                let b2 = rec.christoffel(&[x]).beta;
                assert!((b1 - b2).abs() <= 1e-11 * b2, "a={a} x={x}: {b1} vs {b2}");
                assert!((mono.kernel(&[x], &[0.2]) - rec.kernel(&[x], &[0.2])).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn recurrence_coefficients_match_monomial_coefficients() {
        let m = Measure::ball(1, 1.0).unwrap();
        let mono = PolySpace::new(
            &m,
            6,
            BasisOptions {
                path: BasisPath::Monomial,
                ..Default::default()
            },
        )
        .unwrap();
        let rec = PolySpace::gegenbauer(1.0, 6).unwrap();
        let (_, a) = mono.coefficient_matrix();
        let (_, b) = rec.coefficient_matrix();
        for (ra, rb) in a.iter().zip(&b) {
            for (x, y) in ra.iter().zip(rb) {
                // signs agree: both have positive leading coefficients
                assert!((x - y).abs() < 1e-10 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn double_precision_hits_pivot_threshold() {
        let m = legendre();
        let err = PolySpace::new(
            &m,
            35,
            BasisOptions {
                path: BasisPath::Monomial,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::GramSingular { k: 35, .. }), "{err}");
        // Auto falls back to the recurrence in one dimension
        let ps = PolySpace::new(&m, 35, BasisOptions::default()).unwrap();
        assert_eq!(ps.path(), BasisPath::Recurrence);
    }

    #[test]
    fn degree_cap_enforced() {
        let m = Measure::ball(2, 0.5).unwrap();
        let monomial = BasisOptions {
            path: BasisPath::Monomial,
            ..Default::default()
        };
        let err = PolySpace::new(&m, 26, monomial).unwrap_err();
        assert_eq!(err, Error::DegreeTooLarge { k: 26, cap: 25 });
        // Auto moves past the double cap to the double-double one
        let err = orthonormal_basis(&m, 41).unwrap_err();
        assert_eq!(err, Error::DegreeTooLarge { k: 41, cap: 40 });
    }

    #[test]
    fn auto_upgrades_ill_conditioned_double_basis() {
        let m = Measure::ball(2, 0.5).unwrap();
        assert_eq!(orthonormal_basis(&m, 6).unwrap().precision(), Precision::Double);
        let ps = orthonormal_basis(&m, 15).unwrap();
        assert_eq!(ps.precision(), Precision::Extended);
        assert!(ps.orthonormality_defect().unwrap() < 1e-12);
    }

    #[test]
    fn recurrence_rejected_off_the_interval() {
        let m = Measure::ball(2, 0.5).unwrap();
        let opts = BasisOptions {
            path: BasisPath::Recurrence,
            ..Default::default()
        };
        assert!(PolySpace::new(&m, 3, opts).is_err());
    }

    #[test]
    fn extended_basis_is_orthonormal() {
        for m in [
            Measure::ball(2, 0.0).unwrap(),
            Measure::ball(2, 1.0).unwrap(),
            Measure::cube(vec![(-1.0, 1.0), (-0.5, 2.0)]).unwrap(),
            Measure::ellipsoid(vec![1.5, 0.7]).unwrap(),
        ] {
            let ps = PolySpace::new(&m, 10, BasisOptions::extended()).unwrap();
            let defect = ps.orthonormality_defect().unwrap();
            assert!(defect < 1e-12, "{m:?}: {defect}");
        }
    }

    #[test]
    fn graded_ladder_spans_lower_degrees() {
        let m = Measure::ball(2, 0.5).unwrap();
        let top = PolySpace::new(&m, 6, BasisOptions::extended()).unwrap();
        let low = PolySpace::new(&m, 3, BasisOptions::extended()).unwrap();
        for x in [[0.1, 0.2], [-0.5, 0.6], [0.0, -0.99]] {
            let a = top.kernel_upto(3, &x, &[0.3, -0.1]);
            let b = low.kernel(&x, &[0.3, -0.1]);
            assert!((a - b).abs() < 1e-11 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn domain_checked_entry_points() {
        let ps = orthonormal_basis(&legendre(), 2).unwrap();
        assert!(kernel_eval(&ps, &[1.0], &[-1.0]).is_ok());
        assert!(kernel_eval(&ps, &[1.2], &[0.0]).is_err());
        assert!(christoffel(&ps, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn csv_export_layout() {
        let ps = orthonormal_basis(&Measure::ball(2, 0.5).unwrap(), 1).unwrap();
        let csv = ps.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "basis,1,x1,x2");
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn diagonal_degenerate_degree_zero() {
        let ps = orthonormal_basis(&legendre(), 0).unwrap();
        let t = diagonal_estimate_ratio(&[ps], &[vec![0.0], vec![0.5]]).unwrap();
        assert!(t.min > 0.0 && t.max.is_finite());
    }
}
