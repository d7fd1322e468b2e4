//! Bessel machinery for the scaling limit of kernels at the centre of the
//! ball, and the orthogonality experiments built on it.
//!
//! `J*_nu(t) = J_nu(t) / t^nu`, which is entire in `t` with
//! `J*_nu(0) = 1 / (2^nu Gamma(nu + 1))`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{gaussian, rho};
use crate::measures::{euclid, Measure};
use crate::polyspace::{BasisOptions, PolySpace};
use crate::quadrature::gauss_nodes_1d;
use crate::report::{fmt_f64, CsvTable};

/// `Gamma(x)` for `x > 0`, by the exact recurrence from `Gamma(1)` or
/// `Gamma(1/2)` when `2x` is an integer.
fn gamma(x: f64) -> f64 {
    let twice = 2.0 * x;
    if twice == twice.round() && twice <= 340.0 {
        let (mut g, mut t) = if twice as i64 % 2 == 0 {
            (1.0, 1.0)
        } else {
            (std::f64::consts::PI.sqrt(), 0.5)
        };
        while t < x {
            g *= t;
            t += 1.0;
        }
        g
    } else {
        statrs::function::gamma::gamma(x)
    }
}

/// Below this argument the power series is used; it has no cancellation there.
const SERIES_LIMIT: f64 = 2.0;

/// `J_nu(t) / t^nu` for `nu >= 1/2`, `t >= 0`. NaN outside that range.
pub fn jstar(nu: f64, t: f64) -> f64 {
    if !(nu >= 0.5) || !(t >= 0.0) || !t.is_finite() {
        return f64::NAN;
    }
    if t <= SERIES_LIMIT {
        jstar_series(nu, t)
    } else {
        jstar_miller(nu, t)
    }
}

/// `J_nu(t)`.
pub fn bessel_j(nu: f64, t: f64) -> f64 {
    jstar(nu, t) * t.powf(nu)
}

fn jstar_series(nu: f64, t: f64) -> f64 {
    let q = -0.25 * t * t;
    let mut term = 1.0 / gamma(nu + 1.0);
    let mut sum = term;
    for m in 1..60 {
        term *= q / (m as f64 * (nu + m as f64));
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum * 2f64.powf(-nu)
}

/// Miller's backward recurrence for `J_{nu+m}`, normalized by the Neumann
/// series `(t/2)^nu = sum_k (nu+2k) Gamma(nu+k)/k! J_{nu+2k}(t)`.
fn jstar_miller(nu: f64, t: f64) -> f64 {
    let start = (t + 30.0 + 10.0 * t.sqrt()).ceil() as usize;
    let start = start + start % 2;
    // f[m] proportional to J_{nu+m}
    let mut f = vec![0.0; start + 2];
    f[start] = 1e-300;
    for m in (1..=start).rev() {
        let mu = nu + m as f64;
        f[m - 1] = 2.0 * mu / t * f[m] - f[m + 1];
        if f[m - 1].abs() > 1e250 {
            for v in &mut f[m - 1..] {
                *v *= 1e-250;
            }
        }
    }
    // sum with h_k = Gamma(nu+k) / (k! Gamma(nu))
    let mut h = 1.0;
    let mut s = 0.0;
    let mut k = 0usize;
    while 2 * k <= start {
        if k > 0 {
            h *= (nu + k as f64 - 1.0) / k as f64;
        }
        s += (nu + 2.0 * k as f64) * h * f[2 * k];
        k += 1;
    }
    f[0] / (2f64.powf(nu) * gamma(nu) * s)
}

/// `J_nu` together with its positive zeros up to `t_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesselProfile {
    pub nu: f64,
    pub t_max: f64,
    pub zeros: Vec<f64>,
}

/// Scan step for sign changes; consecutive zeros of `J_nu` are more than
/// `pi/2` apart for `nu >= 1/2`.
const ZERO_SCAN_STEP: f64 = 0.05;

impl BesselProfile {
    pub fn new(nu: f64, t_max: f64) -> Result<Self> {
        if !(nu >= 0.5) || !nu.is_finite() {
            return Err(Error::InvalidInput(format!("Bessel order {nu} must be >= 1/2")));
        }
        if !(t_max >= 0.0) || !t_max.is_finite() {
            return Err(Error::InvalidInput(format!("zero range {t_max} must be finite and >= 0")));
        }
        let mut zeros = Vec::new();
        let mut lo = ZERO_SCAN_STEP;
        let mut flo = jstar(nu, lo);
        while lo < t_max {
            let hi = (lo + ZERO_SCAN_STEP).min(t_max);
            let fhi = jstar(nu, hi);
            if fhi == 0.0 {
                zeros.push(hi);
            } else if flo != 0.0 && flo.signum() != fhi.signum() {
                zeros.push(bisect(|t| jstar(nu, t), lo, hi, flo));
            }
            lo = hi;
            flo = fhi;
        }
        Ok(Self { nu, t_max, zeros })
    }

    pub fn jstar(&self, t: f64) -> f64 {
        jstar(self.nu, t)
    }

    pub fn j(&self, t: f64) -> f64 {
        bessel_j(self.nu, t)
    }

    /// `J*_nu(t) / J*_nu(0)`.
    pub fn normalized(&self, t: f64) -> f64 {
        jstar(self.nu, t) / jstar(self.nu, 0.0)
    }

    /// Distance from `t` to the nearest listed zero, infinite if none.
    pub fn nearest_zero(&self, t: f64) -> (f64, Option<f64>) {
        let i = self.zeros.partition_point(|&z| z < t);
        let candidates = [i.checked_sub(1), Some(i)];
        candidates
            .into_iter()
            .flatten()
            .filter_map(|j| self.zeros.get(j).copied())
            .map(|z| ((z - t).abs(), Some(z)))
            .fold((f64::INFINITY, None), |best, c| if c.0 < best.0 { c } else { best })
    }
}

/// Bisection to an interval of width `<= 1e-13`; `flo = f(lo)` has the
/// opposite sign of `f(hi)`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= 1e-13 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub k: usize,
    pub sup_error: f64,
    pub witness_u: Vec<f64>,
    pub witness_v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub nu: f64,
    pub radius: f64,
    pub grid_count: usize,
    pub rows: Vec<ScalingRow>,
    /// False when the sup error fails to decrease strictly along the ladder.
    pub monotone: bool,
}

impl ScalingTable {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["k", "sup_error", "witness_u", "witness_v"]);
        for r in &self.rows {
            t.push(vec![
                r.k.to_string(),
                fmt_f64(r.sup_error),
                crate::report::fmt_point(&r.witness_u),
                crate::report::fmt_point(&r.witness_v),
            ]);
        }
        t
    }
}

/// Sup over `u, v` in a `grid_count^n` grid of `[-R, R]^n` of
/// `|K_k(u/k, v/k) / K_k(0, 0) - J*(|u-v|) / J*(0)|`, `nu = n/2`.
pub fn scaling_error(spaces: &[PolySpace], radius: f64, grid_count: usize) -> Result<ScalingTable> {
    let first = spaces
        .first()
        .ok_or_else(|| Error::InvalidInput("empty degree ladder".into()))?;
    let n = first.n();
    if spaces.iter().any(|ps| !ps.measure().is_ball() || ps.n() != n) {
        return Err(Error::InvalidInput(
            "scaling limit needs ball measures of one dimension".into(),
        ));
    }
    if !(radius > 0.0) || grid_count < 2 {
        return Err(Error::InvalidInput("need R > 0 and at least 2 grid points per axis".into()));
    }
    let k_min = spaces.iter().map(|ps| ps.degree()).min().unwrap_or(0);
    if k_min == 0 || radius / k_min as f64 > 0.25 {
        return Err(Error::InvalidInput(format!(
            "R / k_min = {radius} / {k_min} leaves the bulk |x| <= 1/4"
        )));
    }
    let nu = n as f64 / 2.0;
    let j0 = jstar(nu, 0.0);
    let axis: Vec<f64> = (0..grid_count)
        .map(|i| -radius + 2.0 * radius * i as f64 / (grid_count - 1) as f64)
        .collect();
    let grid = tensor_grid(&axis, n);
    // the limit depends only on |u - v|
    let limit: Vec<f64> = grid
        .par_iter()
        .flat_map_iter(|u| grid.iter().map(move |v| jstar(nu, euclid(u, v)) / j0))
        .collect();

    let rows: Vec<ScalingRow> = spaces
        .par_iter()
        .map(|ps| {
            let kf = ps.degree() as f64;
            let origin = vec![0.0; n];
            let k00 = ps.kernel(&origin, &origin);
            let rows: Vec<Vec<f64>> = grid
                .iter()
                .map(|u| {
                    let x: Vec<f64> = u.iter().map(|c| c / kf).collect();
                    ps.basis_values(&x)
                })
                .collect();
            let (err, iu, iv) = (0..grid.len())
                .into_par_iter()
                .map(|i| {
                    let mut best = (0.0, i, i);
                    for j in 0..grid.len() {
                        let kij: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                        let e = (kij / k00 - limit[i * grid.len() + j]).abs();
                        if e > best.0 {
                            best = (e, i, j);
                        }
                    }
                    best
                })
                .reduce(
                    || (0.0, usize::MAX, usize::MAX),
                    |a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a },
                );
            ScalingRow {
                k: ps.degree(),
                sup_error: err,
                witness_u: grid.get(iu).cloned().unwrap_or_default(),
                witness_v: grid.get(iv).cloned().unwrap_or_default(),
            }
        })
        .collect();
    let monotone = rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error);
    Ok(ScalingTable {
        nu,
        radius,
        grid_count,
        rows,
        monotone,
    })
}

fn tensor_grid(axis: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
    pub nearest_zero: Option<f64>,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroDistanceReport {
    pub nu: f64,
    pub tol: f64,
    pub pairs: Vec<PairDistance>,
    pub max_gap: f64,
    /// Every pairwise distance lies within `tol` of a zero of `J_nu`.
    pub compatible: bool,
}

/// Checks whether the exponentials `e^{i<lambda, x>}`, `lambda` in `X`, can be
/// pairwise orthogonal on the unit ball: that needs every `|lambda - lambda'|`
/// to be a zero of `J_nu`.
pub fn bessel_zero_distance_test(points: &[Vec<f64>], nu: f64, tol: f64) -> Result<ZeroDistanceReport> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("need at least two points".into()));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be >= 0")));
    }
    let mut pairs = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i].len() != points[j].len() {
                return Err(Error::InvalidInput("points of different dimensions".into()));
            }
            pairs.push((i, j, euclid(&points[i], &points[j])));
        }
    }
    let t_max = pairs.iter().map(|p| p.2).fold(0.0, f64::max) + 4.0;
    let profile = BesselProfile::new(nu, t_max)?;
    let pairs: Vec<PairDistance> = pairs
        .into_iter()
        .map(|(i, j, distance)| {
            let (gap, nearest_zero) = profile.nearest_zero(distance);
            PairDistance {
                i,
                j,
                distance,
                nearest_zero,
                gap,
            }
        })
        .collect();
    let max_gap = pairs.iter().map(|p| p.gap).fold(0.0, f64::max);
    Ok(ZeroDistanceReport {
        nu,
        tol,
        compatible: max_gap <= tol,
        pairs,
        max_gap,
    })
}

/// Counts of `points` in the Euclidean balls `B(center, M/k)`, one per `M`.
pub fn scaled_ball_counts(points: &[Vec<f64>], center: &[f64], k: usize, ms: &[f64]) -> Vec<usize> {
    ms.iter()
        .map(|&m| {
            let r = m / k as f64;
            points.iter().filter(|p| euclid(p, center) < r).count()
        })
        .collect()
}

/// `k * sup_x min_lambda rho(x, lambda)` over probes `x` with `|x| <= bulk`:
/// the largest empty metric ball in the bulk, in units of `1/k`.
pub fn largest_hole(points: &[Vec<f64>], probes: &[Vec<f64>], k: usize) -> f64 {
    probes
        .iter()
        .map(|x| points.iter().map(|p| rho(x, p)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
        * k as f64
}

/// Default iteration cap per restart of the orthogonality search.
pub const SEARCH_ITERATION_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub index: usize,
    pub init: String,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Experiment ledger of one orthogonality search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchLedger {
    pub n: usize,
    pub a: f64,
    pub k: usize,
    pub m: usize,
    pub seed: u64,
    pub restarts: usize,
    pub iteration_cap: usize,
    pub best_residual: f64,
    pub best_restart: usize,
    /// True when the best restart stopped on a convergence test rather than
    /// the iteration cap.
    pub converged: bool,
    pub total_iterations: usize,
    pub runs: Vec<RestartRecord>,
    pub configuration: Vec<Vec<f64>>,
}

/// `sum_{i != j} K_k(x_i, x_j)^2 / (beta_k(x_i) beta_k(x_j))`.
pub fn orthogonality_residual(ps: &PolySpace, points: &[Vec<f64>]) -> f64 {
    let rows: Vec<Vec<f64>> = points.iter().map(|x| ps.basis_values(x)).collect();
    residual_of_rows(&rows)
}

fn residual_of_rows(rows: &[Vec<f64>]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let beta: Vec<f64> = rows.iter().map(|r| dot(r, r)).collect();
    let mut total = 0.0;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let kij = dot(&rows[i], &rows[j]);
            total += 2.0 * kij * kij / (beta[i] * beta[j]);
        }
    }
    total
}

/// Unconstrained coordinates `z` to the open ball: `x = tanh(|z|) z / |z|`.
fn to_ball(z: &[f64]) -> Vec<f64> {
    let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r < 1e-300 {
        return z.to_vec();
    }
    let s = r.tanh() / r;
    z.iter().map(|v| v * s).collect()
}

fn from_ball(x: &[f64]) -> Vec<f64> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r < 1e-300 {
        return x.to_vec();
    }
    let s = r.min(1.0 - 1e-15).atanh() / r;
    x.iter().map(|v| v * s).collect()
}

/// Multi-start BFGS (finite-difference gradients, Armijo backtracking) of
/// the normalized Gram off-diagonal mass over `m`-point configurations in the
/// ball. For `n = 1`, `m = k + 1` restart 0 starts at the Gauss nodes; all
/// other restarts start at uniform random points drawn from `seed`.
pub fn orthogonality_residual_search(
    n: usize,
    a: f64,
    k: usize,
    m: usize,
    seed: u64,
    restarts: usize,
) -> Result<SearchLedger> {
    orthogonality_residual_search_with_cap(n, a, k, m, seed, restarts, SEARCH_ITERATION_CAP)
}

pub fn orthogonality_residual_search_with_cap(
    n: usize,
    a: f64,
    k: usize,
    m: usize,
    seed: u64,
    restarts: usize,
    iteration_cap: usize,
) -> Result<SearchLedger> {
    let measure = Measure::ball(n, a)?;
    let ps = PolySpace::new(&measure, k, BasisOptions::default())?;
    if m == 0 || m > ps.dim() {
        return Err(Error::InvalidInput(format!(
            "point count {m} must lie in 1..={}",
            ps.dim()
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidInput("need at least one restart".into()));
    }
    let gauss: Option<Vec<Vec<f64>>> = if n == 1 && m == k + 1 {
        Some(
            gauss_nodes_1d(k + 1, a)?
                .nodes
                .into_iter()
                .map(|x| vec![x])
                .collect(),
        )
    } else {
        None
    };
    let runs: Vec<(RestartRecord, Vec<Vec<f64>>)> = (0..restarts)
        .into_par_iter()
        .map(|index| {
            let (init, start) = match (&gauss, index) {
                (Some(g), 0) => ("gauss".to_string(), g.clone()),
                _ => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(index as u64);
                    ("random".to_string(), uniform_ball(&mut rng, n, m))
                }
            };
            let (config, residual, iterations, converged) = minimize(&ps, &start, iteration_cap);
            (
                RestartRecord {
                    index,
                    init,
                    iterations,
                    residual,
                    converged,
                },
                config,
            )
        })
        .collect();
    let best = runs
        .iter()
        .min_by(|x, y| {
            x.0.residual
                .total_cmp(&y.0.residual)
                .then(x.0.index.cmp(&y.0.index))
        })
        .expect("restarts >= 1");
    Ok(SearchLedger {
        n,
        a,
        k,
        m,
        seed,
        restarts,
        iteration_cap,
        best_residual: best.0.residual,
        best_restart: best.0.index,
        converged: best.0.converged,
        total_iterations: runs.iter().map(|r| r.0.iterations).sum(),
        configuration: best.1.clone(),
        runs: runs.iter().map(|r| r.0.clone()).collect(),
    })
}

fn uniform_ball(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| {
            let dir: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            let r = rng.random::<f64>().powf(1.0 / n as f64) * 0.95;
            dir.iter().map(|v| v / norm * r).collect()
        })
        .collect()
}

/// Residual below which a configuration counts as orthogonal.
const RESIDUAL_FLOOR: f64 = 1e-28;

fn minimize(ps: &PolySpace, start: &[Vec<f64>], cap: usize) -> (Vec<Vec<f64>>, f64, usize, bool) {
    let n = ps.n();
    let unpack = |z: &[f64]| -> Vec<Vec<f64>> { z.chunks(n).map(to_ball).collect() };
    let f = |z: &[f64]| orthogonality_residual(ps, &unpack(z));
    let mut z: Vec<f64> = start.iter().flat_map(|x| from_ball(x)).collect();
    let dim = z.len();
    let mut fz = f(&z);
    if fz <= RESIDUAL_FLOOR || start.len() < 2 {
        return (unpack(&z), fz, 0, true);
    }
    let grad = |z: &[f64]| -> DVector<f64> {
        let mut g = DVector::zeros(dim);
        let mut w = z.to_vec();
        for i in 0..dim {
            let h = 1e-6 * (1.0 + z[i].abs());
            w[i] = z[i] + h;
            let fp = f(&w);
            w[i] = z[i] - h;
            let fm = f(&w);
            w[i] = z[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        g
    };
    let mut h_inv = DMatrix::<f64>::identity(dim, dim);
    let mut g = grad(&z);
    for iter in 1..=cap {
        if g.norm() <= 1e-12 {
            return (unpack(&z), fz, iter - 1, true);
        }
        let mut p = -(&h_inv * &g);
        let mut slope = g.dot(&p);
        if slope >= 0.0 {
            h_inv = DMatrix::identity(dim, dim);
            p = -g.clone();
            slope = g.dot(&p);
        }
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-12 {
            let trial: Vec<f64> = z.iter().zip(p.iter()).map(|(a, b)| a + step * b).collect();
            let ft = f(&trial);
            if ft <= fz + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((znew, fnew)) = accepted else {
            // no descent along a fresh gradient direction: stationary at FD accuracy
            return (unpack(&z), fz, iter, true);
        };
        let gnew = grad(&znew);
        let s = DVector::from_iterator(dim, znew.iter().zip(&z).map(|(a, b)| a - b));
        let y = &gnew - &g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho_k = 1.0 / sy;
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            h_inv += (&s * s.transpose()) * (rho_k * rho_k * yhy + rho_k)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho_k;
        }
        let decrease = fz - fnew;
        z = znew;
        fz = fnew;
        g = gnew;
        if fz <= RESIDUAL_FLOOR || decrease <= 1e-15 * fz.max(1e-300) {
            return (unpack(&z), fz, iter, true);
        }
    }
    (unpack(&z), fz, cap, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn j_half(t: f64) -> f64 {
        (2.0 / PI).sqrt() * t.sin() / t
    }

    fn j_three_halves(t: f64) -> f64 {
        (2.0 / PI).sqrt() * (t.sin() / t - t.cos()) / (t * t)
    }

    #[test]
    fn half_order_closed_forms() {
        for i in 1..400 {
            let t = 0.125 * i as f64;
            assert_abs_diff_eq!(jstar(0.5, t), j_half(t), epsilon = 1e-14);
            assert_abs_diff_eq!(jstar(1.5, t), j_three_halves(t), epsilon = 1e-13);
        }
        for t in [60.0, 117.3, 199.9] {
            assert_abs_diff_eq!(jstar(0.5, t), j_half(t), epsilon = 1e-15);
        }
    }

    #[test]
    fn value_at_origin() {
        for nu in [0.5, 1.0, 1.5, 2.0, 3.5] {
            let expect = 1.0 / (2f64.powf(nu) * gamma(nu + 1.0));
            assert_abs_diff_eq!(jstar(nu, 0.0), expect, epsilon = 1e-15);
            // the series and the recurrence meet continuously
            let gap = jstar_series(nu, SERIES_LIMIT) - jstar_miller(nu, SERIES_LIMIT);
            assert!(gap.abs() < 1e-15, "nu = {nu}: {gap}");
        }
        assert_abs_diff_eq!(jstar(0.5, 0.0), (2.0 / PI).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn integer_order_reference_values() {
        // J_1(1), J_1(10), J_2(5) from standard tables
        assert_abs_diff_eq!(bessel_j(1.0, 1.0), 0.440_050_585_744_933_5, epsilon = 1e-15);
        assert_abs_diff_eq!(bessel_j(1.0, 10.0), 0.043_472_746_168_861_44, epsilon = 1e-14);
        assert_abs_diff_eq!(bessel_j(2.0, 5.0), 0.046_565_116_277_752_21, epsilon = 1e-14);
    }

    #[test]
    fn zeros_of_half_order_are_multiples_of_pi() {
        let p = BesselProfile::new(0.5, 20.0).unwrap();
        assert_eq!(p.zeros.len(), 6);
        for (m, z) in p.zeros.iter().enumerate() {
            assert_abs_diff_eq!(*z, (m + 1) as f64 * PI, epsilon = 1e-12);
        }
    }

    #[test]
    fn first_zero_of_j1() {
        let p = BesselProfile::new(1.0, 5.0).unwrap();
        assert_eq!(p.zeros.len(), 1);
        assert_abs_diff_eq!(p.zeros[0], 3.831_705_970_207_512, epsilon = 1e-12);
        assert!(p.j(p.zeros[0] - 1e-9) * p.j(p.zeros[0] + 1e-9) < 0.0);
    }

    #[test]
    fn nearest_zero_lookup() {
        let p = BesselProfile::new(0.5, 10.0).unwrap();
        let (gap, z) = p.nearest_zero(4.0);
        assert_abs_diff_eq!(z.unwrap(), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(gap, 4.0 - PI, epsilon = 1e-12);
        let (gap, _) = p.nearest_zero(0.0);
        assert_abs_diff_eq!(gap, PI, epsilon = 1e-12);
    }

    #[test]
    fn zero_distance_examples() {
        let x = vec![vec![0.0], vec![PI], vec![2.0 * PI]];
        let r = bessel_zero_distance_test(&x, 0.5, 1e-9).unwrap();
        assert!(r.compatible, "{r:?}");
        assert_eq!(r.pairs.len(), 3);

        let close = vec![vec![0.0], vec![1.0]];
        assert!(!bessel_zero_distance_test(&close, 0.5, 1e-9).unwrap().compatible);
        assert!(!bessel_zero_distance_test(&close, 1.5, 1e-9).unwrap().compatible);

        let tol = 1e-6;
        let nudged = vec![vec![0.0], vec![PI + 10.0 * tol], vec![2.0 * PI]];
        assert!(!bessel_zero_distance_test(&nudged, 0.5, tol).unwrap().compatible);

        assert!(bessel_zero_distance_test(&[vec![0.0]], 0.5, 1e-9).is_err());
    }

    #[test]
    fn scaling_error_basics() {
        let m = Measure::ball(1, 0.5).unwrap();
        let spaces: Vec<PolySpace> = [20, 40]
            .iter()
            .map(|&k| PolySpace::new(&m, k, BasisOptions::default()).unwrap())
            .collect();
        let t = scaling_error(&spaces, 5.0, 21).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows.iter().all(|r| r.sup_error.is_finite() && r.sup_error >= 0.0));
        // at u = v = 0 both sides equal one
        let ps = &spaces[0];
        let o = [0.0];
        assert_abs_diff_eq!(ps.kernel(&o, &o) / ps.kernel(&o, &o), 1.0);
        // R / k_min must stay in the bulk
        assert!(scaling_error(&spaces, 6.0, 21).is_err());
        assert!(scaling_error(&[], 1.0, 21).is_err());
    }

    #[test]
    fn scaling_error_symmetric() {
        let m = Measure::ball(2, 0.5).unwrap();
        let ps = PolySpace::new(&m, 12, BasisOptions::default()).unwrap();
        let kf = 12.0;
        let j0 = jstar(1.0, 0.0);
        let err = |u: &[f64], v: &[f64]| {
            let x: Vec<f64> = u.iter().map(|c| c / kf).collect();
            let y: Vec<f64> = v.iter().map(|c| c / kf).collect();
            let o = [0.0, 0.0];
            (ps.kernel(&x, &y) / ps.kernel(&o, &o) - jstar(1.0, euclid(u, v)) / j0).abs()
        };
        let (u, v) = ([1.0, -2.0], [0.5, 2.5]);
        assert_abs_diff_eq!(err(&u, &v), err(&v, &u), epsilon = 1e-14);
        let t = scaling_error(&[ps], 3.0, 5).unwrap();
        assert!(t.rows[0].sup_error < 0.5);
    }

    #[test]
    fn search_from_gauss_nodes_is_exact() {
        let ledger = orthogonality_residual_search(1, 0.5, 8, 9, 3, 2).unwrap();
        assert!(ledger.best_residual <= 1e-12, "{}", ledger.best_residual);
        assert_eq!(ledger.best_restart, 0);
        assert_eq!(ledger.runs[0].init, "gauss");
        assert_eq!(ledger.configuration.len(), 9);
    }

    #[test]
    fn single_point_has_zero_residual() {
        let ledger = orthogonality_residual_search(2, 0.5, 2, 1, 0, 1).unwrap();
        assert_eq!(ledger.best_residual, 0.0);
        assert!(orthogonality_residual_search(1, 0.5, 2, 4, 0, 1).is_err());
    }

    #[test]
    fn search_is_deterministic() {
        let a = orthogonality_residual_search(2, 0.5, 2, 6, 11, 4).unwrap();
        let b = orthogonality_residual_search(2, 0.5, 2, 6, 11, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.best_residual >= 0.0);
        let min = a.runs.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min);
        assert_eq!(a.best_residual, min);
    }

    #[test]
    fn search_reports_cap() {
        let l = orthogonality_residual_search_with_cap(2, 0.5, 3, 8, 5, 1, 1).unwrap();
        assert_eq!(l.runs[0].iterations, 1);
        assert!(!l.converged || l.best_residual <= RESIDUAL_FLOOR);
    }

    #[test]
    fn random_search_improves_on_its_start() {
        let m = Measure::ball(1, 0.5).unwrap();
        let ps = PolySpace::new(&m, 4, BasisOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        rng.set_stream(1);
        let start = uniform_ball(&mut rng, 1, 5);
        let before = orthogonality_residual(&ps, &start);
        let l = orthogonality_residual_search(1, 0.5, 4, 5, 9, 2).unwrap();
        assert!(l.runs[1].residual <= before);
    }

    #[test]
    fn ball_map_round_trips() {
        for x in [vec![0.3, -0.4], vec![0.0, 0.0], vec![0.9, 0.1]] {
            let back = to_ball(&from_ball(&x));
            assert_abs_diff_eq!(euclid(&x, &back), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn gauss_counts_scale_linearly() {
        let k = 200;
        let pts: Vec<Vec<f64>> = gauss_nodes_1d(k + 1, 0.5)
            .unwrap()
            .nodes
            .into_iter()
            .map(|x| vec![x])
            .collect();
        let c = scaled_ball_counts(&pts, &[0.0], k, &[4.0, 8.0, 16.0]);
        for (ci, m) in c.iter().zip([4.0, 8.0, 16.0]) {
            let per_m = *ci as f64 / m;
            assert!((0.5 * 2.0 / PI..=2.0 * 2.0 / PI).contains(&per_m), "{c:?}");
        }
        let probes: Vec<Vec<f64>> = (0..=50).map(|i| vec![-0.25 + 0.01 * i as f64]).collect();
        let hole = largest_hole(&pts, &probes, k);
        assert!(hole > 0.0 && hole < 2.0, "{hole}");
    }

    proptest! {
        #[test]
        fn recurrence_in_star_form(t in 0.1f64..50.0, nu in prop::sample::select(vec![1.5, 2.0, 2.5, 3.0])) {
            // J*_{nu-1} + t^2 J*_{nu+1} = 2 nu J*_nu
            let lhs = jstar(nu - 1.0, t) + t * t * jstar(nu + 1.0, t);
            let rhs = 2.0 * nu * jstar(nu, t);
            let scale = jstar(nu - 1.0, t).abs().max(2.0 * nu * jstar(nu, t).abs()).max(t.powf(-nu));
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale, "{} vs {}", lhs, rhs);
        }
    }
}
