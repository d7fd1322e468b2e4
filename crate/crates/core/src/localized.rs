//! Localized kernels `L_k(x, y) = sum_j cut(j/k) P_j(x, y)` on the weighted
//! ball, where `P_j = K_j - K_{j-1}` are the slice projection kernels and
//! `cut` is a smooth plateau function supported in `[0, 2]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::rho;
use crate::measures::Measure;
use crate::polyspace::{BasisOptions, PolySpace};
use crate::quadrature::gauss_legendre;
use crate::report::{fmt_f64, fmt_point, CsvTable};

/// `exp(-1/s)` for `s > 0`, else 0.
fn bump(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth cutoff: 1 on `[0, 1]`, 0 on `[2, inf)`, and
/// `f(2-t) / (f(2-t) + f(t-1))` in between with `f(s) = exp(-1/s)`.
pub fn cutoff_hat(t: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let u = bump(2.0 - t);
        let v = bump(t - 1.0);
        u / (u + v)
    }
}

/// `L_k` for the ball measure with exponent `a`, built from the degree-`2k`
/// graded basis. Immutable; evaluation is pure.
#[derive(Debug, Clone)]
pub struct LocalizedKernel {
    k: usize,
    a: f64,
    space: PolySpace,
    /// `cut(deg(phi_i) / k)` for every basis index.
    weights: Vec<f64>,
    /// `b` with `b * int L(x, y) dmu(y) = 1`.
    normalization: f64,
}

impl LocalizedKernel {
    pub fn new(m: &Measure, k: usize, opts: BasisOptions) -> Result<Self> {
        let a = m.ball_exponent().ok_or_else(|| {
            Error::InvalidInput("localized kernels are defined on the weighted ball".into())
        })?;
        let space = PolySpace::new(m, 2 * k, opts)?;
        let mut weights = Vec::with_capacity(space.dim());
        for j in 0..=2 * k {
            let lo = if j == 0 { 0 } else { space.dim_at(j - 1) };
            // k = 0 keeps only the constant slice
            let w = if k == 0 {
                if j == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                cutoff_hat(j as f64 / k as f64)
            };
            weights.extend(std::iter::repeat_n(w, space.dim_at(j) - lo));
        }
        let mut lk = Self {
            k,
            a,
            space,
            weights,
            normalization: 1.0,
        };
        let origin = vec![0.0; m.n()];
        let rule = m.rule(2 * k)?;
        let total: f64 = rule.iter().map(|(y, w)| w * lk.eval(&origin, y)).sum();
        lk.normalization = 1.0 / total;
        Ok(lk)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn measure(&self) -> &Measure {
        self.space.measure()
    }

    /// The degree-`2k` space whose graded basis carries the slices.
    pub fn space(&self) -> &PolySpace {
        &self.space
    }

    /// Runtime normalization `b`; equals 1 up to rounding because the
    /// constant slice is kept with weight 1.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Samples `cut(j/k)` for `j = 0..=2k`.
    pub fn cutoff_samples(&self) -> Vec<f64> {
        (0..=2 * self.k)
            .map(|j| {
                let lo = if j == 0 { 0 } else { self.space.dim_at(j - 1) };
                self.weights[lo]
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let px = self.space.basis_values(x);
        let py = self.space.basis_values(y);
        self.weighted_dot(&px, &py)
    }

    fn weighted_dot(&self, px: &[f64], py: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(px.iter().zip(py))
            .map(|(w, (u, v))| w * u * v)
            .sum()
    }

    /// `(beta_k(x), L(x, x), beta_2k(x))` from one basis evaluation.
    pub fn diagonal(&self, x: &[f64]) -> (f64, f64, f64) {
        let p = self.space.basis_values(x);
        let dk = self.space.dim_at(self.k);
        let beta_k: f64 = p[..dk].iter().map(|v| v * v).sum();
        let beta_2k: f64 = p.iter().map(|v| v * v).sum();
        (beta_k, self.weighted_dot(&p, &p), beta_2k)
    }

    pub fn beta_k(&self, x: &[f64]) -> f64 {
        self.space.kernel_upto(self.k, x, x)
    }

    /// Slice kernel `P_j(x, y)`.
    pub fn slice(&self, j: usize, x: &[f64], y: &[f64]) -> f64 {
        assert!(j <= 2 * self.k, "slice index out of range");
        let lo = if j == 0 { 0 } else { self.space.dim_at(j - 1) };
        let hi = self.space.dim_at(j);
        let px = self.space.basis_values(x);
        let py = self.space.basis_values(y);
        px[lo..hi].iter().zip(&py[lo..hi]).map(|(u, v)| u * v).sum()
    }
}

/// `L_k(x, y)` with a domain check on both points.
pub fn localized_kernel_eval(lk: &LocalizedKernel, x: &[f64], y: &[f64]) -> Result<f64> {
    lk.measure().check_point(x)?;
    lk.measure().check_point(y)?;
    Ok(lk.eval(x, y))
}

/// Worst violation of `beta_k <= L(x, x) <= beta_2k` over `grid`, relative to
/// `beta_2k` (non-positive when the sandwich holds).
pub fn diagonal_sandwich_violation(lk: &LocalizedKernel, grid: &[Vec<f64>]) -> f64 {
    grid.par_iter()
        .map(|x| {
            let (bk, l, b2k) = lk.diagonal(x);
            ((bk - l) / b2k).max((l - b2k) / b2k)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `max_x |b * int L(x, .) p dmu - p(x)| / ||p||` for `p = sum c_i phi_i`
/// (coefficients in the degree-`k` basis), integrated at order `3k`.
pub fn reproduction_residual(
    lk: &LocalizedKernel,
    coeffs: &[f64],
    points: &[Vec<f64>],
) -> Result<f64> {
    let dk = lk.space.dim_at(lk.k);
    if coeffs.len() != dk {
        return Err(Error::InvalidInput(format!(
            "expected {dk} coefficients, got {}",
            coeffs.len()
        )));
    }
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let rule = lk.measure().rule(3 * lk.k)?;
    let table: Vec<(Vec<f64>, f64)> = rule
        .iter()
        .map(|(y, w)| {
            let py = lk.space.basis_values(y);
            let p: f64 = coeffs.iter().zip(&py).map(|(c, v)| c * v).sum();
            (py, w * p)
        })
        .collect();
    let worst = points
        .par_iter()
        .map(|x| {
            let px = lk.space.basis_values(x);
            let px_val: f64 = coeffs.iter().zip(&px).map(|(c, v)| c * v).sum();
            let integral: f64 = table
                .iter()
                .map(|(py, wp)| wp * lk.weighted_dot(&px, py))
                .sum();
            (lk.normalization * integral - px_val).abs()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    Ok(worst / norm.max(f64::MIN_POSITIVE))
}

/// One sample of the off-diagonal profile along a ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    /// `k * rho(x0, y)`.
    pub scaled_distance: f64,
    pub y: Vec<f64>,
    /// `|L(x0, y)| / sqrt(beta_k(x0) beta_k(y))`.
    pub normalized: f64,
    /// `max` of `normalized` over all samples at this distance or farther.
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub k: usize,
    pub x0: Vec<f64>,
    pub ray: Vec<f64>,
    pub samples: Vec<DecaySample>,
    /// Range of `k rho` used for the fit.
    pub fit_range: (f64, f64),
    /// Minus the least-squares slope of `log envelope` on `log(k rho)`.
    pub exponent: f64,
}

impl DecayProfile {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["k", "x", "scaled_distance", "normalized", "envelope"]);
        for s in &self.samples {
            t.push(vec![
                self.k.to_string(),
                fmt_point(&s.y),
                fmt_f64(s.scaled_distance),
                fmt_f64(s.normalized),
                fmt_f64(s.envelope),
            ]);
        }
        t
    }
}

/// Point on the ray from `x0` at Euclidean parameter `t`.
fn ray_point(x0: &[f64], dir: &[f64], t: f64) -> Vec<f64> {
    x0.iter().zip(dir).map(|(a, d)| a + t * d).collect()
}

/// Largest `t` with `x0 + t dir` in the closed unit ball.
fn ray_exit(x0: &[f64], dir: &[f64]) -> f64 {
    let b: f64 = x0.iter().zip(dir).map(|(a, d)| a * d).sum();
    let c: f64 = x0.iter().map(|a| a * a).sum::<f64>() - 1.0;
    (-b + (b * b - c).max(0.0).sqrt()).max(0.0)
}

/// Ray parameter at which `k rho(x0, y(t))` reaches `target` (bisection;
/// `rho` increases along the ray).
fn param_at_scaled_distance(k: f64, x0: &[f64], dir: &[f64], t_max: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, t_max);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if k * rho(x0, &ray_point(x0, dir, mid)) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Normalized off-diagonal magnitudes along `x0 + t ray`, sampled uniformly
/// in `k rho` from 0 to `max(fit_range.1, ...)`, and the decay exponent
/// fitted on `fit_range` after replacing the oscillating profile by its tail
/// supremum.
pub fn decay_profile(
    lk: &LocalizedKernel,
    x0: &[f64],
    ray: &[f64],
    samples: usize,
    fit_range: (f64, f64),
) -> Result<DecayProfile> {
    if samples < 8 {
        return Err(Error::InvalidInput("decay profile needs at least 8 samples".into()));
    }
    let (lo, hi) = fit_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidInput(format!("invalid fit range [{lo}, {hi}]")));
    }
    lk.measure().check_point(x0)?;
    if ray.len() != x0.len() {
        return Err(Error::InvalidInput("ray dimension differs from x0".into()));
    }
    let len = ray.iter().map(|d| d * d).sum::<f64>().sqrt();
    if !(len > 0.0) {
        return Err(Error::InvalidInput("ray direction must be nonzero".into()));
    }
    let dir: Vec<f64> = ray.iter().map(|d| d / len).collect();
    let k = lk.k.max(1) as f64;
    let t_max = ray_exit(x0, &dir);
    let reach = k * rho(x0, &ray_point(x0, &dir, t_max));
    if reach < hi {
        return Err(Error::InvalidInput(format!(
            "the ray leaves the ball at k*rho = {reach:.3}, before the fit range ends at {hi}"
        )));
    }
    let beta0 = lk.beta_k(x0);
    let mut out: Vec<DecaySample> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let target = hi * i as f64 / (samples - 1) as f64;
            let t = param_at_scaled_distance(k, x0, &dir, t_max, target);
            let y = ray_point(x0, &dir, t);
            let normalized = lk.eval(x0, &y).abs() / (beta0 * lk.beta_k(&y)).sqrt();
            DecaySample {
                scaled_distance: k * rho(x0, &y),
                y,
                normalized,
                envelope: 0.0,
            }
        })
        .collect();
    let mut running: f64 = 0.0;
    for s in out.iter_mut().rev() {
        running = running.max(s.normalized);
        s.envelope = running;
    }
    let pts: Vec<(f64, f64)> = out
        .iter()
        .filter(|s| s.scaled_distance >= lo && s.scaled_distance <= hi && s.envelope > 0.0)
        .map(|s| (s.scaled_distance.ln(), s.envelope.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidInput("too few samples inside the fit range".into()));
    }
    Ok(DecayProfile {
        k: lk.k,
        x0: x0.to_vec(),
        ray: dir,
        samples: out,
        fit_range,
        exponent: -least_squares_slope(&pts),
    })
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Largest `eps` (on a step grid of `step`) such that
/// `L(x, y) >= beta_k(y) / 2` for every sampled `x` with `k rho(x, y) <= eps`,
/// probing along each of `directions`.
pub fn diagonal_plateau_radius(
    lk: &LocalizedKernel,
    y: &[f64],
    directions: &[Vec<f64>],
    step: f64,
) -> Result<f64> {
    lk.measure().check_point(y)?;
    if !(step > 0.0) {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    let k = lk.k.max(1) as f64;
    let half = 0.5 * lk.beta_k(y);
    let py = lk.space.basis_values(y);
    let mut eps = f64::INFINITY;
    for d in directions {
        let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(len > 0.0) {
            continue;
        }
        let dir: Vec<f64> = d.iter().map(|v| v / len).collect();
        let t_max = ray_exit(y, &dir);
        let reach = k * rho(y, &ray_point(y, &dir, t_max));
        let mut r = step;
        let mut ok = reach;
        while r <= reach {
            let t = param_at_scaled_distance(k, y, &dir, t_max, r);
            let px = lk.space.basis_values(&ray_point(y, &dir, t));
            if lk.weighted_dot(&px, &py) < half {
                ok = r - step;
                break;
            }
            r += step;
        }
        eps = eps.min(ok);
    }
    Ok(eps)
}

/// One row of the weighted integral table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralRow {
    pub k: usize,
    pub x: Vec<f64>,
    /// `int beta_k(y)^alpha (1 + k rho(x,y))^-gamma dmu(y) * beta_k(x)^(1-alpha)`.
    pub statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralTable {
    pub alpha: f64,
    pub gamma: f64,
    pub rows: Vec<IntegralRow>,
    /// Largest statistic for each `k`, in input order.
    pub max_per_k: Vec<(usize, f64)>,
    /// Set when the per-`k` maximum more than doubles from the first to the
    /// last degree, i.e. the statistic is not visibly bounded.
    pub growth_flagged: bool,
}

impl IntegralTable {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["k", "x", "statistic"]);
        for r in &self.rows {
            t.push(vec![r.k.to_string(), fmt_point(&r.x), fmt_f64(r.statistic)]);
        }
        t
    }
}

const INTEGRAL_AGREEMENT: f64 = 0.01;

/// Evaluates the weighted integral for each `k` and grid point. In one
/// dimension the integral is taken in the angle `y = cos(theta)`, where `rho`
/// is `|theta - theta_x|`, with composite Gauss–Legendre panels no wider than
/// `1/(4k)` split at `theta_x`; elsewhere the measure's product rule is used.
/// Each value is compared with a refined rule and rejected if the two differ
/// by more than 1%.
pub fn integral_estimate_check(
    m: &Measure,
    ks: &[usize],
    alpha: f64,
    gamma: f64,
    grid: &[Vec<f64>],
    opts: BasisOptions,
) -> Result<IntegralTable> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} must be positive")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidInput(format!("gamma = {gamma} must be >= 0")));
    }
    let a = m.ball_exponent().ok_or_else(|| {
        Error::InvalidInput("the weighted integral check is defined on the ball".into())
    })?;
    for x in grid {
        m.check_point(x)?;
    }
    let mut rows = Vec::new();
    let mut max_per_k = Vec::new();
    for &k in ks {
        let space = PolySpace::new(m, k, opts)?;
        let kf = k.max(1) as f64;
        let beta = |y: &[f64]| space.kernel(y, y);
        let values: Vec<Result<f64>> = grid
            .par_iter()
            .map(|x| {
                let integrand = |y: &[f64]| beta(y).powf(alpha) * (1.0 + kf * rho(x, y)).powf(-gamma);
                let (coarse, fine, order) = if m.n() == 1 {
                    let coarse = angular_integral(a, x[0], kf, 8, &integrand)?;
                    let fine = angular_integral(a, x[0], kf, 16, &integrand)?;
                    (coarse, fine, 32)
                } else {
                    let o = 4 * k.max(1);
                    let coarse = m.integrate(integrand, o)?;
                    let fine = m.integrate(integrand, 2 * o)?;
                    (coarse, fine, 2 * o)
                };
                let rel_diff = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
                if rel_diff > INTEGRAL_AGREEMENT {
                    return Err(Error::QuadratureInsufficient { order, rel_diff });
                }
                Ok(fine * beta(x).powf(1.0 - alpha))
            })
            .collect();
        let mut worst: f64 = 0.0;
        for (x, v) in grid.iter().zip(values) {
            let statistic = v?;
            worst = worst.max(statistic);
            rows.push(IntegralRow {
                k,
                x: x.clone(),
                statistic,
            });
        }
        max_per_k.push((k, worst));
    }
    let growth_flagged = match (max_per_k.first(), max_per_k.last()) {
        (Some(f), Some(l)) if max_per_k.len() > 1 => l.1 > 2.0 * f.1,
        _ => false,
    };
    Ok(IntegralTable {
        alpha,
        gamma,
        rows,
        max_per_k,
        growth_flagged,
    })
}

/// `int_0^pi f(cos t) sin(t)^(2a) dt`, split at `theta_x = acos(x)` into
/// panels of width `<= 1/(4k)` with `nodes` Gauss–Legendre points each.
fn angular_integral(
    a: f64,
    x: f64,
    k: f64,
    nodes: usize,
    f: &impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    let gl = gauss_legendre(nodes)?;
    let tx = x.clamp(-1.0, 1.0).acos();
    let mut total = 0.0;
    for (lo, hi) in [(0.0, tx), (tx, std::f64::consts::PI)] {
        let width = hi - lo;
        if width <= 0.0 {
            continue;
        }
        let panels = (width * 4.0 * k).ceil().max(1.0) as usize;
        let h = width / panels as f64;
        for p in 0..panels {
            let c = lo + (p as f64 + 0.5) * h;
            for (u, w) in gl.nodes.iter().zip(&gl.weights) {
                let t = c + 0.5 * h * u;
                let s = t.sin();
                total += 0.5 * h * w * f(&[t.cos()]) * s.powf(2.0 * a);
            }
        }
    }
    Ok(total)
}

/// Fitted constant of the finite-difference Lipschitz bound
/// `|L(w,x) - L(w,y)| <= C k rho(x,y) sqrt(beta_k(w) beta_k(y))` over
/// `x` on rays from each `y` with `k rho(x, y) <= 1`, and `w` in `probes`.
pub fn lipschitz_constant(
    lk: &LocalizedKernel,
    centers: &[Vec<f64>],
    directions: &[Vec<f64>],
    probes: &[Vec<f64>],
    steps: usize,
) -> Result<f64> {
    let k = lk.k.max(1) as f64;
    let probe_vals: Vec<(Vec<f64>, f64)> = probes
        .iter()
        .map(|w| {
            let p = lk.space.basis_values(w);
            let dk = lk.space.dim_at(lk.k);
            let b = p[..dk].iter().map(|v| v * v).sum::<f64>();
            (p, b)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for y in centers {
        lk.measure().check_point(y)?;
        let py = lk.space.basis_values(y);
        let by = lk.beta_k(y);
        for d in directions {
            let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(len > 0.0) {
                continue;
            }
            let dir: Vec<f64> = d.iter().map(|v| v / len).collect();
            let t_max = ray_exit(y, &dir);
            let reach = (k * rho(y, &ray_point(y, &dir, t_max))).min(1.0);
            for s in 1..=steps {
                let target = reach * s as f64 / steps as f64;
                let t = param_at_scaled_distance(k, y, &dir, t_max, target);
                let x = ray_point(y, &dir, t);
                let dist = k * rho(&x, y);
                if dist <= 0.0 {
                    continue;
                }
                let px = lk.space.basis_values(&x);
                for (pw, bw) in &probe_vals {
                    let diff = (lk.weighted_dot(pw, &px) - lk.weighted_dot(pw, &py)).abs();
                    worst = worst.max(diff / (dist * (bw * by).sqrt()));
                }
            }
        }
    }
    Ok(worst)
}

/// `max_{i != j} |int P_i(x, .) P_j(x, .) dmu|` at each `x`, together with
/// the worst diagonal defect `|int P_j(x, .)^2 dmu - P_j(x, x)|`.
pub fn slice_orthogonality_residual(lk: &LocalizedKernel, points: &[Vec<f64>]) -> Result<f64> {
    let top = 2 * lk.k;
    let rule = lk.measure().rule(4 * lk.k)?;
    let bounds: Vec<(usize, usize)> = (0..=top)
        .map(|j| {
            let lo = if j == 0 { 0 } else { lk.space.dim_at(j - 1) };
            (lo, lk.space.dim_at(j))
        })
        .collect();
    let slices_at = |px: &[f64], py: &[f64]| -> Vec<f64> {
        bounds
            .iter()
            .map(|&(lo, hi)| px[lo..hi].iter().zip(&py[lo..hi]).map(|(u, v)| u * v).sum())
            .collect()
    };
    let worst = points
        .par_iter()
        .map(|x| {
            let px = lk.space.basis_values(x);
            let mut gram = vec![0.0; (top + 1) * (top + 1)];
            for (y, w) in rule.iter() {
                let s = slices_at(&px, &lk.space.basis_values(y));
                for i in 0..=top {
                    for j in 0..=i {
                        gram[i * (top + 1) + j] += w * s[i] * s[j];
                    }
                }
            }
            let diag = slices_at(&px, &px);
            let mut worst: f64 = 0.0;
            for i in 0..=top {
                for j in 0..=i {
                    let target = if i == j { diag[i] } else { 0.0 };
                    worst = worst.max((gram[i * (top + 1) + j] - target).abs());
                }
            }
            worst
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn segment(a: f64, k: usize) -> LocalizedKernel {
        LocalizedKernel::new(&Measure::ball(1, a).unwrap(), k, BasisOptions::default()).unwrap()
    }

    #[test]
    fn cutoff_examples() {
        assert_eq!(cutoff_hat(0.5), 1.0);
        assert_eq!(cutoff_hat(1.0), 1.0);
        assert_eq!(cutoff_hat(2.0), 0.0);
        assert_eq!(cutoff_hat(7.0), 0.0);
        assert_abs_diff_eq!(cutoff_hat(1.5), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn degree_zero_is_constant_kernel() {
        let lk = segment(0.5, 0);
        assert_abs_diff_eq!(lk.eval(&[0.3], &[-0.9]), 0.5, epsilon = 1e-14);
        assert_eq!(lk.cutoff_samples(), vec![1.0]);
    }

    #[test]
    fn normalization_is_one() {
        for a in [0.0, 0.5, 1.0] {
            assert_abs_diff_eq!(segment(a, 6).normalization(), 1.0, epsilon = 1e-12);
        }
        let disk = LocalizedKernel::new(&Measure::ball(2, 0.5).unwrap(), 3, BasisOptions::default())
            .unwrap();
        assert_abs_diff_eq!(disk.normalization(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn matches_slice_sum() {
        let lk = segment(0.5, 4);
        let (x, y) = ([0.2], [-0.55]);
        let direct: f64 = (0..=8)
            .map(|j| cutoff_hat(j as f64 / 4.0) * lk.slice(j, &x, &y))
            .sum();
        assert_abs_diff_eq!(lk.eval(&x, &y), direct, epsilon = 1e-13);
        // telescoping against the kernel ladder
        let k3 = lk.space().kernel_upto(3, &x, &y) - lk.space().kernel_upto(2, &x, &y);
        assert_abs_diff_eq!(lk.slice(3, &x, &y), k3, epsilon = 1e-13);
    }

    #[test]
    fn reproduces_degree_k_polynomials() {
        let lk = segment(1.0, 5);
        let coeffs: Vec<f64> = (0..6).map(|i| (i as f64 * 0.7).sin()).collect();
        let pts: Vec<Vec<f64>> = (0..9).map(|i| vec![-0.95 + 0.23 * i as f64]).collect();
        assert!(reproduction_residual(&lk, &coeffs, &pts).unwrap() < 1e-10);
        assert!(reproduction_residual(&lk, &coeffs[..3], &pts).is_err());
    }

    #[test]
    fn sandwich_on_grid() {
        let lk = segment(0.5, 8);
        let grid: Vec<Vec<f64>> = (0..41).map(|i| vec![-1.0 + 0.05 * i as f64]).collect();
        assert!(diagonal_sandwich_violation(&lk, &grid) <= 1e-10);
    }

    #[test]
    fn decay_profile_rejects_bad_input() {
        let lk = segment(0.5, 10);
        assert!(decay_profile(&lk, &[0.0], &[1.0], 4, (2.0, 10.0)).is_err());
        assert!(decay_profile(&lk, &[0.0], &[0.0], 16, (2.0, 10.0)).is_err());
        // k*rho cannot exceed k*pi/2 from the centre
        assert!(decay_profile(&lk, &[0.0], &[1.0], 16, (2.0, 40.0)).is_err());
    }

    #[test]
    fn decay_profile_is_symmetric() {
        let lk = segment(0.5, 12);
        let prof = decay_profile(&lk, &[0.1], &[1.0], 16, (1.0, 8.0)).unwrap();
        let b0 = lk.beta_k(&[0.1]);
        for s in &prof.samples {
            let swapped = lk.eval(&s.y, &[0.1]).abs() / (lk.beta_k(&s.y) * b0).sqrt();
            assert_abs_diff_eq!(s.normalized, swapped, epsilon = 1e-12);
        }
        // at the centre the normalized value is L(x,x)/beta_k in [1, beta_2k/beta_k]
        let (bk, l, b2k) = lk.diagonal(&[0.1]);
        let first = prof.samples[0].normalized;
        assert_abs_diff_eq!(first, l / bk, epsilon = 1e-12);
        assert!(first >= 1.0 - 1e-12 && first <= b2k / bk + 1e-12);
    }

    #[test]
    fn plateau_radius_is_positive() {
        let lk = segment(0.5, 10);
        let eps = diagonal_plateau_radius(&lk, &[0.3], &[vec![1.0], vec![-1.0]], 0.05).unwrap();
        assert!(eps > 0.0 && eps < 3.0, "eps = {eps}");
    }

    #[test]
    fn slices_are_orthogonal() {
        let lk = segment(0.5, 5);
        let r = slice_orthogonality_residual(&lk, &[vec![0.4], vec![-0.8]]).unwrap();
        assert!(r <= 1e-10, "{r}");
    }

    #[test]
    fn angular_integral_matches_measure_mass() {
        // int sin^(2a) over [0, pi] = mass of mu_a
        for a in [0.0, 0.5, 1.0] {
            let m = Measure::ball(1, a).unwrap();
            let v = angular_integral(a, 0.3, 10.0, 8, &|_| 1.0).unwrap();
            assert_abs_diff_eq!(v, m.total_mass(), epsilon = 1e-12);
        }
    }

    #[test]
    fn integral_table_without_decay_grows() {
        let m = Measure::ball(1, 0.5).unwrap();
        let grid = vec![vec![0.0], vec![0.5]];
        let t = integral_estimate_check(&m, &[5, 20], 1.0, 0.0, &grid, BasisOptions::default())
            .unwrap();
        assert!(t.growth_flagged);
        assert!(integral_estimate_check(&m, &[5], 0.0, 4.0, &grid, BasisOptions::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn cutoff_is_in_unit_interval_and_monotone(t in 0.0f64..3.0, dt in 0.0f64..0.5) {
            let (u, v) = (cutoff_hat(t), cutoff_hat(t + dt));
            prop_assert!((0.0..=1.0).contains(&u));
            prop_assert!(v <= u + 1e-15);
        }

        #[test]
        fn kernel_is_symmetric(x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let lk = segment(0.5, 6);
            prop_assert!((lk.eval(&[x], &[y]) - lk.eval(&[y], &[x])).abs() <= 1e-12);
        }
    }
}
