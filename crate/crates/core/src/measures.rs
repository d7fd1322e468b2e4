//! Admissible measures: the weighted ball `(1-|x|^2)^(a-1/2) dV` and Lebesgue
//! measure on boxes and ellipsoids. Exact monomial moments and product
//! quadrature rules of prescribed exactness.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use twofloat::TwoFloat;

use crate::dd;
use crate::error::{Error, Result};
use crate::quadrature::{gauss_jacobi, gauss_legendre};

/// Default cap on the number of nodes of a product quadrature rule.
pub const DEFAULT_NODE_CAP: usize = 4_000_000;

/// Tolerance used when deciding whether a point lies in the closed domain.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Exponent vector of a monomial `x^alpha`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn has_odd_component(&self) -> bool {
        self.0.iter().any(|e| e % 2 == 1)
    }

    /// `x^alpha` evaluated in double precision.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, e) in self.0.iter().enumerate() {
            if *e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

/// `C(n + k, n)`, the dimension of the polynomials of total degree `<= k` in
/// `n` variables.
pub fn poly_dim(n: usize, k: usize) -> usize {
    let mut acc: u128 = 1;
    for i in 1..=n as u128 {
        acc = acc * (k as u128 + i) / i;
    }
    acc as usize
}

/// All multi-indices of length `n` and total degree `<= k` in graded
/// lexicographic order: ascending total degree, and within a degree
/// descending lexicographic order of the exponent tuple (so `x1` precedes
/// `x2`, and `x1^2` precedes `x1 x2`).
pub fn enumerate_multiindices(n: usize, k: usize) -> Vec<MultiIndex> {
    assert!(n >= 1, "dimension must be at least 1");
    let mut out = Vec::with_capacity(poly_dim(n, k));
    let mut buf = vec![0u32; n];
    for d in 0..=k {
        fill_degree(&mut buf, 0, d as u32, &mut out);
    }
    out
}

fn fill_degree(buf: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        out.push(MultiIndex(buf.to_vec()));
        return;
    }
    for e in (0..=remaining).rev() {
        buf[pos] = e;
        fill_degree(buf, pos + 1, remaining - e, out);
    }
}

/// Support and weight of a measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Unit ball with weight `(1-|x|^2)^(a-1/2)`.
    Ball { a: f64 },
    /// Axis-aligned box with Lebesgue weight.
    Box { bounds: Vec<(f64, f64)> },
    /// Centred axis-aligned ellipsoid with Lebesgue weight.
    Ellipsoid { semiaxes: Vec<f64> },
}

/// A product quadrature rule in `n` dimensions; nodes are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Total degree up to which the rule is exact for polynomials.
    pub exactness: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.n..(i + 1) * self.n]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.nodes.chunks_exact(self.n).zip(self.weights.iter().copied())
    }

    /// Largest distance from any node to its nearest neighbour, a crude mesh
    /// size used to bound discretisation errors.
    pub fn mesh(&self) -> f64 {
        let pts: Vec<&[f64]> = self.nodes.chunks_exact(self.n).collect();
        if pts.len() < 2 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for (i, p) in pts.iter().enumerate() {
            let mut best = f64::INFINITY;
            for (j, q) in pts.iter().enumerate() {
                if i != j {
                    best = best.min(euclid(p, q));
                }
            }
            worst = worst.max(best);
        }
        worst
    }
}

pub(crate) fn euclid(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// A measure `mu` on a compact domain in `R^n`. Immutable once built;
/// quadrature tables are computed on first use and shared between clones.
#[derive(Clone)]
pub struct Measure {
    n: usize,
    domain: Domain,
    node_cap: usize,
    rules: Arc<Mutex<BTreeMap<usize, Arc<QuadRule>>>>,
}

impl fmt::Debug for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Measure")
            .field("n", &self.n)
            .field("domain", &self.domain)
            .finish()
    }
}

impl PartialEq for Measure {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.domain == other.domain
    }
}

impl Measure {
    fn from_domain(n: usize, domain: Domain) -> Self {
        Self {
            n,
            domain,
            node_cap: DEFAULT_NODE_CAP,
            rules: Arc::new(Mutex::new(BTreeMap::new())),
        }
    }

    pub fn ball(n: usize, a: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidInput(format!(
                "ball weight exponent a = {a} must be finite and >= 0"
            )));
        }
        Ok(Self::from_domain(n, Domain::Ball { a }))
    }

    pub fn cube(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidInput("box needs at least one axis".into()));
        }
        for &(lo, hi) in &bounds {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidInput(format!("box axis [{lo}, {hi}] is empty")));
            }
        }
        Ok(Self::from_domain(bounds.len(), Domain::Box { bounds }))
    }

    pub fn ellipsoid(semiaxes: Vec<f64>) -> Result<Self> {
        if semiaxes.is_empty() {
            return Err(Error::InvalidInput("ellipsoid needs at least one axis".into()));
        }
        if semiaxes.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput("ellipsoid semiaxes must be positive".into()));
        }
        Ok(Self::from_domain(semiaxes.len(), Domain::Ellipsoid { semiaxes }))
    }

    /// Same measure with a different cap on quadrature node counts.
    pub fn with_node_cap(mut self, cap: usize) -> Self {
        self.node_cap = cap;
        self.rules = Arc::new(Mutex::new(BTreeMap::new()));
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn node_cap(&self) -> usize {
        self.node_cap
    }

    pub fn is_ball(&self) -> bool {
        matches!(self.domain, Domain::Ball { .. })
    }

    /// Exponent `a` of the ball weight, or `None` for Lebesgue domains.
    pub fn ball_exponent(&self) -> Option<f64> {
        match self.domain {
            Domain::Ball { a } => Some(a),
            _ => None,
        }
    }

    /// Exponent governing the boundary behaviour of the Christoffel function:
    /// `a` on the weighted ball, `1/2` for Lebesgue measure on a convex body.
    pub fn effective_exponent(&self) -> f64 {
        self.ball_exponent().unwrap_or(0.5)
    }

    /// Symmetric under `x -> -x` (ball, ellipsoid, boxes centred at 0).
    pub fn is_symmetric(&self) -> bool {
        match &self.domain {
            Domain::Box { bounds } => bounds.iter().all(|(lo, hi)| lo == &-hi),
            _ => true,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.n || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match &self.domain {
            Domain::Ball { .. } => x.iter().map(|v| v * v).sum::<f64>() <= 1.0 + DOMAIN_TOL,
            Domain::Box { bounds } => x
                .iter()
                .zip(bounds)
                .all(|(v, (lo, hi))| *v >= lo - DOMAIN_TOL && *v <= hi + DOMAIN_TOL),
            Domain::Ellipsoid { semiaxes } => {
                x.iter()
                    .zip(semiaxes)
                    .map(|(v, s)| (v / s) * (v / s))
                    .sum::<f64>()
                    <= 1.0 + DOMAIN_TOL
            }
        }
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, measure dimension is {}",
                x.len(),
                self.n
            )));
        }
        if !self.contains(x) {
            return Err(Error::OutsideDomain { point: x.to_vec() });
        }
        Ok(())
    }

    /// Total mass `mu(domain)`.
    pub fn total_mass(&self) -> f64 {
        self.moment(&MultiIndex(vec![0; self.n]))
            .expect("zero-degree moment is always finite")
    }

    /// `int x^alpha d mu` from closed forms: the total mass times an exact
    /// rational product on balls and ellipsoids.
    pub fn moment(&self, alpha: &MultiIndex) -> Result<f64> {
        self.check_index(alpha)?;
        let value = match &self.domain {
            Domain::Ball { a } => ball_moment_dd(self.n, *a, alpha).into(),
            Domain::Box { bounds } => alpha
                .0
                .iter()
                .zip(bounds)
                .map(|(&e, &(lo, hi))| {
                    let p = e as i32 + 1;
                    (hi.powi(p) - lo.powi(p)) / p as f64
                })
                .product(),
            Domain::Ellipsoid { semiaxes } => {
                let scale: f64 = alpha
                    .0
                    .iter()
                    .zip(semiaxes)
                    .map(|(&e, s)| s.powi(e as i32 + 1))
                    .product();
                scale * f64::from(ball_moment_dd(self.n, 0.5, alpha))
            }
        };
        if !value.is_finite() {
            return Err(Error::DegreeTooLarge {
                k: alpha.degree(),
                cap: alpha.degree().saturating_sub(1),
            });
        }
        Ok(value)
    }

    /// Moment in double-double arithmetic, used by the extended-precision
    /// Gram assembly.
    pub(crate) fn moment_dd(&self, alpha: &MultiIndex) -> TwoFloat {
        match &self.domain {
            Domain::Ball { a } => ball_moment_dd(self.n, *a, alpha),
            Domain::Box { bounds } => {
                let mut acc = TwoFloat::from(1.0);
                for (&e, &(lo, hi)) in alpha.0.iter().zip(bounds) {
                    let p = e as i32 + 1;
                    let num = dd::powi(hi, p as u32) - dd::powi(lo, p as u32);
                    acc = dd::div(acc * num, TwoFloat::from(p as f64));
                }
                acc
            }
            Domain::Ellipsoid { semiaxes } => {
                let mut acc = ball_moment_dd(self.n, 0.5, alpha);
                for (&e, &s) in alpha.0.iter().zip(semiaxes) {
                    acc *= dd::powi(s, e + 1);
                }
                acc
            }
        }
    }

    fn check_index(&self, alpha: &MultiIndex) -> Result<()> {
        if alpha.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "multi-index has length {}, measure dimension is {}",
                alpha.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Quadrature rule exact for all polynomials of total degree `<= order`.
    ///
    /// * ball, n = 1: Gauss–Jacobi for `(1-x^2)^(a-1/2)`;
    /// * ball, n >= 2: Gauss–Jacobi in `t = 2r^2 - 1` times a product rule on
    ///   the sphere (trapezoid in azimuth, Gauss–Jacobi in each polar angle);
    /// * box: tensor Gauss–Legendre;
    /// * ellipsoid: the Lebesgue ball rule pushed forward by the semiaxes.
    pub fn rule(&self, order: usize) -> Result<Arc<QuadRule>> {
        let order = order.max(1);
        if let Some(rule) = self.rules.lock().expect("rule cache poisoned").get(&order) {
            return Ok(Arc::clone(rule));
        }
        let rule = Arc::new(self.build_rule(order)?);
        let mut cache = self.rules.lock().expect("rule cache poisoned");
        Ok(Arc::clone(cache.entry(order).or_insert(rule)))
    }

    /// Node count of `rule(order)` without building it.
    pub fn rule_size(&self, order: usize) -> usize {
        let order = order.max(1);
        let g = (order + 2) / 2;
        match &self.domain {
            Domain::Ball { .. } | Domain::Ellipsoid { .. } if self.n == 1 => g,
            Domain::Ball { .. } | Domain::Ellipsoid { .. } => {
                ((order / 2) / 2 + 1) * sphere_rule_size(self.n, order)
            }
            Domain::Box { .. } => g.saturating_pow(self.n as u32),
        }
    }

    fn build_rule(&self, order: usize) -> Result<QuadRule> {
        let size = self.rule_size(order);
        if size > self.node_cap {
            return Err(Error::OrderTooLarge {
                order,
                nodes: size,
                cap: self.node_cap,
            });
        }
        match &self.domain {
            Domain::Ball { a } => ball_rule(self.n, *a, order),
            Domain::Box { bounds } => {
                let g = gauss_legendre((order + 2) / 2)?;
                let axes: Vec<(Vec<f64>, Vec<f64>)> = bounds
                    .iter()
                    .map(|&(lo, hi)| {
                        let half = 0.5 * (hi - lo);
                        let mid = 0.5 * (hi + lo);
                        (
                            g.nodes.iter().map(|t| mid + half * t).collect(),
                            g.weights.iter().map(|w| w * half).collect(),
                        )
                    })
                    .collect();
                let (nodes, weights) = tensor(&axes);
                Ok(QuadRule {
                    n: self.n,
                    nodes,
                    weights,
                    exactness: 2 * g.len() - 1,
                })
            }
            Domain::Ellipsoid { semiaxes } => {
                let mut rule = ball_rule(self.n, 0.5, order)?;
                let det: f64 = semiaxes.iter().product();
                for node in rule.nodes.chunks_exact_mut(self.n) {
                    for (v, s) in node.iter_mut().zip(semiaxes) {
                        *v *= s;
                    }
                }
                for w in &mut rule.weights {
                    *w *= det;
                }
                Ok(rule)
            }
        }
    }

    /// `int f d mu` by the rule of exactness `order`; nodes are visited in a
    /// fixed order so the sum is reproducible.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64, order: usize) -> Result<f64> {
        let rule = self.rule(order)?;
        Ok(rule.iter().map(|(x, w)| w * f(x)).sum())
    }
}

/// `ln int_B x^alpha (1-|x|^2)^(a-1/2) dx` via Gamma functions, or `None`
/// if the moment vanishes. Independent check on `ball_moment_dd`.
#[cfg(test)]
fn ball_moment_ln(n: usize, a: f64, alpha: &MultiIndex) -> Option<f64> {
    if alpha.has_odd_component() {
        return None;
    }
    let half: f64 = alpha.degree() as f64 / 2.0;
    let mut acc = ln_gamma(a + 0.5) - ln_gamma(half + n as f64 / 2.0 + a + 0.5);
    for &e in &alpha.0 {
        acc += ln_gamma(e as f64 / 2.0 + 0.5);
    }
    Some(acc)
}

/// Ball moment as the zero-order mass times an exact rational product
/// evaluated in double-double.
fn ball_moment_dd(n: usize, a: f64, alpha: &MultiIndex) -> TwoFloat {
    if alpha.has_odd_component() {
        return TwoFloat::from(0.0);
    }
    let s = n as f64 / 2.0 + a + 0.5;
    let mass = ball_mass_dd(n, a);
    let mut numer: Vec<f64> = Vec::new();
    for &e in &alpha.0 {
        for j in 0..e / 2 {
            numer.push(j as f64 + 0.5);
        }
    }
    let denom: Vec<f64> = (0..alpha.degree() / 2).map(|j| s + j as f64).collect();
    let mut acc = mass;
    for (num, den) in numer.iter().zip(&denom) {
        acc = dd::div(acc * *num, TwoFloat::from(*den));
    }
    acc
}

/// `pi^(n/2) Gamma(a+1/2) / Gamma(a+1/2+n/2)`. Exact up to double-double
/// rounding when `2a` is an integer; otherwise one `ln_gamma` ratio remains.
fn ball_mass_dd(n: usize, a: f64) -> TwoFloat {
    let base = a + 0.5;
    let half_n = n / 2;
    let mut acc = TwoFloat::from(1.0);
    let shift = if n % 2 == 1 {
        // sqrt(pi) Gamma(base) / Gamma(base + 1/2)
        acc = sqrt_pi_gamma_half_ratio(base);
        0.5
    } else {
        0.0
    };
    for _ in 0..half_n {
        acc *= dd::pi();
    }
    for j in 0..half_n {
        acc = dd::div(acc, TwoFloat::from(base + shift + j as f64));
    }
    acc
}

/// `sqrt(pi) Gamma(x) / Gamma(x + 1/2)` for `x >= 1/2`.
fn sqrt_pi_gamma_half_ratio(x: f64) -> TwoFloat {
    let twice = 2.0 * x;
    if twice == twice.round() && twice < 1e6 {
        // reduce to x0 = 1/2 (value pi) or x0 = 1 (value 2)
        let (x0, mut acc) = if (twice as u64) % 2 == 1 {
            (0.5, dd::pi())
        } else {
            (1.0, TwoFloat::from(2.0))
        };
        let steps = (x - x0).round() as usize;
        for j in 0..steps {
            let t = x0 + j as f64;
            acc = dd::div(acc * t, TwoFloat::from(t + 0.5));
        }
        acc
    } else {
        let ln = 0.5 * PI.ln() + ln_gamma(x) - ln_gamma(x + 0.5);
        TwoFloat::from(ln.exp())
    }
}

fn tensor(axes: &[(Vec<f64>, Vec<f64>)]) -> (Vec<f64>, Vec<f64>) {
    let n = axes.len();
    let total: usize = axes.iter().map(|(x, _)| x.len()).product();
    let mut nodes = Vec::with_capacity(total * n);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let mut w = 1.0;
        for (d, &i) in idx.iter().enumerate() {
            nodes.push(axes[d].0[i]);
            w *= axes[d].1[i];
        }
        weights.push(w);
        for d in (0..n).rev() {
            idx[d] += 1;
            if idx[d] < axes[d].0.len() {
                break;
            }
            idx[d] = 0;
        }
    }
    (nodes, weights)
}

fn sphere_rule_size(embed: usize, order: usize) -> usize {
    if embed == 2 {
        let m = order + 1;
        m + m % 2
    } else {
        (order + 2) / 2 * sphere_rule_size(embed - 1, order)
    }
}

/// Antipodally symmetric product rule on the unit sphere `S^{embed-1}`,
/// exact for polynomials of degree `<= order` restricted to the sphere.
fn sphere_rule(embed: usize, order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if embed == 2 {
        let mut m = order + 1;
        m += m % 2;
        let step = 2.0 * PI / m as f64;
        let mut nodes = Vec::with_capacity(2 * m);
        for i in 0..m {
            let t = i as f64 * step;
            nodes.push(t.cos());
            nodes.push(t.sin());
        }
        return Ok((nodes, vec![step; m]));
    }
    // x = (t, sqrt(1-t^2) w), surface measure (1-t^2)^((embed-3)/2) dt dw
    let e = (embed as f64 - 3.0) / 2.0;
    let g = gauss_jacobi((order + 2) / 2, e, e)?;
    let (sub_nodes, sub_weights) = sphere_rule(embed - 1, order)?;
    let sub = embed - 1;
    let mut nodes = Vec::with_capacity(g.len() * sub_weights.len() * embed);
    let mut weights = Vec::with_capacity(g.len() * sub_weights.len());
    for (&t, &wt) in g.nodes.iter().zip(&g.weights) {
        let s = (1.0 - t * t).max(0.0).sqrt();
        for (omega, &wo) in sub_nodes.chunks_exact(sub).zip(&sub_weights) {
            nodes.push(t);
            nodes.extend(omega.iter().map(|o| s * o));
            weights.push(wt * wo);
        }
    }
    Ok((nodes, weights))
}

fn ball_rule(n: usize, a: f64, order: usize) -> Result<QuadRule> {
    if n == 1 {
        let g = gauss_jacobi((order + 2) / 2, a - 0.5, a - 0.5)?;
        return Ok(QuadRule {
            n: 1,
            exactness: 2 * g.len() - 1,
            nodes: g.nodes,
            weights: g.weights,
        });
    }
    // r^2 = (1+t)/2 turns r^{n-1}(1-r^2)^{a-1/2} dr into a Jacobi weight in t
    let radial = gauss_jacobi((order / 2) / 2 + 1, a - 0.5, n as f64 / 2.0 - 1.0)?;
    let scale = 2f64.powf(-a - n as f64 / 2.0 - 0.5);
    let (dirs, dir_w) = sphere_rule(n, order)?;
    let mut nodes = Vec::with_capacity(radial.len() * dir_w.len() * n);
    let mut weights = Vec::with_capacity(radial.len() * dir_w.len());
    for (&t, &wt) in radial.nodes.iter().zip(&radial.weights) {
        let r = (0.5 * (1.0 + t)).max(0.0).sqrt();
        for (omega, &wo) in dirs.chunks_exact(n).zip(&dir_w) {
            nodes.extend(omega.iter().map(|o| r * o));
            weights.push(scale * wt * wo);
        }
    }
    Ok(QuadRule {
        n,
        nodes,
        weights,
        exactness: order.max(1),
    })
}

/// Wire format of a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub kind: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semiaxes: Option<Vec<f64>>,
}

impl TryFrom<MeasureSpec> for Measure {
    type Error = Error;

    fn try_from(spec: MeasureSpec) -> Result<Self> {
        let m = match spec.kind.as_str() {
            "ball" => Measure::ball(spec.n, spec.a.unwrap_or(0.5))?,
            "box" => {
                let bounds = spec
                    .bounds
                    .unwrap_or_else(|| vec![[-1.0, 1.0]; spec.n])
                    .into_iter()
                    .map(|[lo, hi]| (lo, hi))
                    .collect();
                Measure::cube(bounds)?
            }
            "ellipsoid" => Measure::ellipsoid(
                spec.semiaxes
                    .ok_or_else(|| Error::InvalidInput("ellipsoid requires \"semiaxes\"".into()))?,
            )?,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown measure kind \"{other}\" (expected ball, box or ellipsoid)"
                )))
            }
        };
        if m.n() != spec.n {
            return Err(Error::InvalidInput(format!(
                "field \"n\" = {} disagrees with the domain dimension {}",
                spec.n,
                m.n()
            )));
        }
        if spec.kind != "ball" && spec.a.is_some() {
            return Err(Error::InvalidInput(
                "field \"a\" is only valid for ball measures".into(),
            ));
        }
        Ok(m)
    }
}

impl From<&Measure> for MeasureSpec {
    fn from(m: &Measure) -> Self {
        match m.domain() {
            Domain::Ball { a } => MeasureSpec {
                kind: "ball".into(),
                n: m.n(),
                a: Some(*a),
                bounds: None,
                semiaxes: None,
            },
            Domain::Box { bounds } => MeasureSpec {
                kind: "box".into(),
                n: m.n(),
                a: None,
                bounds: Some(bounds.iter().map(|&(lo, hi)| [lo, hi]).collect()),
                semiaxes: None,
            },
            Domain::Ellipsoid { semiaxes } => MeasureSpec {
                kind: "ellipsoid".into(),
                n: m.n(),
                a: None,
                bounds: None,
                semiaxes: Some(semiaxes.clone()),
            },
        }
    }
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureSpec::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = MeasureSpec::deserialize(d)?;
        Measure::try_from(spec).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn multiindex_counts() {
        assert_eq!(enumerate_multiindices(2, 3).len(), 10);
        assert_eq!(enumerate_multiindices(1, 0), vec![MultiIndex(vec![0])]);
        assert_eq!(enumerate_multiindices(3, 2).len(), 10);
        assert_eq!(poly_dim(2, 15), 136);
    }

    #[test]
    fn graded_lex_order() {
        let idx = enumerate_multiindices(2, 2);
        let want: Vec<Vec<u32>> = vec![
            vec![0, 0],
            vec![1, 0],
            vec![0, 1],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
        ];
        assert_eq!(idx.into_iter().map(|m| m.0).collect::<Vec<_>>(), want);
    }

    #[test]
    fn no_duplicates_and_graded() {
        let idx = enumerate_multiindices(3, 6);
        let set: std::collections::BTreeSet<_> = idx.iter().cloned().collect();
        assert_eq!(set.len(), idx.len());
        assert!(idx.windows(2).all(|w| w[0].degree() <= w[1].degree()));
    }

    #[test]
    fn moment_examples() {
        let m = Measure::ball(1, 0.5).unwrap();
        assert_abs_diff_eq!(m.moment(&MultiIndex(vec![2])).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        let disk = Measure::ball(2, 0.5).unwrap();
        assert_abs_diff_eq!(disk.moment(&MultiIndex(vec![0, 0])).unwrap(), PI, epsilon = 1e-14);
        let arcsine = Measure::ball(1, 0.0).unwrap();
        assert_eq!(arcsine.moment(&MultiIndex(vec![1])).unwrap(), 0.0);
        assert_abs_diff_eq!(arcsine.total_mass(), PI, epsilon = 1e-14);
    }

    #[test]
    fn high_degree_moment_stays_finite() {
        let m = Measure::ball(2, 1.0).unwrap();
        let v = m.moment(&MultiIndex(vec![120, 40])).unwrap();
        assert!(v > 0.0 && v.is_finite());
    }

    #[test]
    fn moment_dimension_mismatch() {
        let m = Measure::ball(2, 0.5).unwrap();
        assert!(m.moment(&MultiIndex(vec![1])).is_err());
    }

    #[test]
    fn product_moments_agree_with_gamma_formula() {
        for (n, a) in [(1, 0.0), (2, 0.0), (2, 1.5), (3, 1.0)] {
            let m = Measure::ball(n, a).unwrap();
            for alpha in enumerate_multiindices(n, 10) {
                let got = m.moment(&alpha).unwrap();
                let want = ball_moment_ln(n, a, &alpha).map(f64::exp).unwrap_or(0.0);
                assert!((got - want).abs() <= 1e-12 * want.abs(), "{m:?} {alpha}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn double_double_moments_round_to_double_moments() {
        let m = Measure::cube(vec![(-1.0, 1.0), (0.0, 2.0)]).unwrap();
        for alpha in enumerate_multiindices(2, 10) {
            let a = m.moment(&alpha).unwrap();
            let b = f64::from(m.moment_dd(&alpha));
            assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()), "{alpha}: {a} vs {b}");
        }
    }

    #[test]
    fn integrate_examples() {
        let m = Measure::ball(1, 0.5).unwrap();
        assert_abs_diff_eq!(m.integrate(|_| 1.0, 3).unwrap(), 2.0, epsilon = 1e-14);
        let disk = Measure::ball(2, 0.5).unwrap();
        assert_abs_diff_eq!(disk.integrate(|x| x[0] * x[0], 2).unwrap(), PI / 4.0, epsilon = 1e-14);
        let arcsine = Measure::ball(1, 0.0).unwrap();
        assert_abs_diff_eq!(arcsine.integrate(|_| 1.0, 1).unwrap(), PI, epsilon = 1e-14);
    }

    #[test]
    fn nodes_stay_in_closed_domain() {
        for m in [
            Measure::ball(3, 0.0).unwrap(),
            Measure::ellipsoid(vec![1.0, 3.0]).unwrap(),
            Measure::cube(vec![(0.0, 1.0); 2]).unwrap(),
        ] {
            let r = m.rule(9).unwrap();
            for (x, w) in r.iter() {
                assert!(m.contains(x));
                assert!(w > 0.0);
            }
        }
    }

    #[test]
    fn node_cap_enforced() {
        let m = Measure::ball(3, 0.5).unwrap().with_node_cap(100);
        assert!(matches!(m.rule(20), Err(Error::OrderTooLarge { .. })));
        assert_eq!(m.rule_size(4), m.with_node_cap(10_000).rule(4).unwrap().len());
    }

    #[test]
    fn json_round_trip() {
        let m: Measure = serde_json::from_str(r#"{"kind":"ball","n":2,"a":1.5}"#).unwrap();
        assert_eq!(m, Measure::ball(2, 1.5).unwrap());
        let b: Measure =
            serde_json::from_str(r#"{"kind":"box","n":2,"bounds":[[-1,1],[0,2]]}"#).unwrap();
        let back: Measure = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        assert_eq!(b, back);
        assert!(serde_json::from_str::<Measure>(r#"{"kind":"ball","n":2,"a":-1}"#).is_err());
        assert!(serde_json::from_str::<Measure>(r#"{"kind":"torus","n":2}"#).is_err());
    }

    fn measure_strategy() -> impl Strategy<Value = Measure> {
        prop_oneof![
            (1usize..=3, prop_oneof![Just(0.0), Just(0.5), Just(1.0), 0.0f64..3.0])
                .prop_map(|(n, a)| Measure::ball(n, a).unwrap()),
            (1usize..=3, -2.0f64..0.0, 0.2f64..2.0)
                .prop_map(|(n, lo, w)| Measure::cube(vec![(lo, lo + w); n]).unwrap()),
            proptest::collection::vec(0.3f64..2.0, 1..=3)
                .prop_map(|s| Measure::ellipsoid(s).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn moment_matches_quadrature(m in measure_strategy(), seed in 0u64..1000) {
            let all = enumerate_multiindices(m.n(), 8);
            let alpha = &all[(seed as usize) % all.len()];
            let exact = m.moment(alpha).unwrap();
            let quad = m.integrate(|x| alpha.eval(x), alpha.degree()).unwrap();
            prop_assert!((exact - quad).abs() <= 1e-12 * (1.0 + exact.abs()),
                "{:?} {}: {} vs {}", m, alpha, exact, quad);
        }

        #[test]
        fn odd_moments_vanish_on_symmetric(n in 1usize..=3, a in 0.0f64..2.0, seed in 0u64..1000) {
            let m = Measure::ball(n, a).unwrap();
            let odd: Vec<_> = enumerate_multiindices(n, 7).into_iter().filter(|i| i.has_odd_component()).collect();
            let alpha = &odd[(seed as usize) % odd.len()];
            prop_assert_eq!(m.moment(alpha).unwrap(), 0.0);
            let sym = Measure::cube(vec![(-1.5, 1.5); n]).unwrap();
            prop_assert_eq!(sym.moment(alpha).unwrap(), 0.0);
        }

        #[test]
        fn integrate_is_linear(c1 in -3.0f64..3.0, c2 in -3.0f64..3.0) {
            let m = Measure::ball(2, 0.5).unwrap();
            let f = |x: &[f64]| x[0] * x[0] * x[1] + 1.0;
            let g = |x: &[f64]| (x[0] + x[1]).powi(4);
            let lhs = m.integrate(|x| c1 * f(x) + c2 * g(x), 6).unwrap();
            let rhs = c1 * m.integrate(f, 6).unwrap() + c2 * m.integrate(g, 6).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn integrate_monotone_for_nonnegative() {
        let m = Measure::ball(2, 1.0).unwrap();
        let lo = m.integrate(|x| x[0] * x[0], 4).unwrap();
        let hi = m.integrate(|x| x[0] * x[0] + x[1].powi(4), 4).unwrap();
        assert!(hi >= lo && lo >= 0.0);
    }
}
