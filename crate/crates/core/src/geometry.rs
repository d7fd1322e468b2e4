//! The anisotropic distance on the ball, its box proxy, metric-ball volume
//! proxies, boundary distances and masses of the equilibrium measure.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{euclid, Domain, Measure, DOMAIN_TOL};
use crate::quadrature::gauss_legendre;

/// `rho(x, y) = arccos(<x,y> + sqrt(1-|x|^2) sqrt(1-|y|^2))`: the geodesic
/// distance between the lifts of `x` and `y` to the upper unit hemisphere.
pub fn rho(x: &[f64], y: &[f64]) -> f64 {
    let nx: f64 = x.iter().map(|v| v * v).sum();
    let ny: f64 = y.iter().map(|v| v * v).sum();
    let inner: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let c = inner + (1.0 - nx).max(0.0).sqrt() * (1.0 - ny).max(0.0).sqrt();
    let c = c.clamp(-1.0, 1.0);
    if c > 0.999 {
        // arccos loses half the digits near 1; use the chord of the lifts instead
        let hx = (1.0 - nx).max(0.0).sqrt();
        let hy = (1.0 - ny).max(0.0).sqrt();
        let chord2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            + (hx - hy) * (hx - hy);
        return 2.0 * (0.5 * chord2.sqrt()).min(1.0).asin();
    }
    c.acos()
}

/// Box-proxy quasi-metric: the largest per-axis arc distance
/// `|arccos s_i - arccos t_i|` after mapping each axis affinely onto
/// `[-1, 1]`. Its balls are boxes of side `~ eps` along an axis in the bulk
/// and `~ eps^2 + eps sqrt(d)` at distance `d` from a face.
pub fn box_proxy_distance(bounds: &[(f64, f64)], x: &[f64], y: &[f64]) -> f64 {
    bounds
        .iter()
        .zip(x.iter().zip(y))
        .map(|(&(lo, hi), (&a, &b))| {
            let s = (2.0 * (a - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0);
            let t = (2.0 * (b - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0);
            (s.acos() - t.acos()).abs()
        })
        .fold(0.0, f64::max)
}

/// Which distance a metric ball is taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RhoBall,
    Euclidean,
    BoxProxy,
}

/// The natural quasi-metric of a domain: `rho` on the ball, `rho` pulled
/// back through the semiaxes on an ellipsoid, the box proxy on a box.
pub fn domain_distance(m: &Measure, x: &[f64], y: &[f64]) -> f64 {
    match m.domain() {
        Domain::Ball { .. } => rho(x, y),
        Domain::Box { bounds } => box_proxy_distance(bounds, x, y),
        Domain::Ellipsoid { semiaxes } => {
            let u: Vec<f64> = x.iter().zip(semiaxes).map(|(v, s)| v / s).collect();
            let v: Vec<f64> = y.iter().zip(semiaxes).map(|(v, s)| v / s).collect();
            rho(&u, &v)
        }
    }
}

pub fn domain_metric(m: &Measure) -> Metric {
    match m.domain() {
        Domain::Box { .. } => Metric::BoxProxy,
        _ => Metric::RhoBall,
    }
}

/// `{y : dist(center, y) < radius}` for a chosen metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBall {
    pub center: Vec<f64>,
    pub radius: f64,
    pub metric: Metric,
}

impl MetricBall {
    pub fn new(center: Vec<f64>, radius: f64, metric: Metric) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("radius {radius} must be positive")));
        }
        if metric == Metric::RhoBall && radius > PI {
            return Err(Error::InvalidInput(format!(
                "rho ranges in [0, pi]; radius {radius} is too large"
            )));
        }
        Ok(Self {
            center,
            radius,
            metric,
        })
    }

    pub fn contains(&self, m: &Measure, y: &[f64]) -> bool {
        let d = match self.metric {
            Metric::Euclidean => euclid(&self.center, y),
            Metric::RhoBall | Metric::BoxProxy => domain_distance(m, &self.center, y),
        };
        d < self.radius
    }
}

/// Proxy volumes of `B(x, eps)`: Lebesgue and weighted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallVolume {
    pub lebesgue: f64,
    pub weighted: f64,
}

/// Standing proxy formulas: on the ball
/// `eps^n (sqrt(1-|x|^2) + eps)` (Lebesgue) and
/// `eps^n (sqrt(1-|x|^2) + eps)^(2a)` (weighted). Boxes use the per-axis
/// product of the same one-dimensional law, ellipsoids the ball law in the
/// pulled-back coordinates times the Jacobian.
pub fn metric_ball_volume(m: &Measure, x: &[f64], eps: f64) -> Result<BallVolume> {
    if !(eps > 0.0) || eps > PI {
        return Err(Error::InvalidInput(format!("eps = {eps} must lie in (0, pi]")));
    }
    m.check_point(x)?;
    let n = m.n() as i32;
    Ok(match m.domain() {
        Domain::Ball { a } => {
            let s = (1.0 - x.iter().map(|v| v * v).sum::<f64>()).max(0.0).sqrt();
            BallVolume {
                lebesgue: eps.powi(n) * (s + eps),
                weighted: eps.powi(n) * (s + eps).powf(2.0 * a),
            }
        }
        Domain::Box { bounds } => {
            let v: f64 = bounds
                .iter()
                .zip(x)
                .map(|(&(lo, hi), &xi)| {
                    let s = (2.0 * (xi - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0);
                    0.5 * (hi - lo) * eps * ((1.0 - s * s).sqrt() + eps)
                })
                .product();
            BallVolume {
                lebesgue: v,
                weighted: v,
            }
        }
        Domain::Ellipsoid { semiaxes } => {
            let det: f64 = semiaxes.iter().product();
            let s2: f64 = x.iter().zip(semiaxes).map(|(v, s)| (v / s) * (v / s)).sum();
            let s = (1.0 - s2).max(0.0).sqrt();
            let v = det * eps.powi(n) * (s + eps);
            BallVolume {
                lebesgue: v,
                weighted: v,
            }
        }
    })
}

/// Seeded Monte-Carlo estimate of the actual volumes of the metric ball
/// `B(x, eps)` in the domain's own metric.
pub fn monte_carlo_ball_volume(
    m: &Measure,
    x: &[f64],
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<BallVolume> {
    m.check_point(x)?;
    let n = m.n();
    // rho dominates the Euclidean distance, so a Euclidean box of half-width
    // eps (scaled by the semiaxes on an ellipsoid) contains the ball
    let (lo, hi): (Vec<f64>, Vec<f64>) = match m.domain() {
        Domain::Ball { .. } => x.iter().map(|v| (v - eps, v + eps)).unzip(),
        Domain::Ellipsoid { semiaxes } => x
            .iter()
            .zip(semiaxes)
            .map(|(v, s)| (v - s * eps, v + s * eps))
            .unzip(),
        Domain::Box { bounds } => bounds
            .iter()
            .zip(x)
            .map(|(&(l, h), &v)| {
                let s = (2.0 * (v - l) / (h - l) - 1.0).clamp(-1.0, 1.0);
                let th = s.acos();
                let a = (th + eps).min(PI).cos();
                let b = (th - eps).max(0.0).cos();
                (l + 0.5 * (a + 1.0) * (h - l), l + 0.5 * (b + 1.0) * (h - l))
            })
            .unzip(),
    };
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let a = m.ball_exponent();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = vec![0.0; n];
    let (mut leb, mut wt) = (0.0, 0.0);
    for _ in 0..samples {
        for i in 0..n {
            y[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
        }
        if !m.contains(&y) || domain_distance(m, x, &y) >= eps {
            continue;
        }
        leb += 1.0;
        wt += match a {
            Some(a) => {
                let r2: f64 = y.iter().map(|v| v * v).sum();
                (1.0 - r2).max(1e-300).powf(a - 0.5)
            }
            None => 1.0,
        };
    }
    let scale = box_vol / samples.max(1) as f64;
    Ok(BallVolume {
        lebesgue: leb * scale,
        weighted: wt * scale,
    })
}

/// Euclidean distance from `x` to the boundary of the domain.
pub fn boundary_distance(m: &Measure, x: &[f64]) -> f64 {
    match m.domain() {
        Domain::Ball { .. } => (1.0 - x.iter().map(|v| v * v).sum::<f64>().sqrt()).max(0.0),
        Domain::Box { bounds } => bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| (v - lo).min(hi - v))
            .fold(f64::INFINITY, f64::min)
            .max(0.0),
        Domain::Ellipsoid { semiaxes } => ellipsoid_boundary_distance(semiaxes, x),
    }
}

/// Closest boundary point via the normal equation
/// `y_i = s_i^2 x_i / (s_i^2 + t)`, `sum (y_i/s_i)^2 = 1`, solved for
/// `t in (-min s_i^2, 0]` by safeguarded Newton to 1e-10 (relative in `t`).
fn ellipsoid_boundary_distance(semiaxes: &[f64], x: &[f64]) -> f64 {
    let q: f64 = x.iter().zip(semiaxes).map(|(v, s)| (v / s) * (v / s)).sum();
    if q >= 1.0 {
        return 0.0;
    }
    let s2: Vec<f64> = semiaxes.iter().map(|s| s * s).collect();
    let smin = s2.iter().copied().fold(f64::INFINITY, f64::min);
    let f = |t: f64| -> (f64, f64) {
        let mut val = -1.0;
        let mut der = 0.0;
        for (xi, si) in x.iter().zip(&s2) {
            let d = si + t;
            val += si * xi * xi / (d * d);
            der -= 2.0 * si * xi * xi / (d * d * d);
        }
        (val, der)
    };
    let candidate = |t: f64| -> f64 {
        let y: Vec<f64> = x.iter().zip(&s2).map(|(xi, si)| si * xi / (si + t)).collect();
        euclid(x, &y)
    };
    // if every coordinate on a shortest axis vanishes the root may sit at the pole
    let on_short_axis_zero = x
        .iter()
        .zip(&s2)
        .filter(|(_, si)| (**si - smin).abs() <= 1e-15 * smin)
        .all(|(xi, _)| *xi == 0.0);
    let mut lo = -smin;
    let mut hi = 0.0;
    if on_short_axis_zero {
        let t = -smin * (1.0 - 1e-15);
        if f(t).0 <= 0.0 {
            // nearest point lies on the shortest axis plane: y_j for long axes,
            // remaining mass along the short axis
            let mut rest = 1.0;
            let mut y = Vec::with_capacity(x.len());
            let mut short = None;
            for (i, (xi, si)) in x.iter().zip(&s2).enumerate() {
                if (si - smin).abs() <= 1e-15 * smin {
                    y.push(0.0);
                    short.get_or_insert(i);
                } else {
                    let yi = si * xi / (si - smin);
                    rest -= yi * yi / si;
                    y.push(yi);
                }
            }
            if let Some(i) = short {
                y[i] = (rest.max(0.0) * smin).sqrt();
            }
            return euclid(x, &y);
        }
    }
    let mut t = 0.0;
    for _ in 0..200 {
        let (val, der) = f(t);
        if val > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let mut next = t - val / der;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-10 * smin.max(1e-300) * 1e-2 {
            t = next;
            break;
        }
        t = next;
    }
    candidate(t)
}

/// Box domains only: whether `x` is within 10% of the side length of two or
/// more faces, where the smooth-boundary comparabilities need not hold.
pub fn near_corner(m: &Measure, x: &[f64]) -> bool {
    match m.domain() {
        Domain::Box { bounds } => {
            bounds
                .iter()
                .zip(x)
                .filter(|(&(lo, hi), &v)| (v - lo).min(hi - v) < 0.1 * (hi - lo))
                .count()
                >= 2
        }
        _ => false,
    }
}

/// Unnormalised density of the equilibrium measure: `(1-|x|^2)^(-1/2)` on
/// the ball (exact), `d(x, boundary)^(-1/2)` on boxes and ellipsoids
/// (comparability only).
pub fn equilibrium_density(m: &Measure, x: &[f64]) -> f64 {
    match m.domain() {
        Domain::Ball { .. } => {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            1.0 / (1.0 - r2).max(1e-300).sqrt()
        }
        _ => 1.0 / boundary_distance(m, x).max(1e-300).sqrt(),
    }
}

/// Region for equilibrium masses and density counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    Euclidean { center: Vec<f64>, radius: f64 },
    Metric(MetricBall),
}

impl Region {
    pub fn euclidean(center: Vec<f64>, radius: f64) -> Self {
        Region::Euclidean { center, radius }
    }

    pub fn contains(&self, m: &Measure, y: &[f64]) -> bool {
        match self {
            Region::Euclidean { center, radius } => euclid(center, y) < *radius,
            Region::Metric(b) => b.contains(m, y),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Region::Euclidean { center, radius } => format!("E({center:?},{radius})"),
            Region::Metric(b) => format!("{:?}({:?},{})", b.metric, b.center, b.radius),
        }
    }
}

/// `int_0^theta sin^m(t) dt`.
pub(crate) fn sin_power_integral(m: usize, theta: f64) -> f64 {
    match m {
        0 => theta,
        1 => 1.0 - theta.cos(),
        _ => {
            let mf = m as f64;
            -theta.sin().powi(m as i32 - 1) * theta.cos() / mf
                + (mf - 1.0) / mf * sin_power_integral(m - 2, theta)
        }
    }
}

/// Normalised equilibrium mass of a region (a number in `[0, 1]`).
///
/// One-dimensional ball: the arcsine law in closed form. Higher-dimensional
/// ball: centred regions in closed form, off-centre Euclidean balls by polar
/// quadrature around the centre, `rho`-balls as hemisphere caps. Boxes and
/// ellipsoids use the `d^(-1/2)` density normalised numerically.
pub fn equilibrium_mass(m: &Measure, region: &Region) -> Result<f64> {
    let n = m.n();
    match region {
        Region::Euclidean { center, radius } => {
            if center.len() != n || !(*radius > 0.0) {
                return Err(Error::InvalidInput("region centre/radius malformed".into()));
            }
            if !euclidean_region_inside(m, center, *radius) {
                return Err(Error::RegionOutsideDomain);
            }
            match m.domain() {
                Domain::Ball { .. } if n == 1 => {
                    let lo = (center[0] - radius).max(-1.0);
                    let hi = (center[0] + radius).min(1.0);
                    Ok((hi.asin() - lo.asin()) / PI)
                }
                Domain::Ball { .. } if center.iter().all(|c| *c == 0.0) => {
                    let r = radius.min(1.0);
                    Ok(sin_power_integral(n - 1, r.asin())
                        / sin_power_integral(n - 1, PI / 2.0))
                }
                Domain::Ball { .. } => {
                    let total = Measure::ball(n, 0.0)?.total_mass();
                    Ok((polar_integral(m, center, *radius)? / total).clamp(0.0, 1.0))
                }
                _ => {
                    let total = lebesgue_equilibrium_total(m)?;
                    Ok((polar_integral(m, center, *radius)? / total).clamp(0.0, 1.0))
                }
            }
        }
        Region::Metric(ball) => {
            if ball.center.len() != n || !m.contains(&ball.center) {
                return Err(Error::RegionOutsideDomain);
            }
            match (m.domain(), ball.metric) {
                (_, Metric::Euclidean) => equilibrium_mass(
                    m,
                    &Region::Euclidean {
                        center: ball.center.clone(),
                        radius: ball.radius,
                    },
                ),
                (Domain::Ball { .. }, Metric::RhoBall) => Ok(hemisphere_cap_mass(&ball.center, ball.radius)),
                _ => Err(Error::InvalidInput(
                    "metric regions are supported for rho-balls on ball measures".into(),
                )),
            }
        }
    }
}

fn euclidean_region_inside(m: &Measure, center: &[f64], radius: f64) -> bool {
    match m.domain() {
        Domain::Ball { .. } => {
            center.iter().map(|v| v * v).sum::<f64>().sqrt() + radius <= 1.0 + DOMAIN_TOL
        }
        Domain::Box { bounds } => bounds
            .iter()
            .zip(center)
            .all(|(&(lo, hi), &c)| c - radius >= lo - DOMAIN_TOL && c + radius <= hi + DOMAIN_TOL),
        Domain::Ellipsoid { .. } => {
            m.contains(center) && boundary_distance(m, center) + DOMAIN_TOL >= radius
        }
    }
}

/// Integral of the unnormalised equilibrium density over the Euclidean ball
/// `B(center, radius)`, in polar coordinates about the centre with a
/// geometrically graded composite Gauss–Legendre rule towards the rim.
fn polar_integral(m: &Measure, center: &[f64], radius: f64) -> Result<f64> {
    let n = m.n();
    let gl = gauss_legendre(12)?;
    let mut panels = Vec::new();
    let mut a = 0.0;
    for j in 1..=40 {
        let b = radius * (1.0 - 0.5f64.powi(j));
        panels.push((a, b));
        a = b;
    }
    panels.push((a, radius));
    let dirs: Vec<Vec<f64>> = if n == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        sphere_directions(n, 96)
    };
    let dir_weight = if n == 1 { 1.0 } else { sphere_area(n) / dirs.len() as f64 };
    let mut total = 0.0;
    let mut y = vec![0.0; n];
    for w in &dirs {
        let mut line = 0.0;
        for &(a, b) in &panels {
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (t, wt) in gl.nodes.iter().zip(&gl.weights) {
                let s = mid + half * t;
                for i in 0..n {
                    y[i] = center[i] + s * w[i];
                }
                line += wt * half * s.powi(n as i32 - 1) * equilibrium_density(m, &y);
            }
        }
        total += dir_weight * line;
    }
    Ok(total)
}

/// Equal-weight direction sets: the circle for `n = 2`, a Fibonacci lattice
/// for `n = 3`, and a seeded Gaussian sample otherwise.
fn sphere_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        2 => (0..count)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + 0.5) / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let total = count * count / 4;
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..total)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / total as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            (0..count * count)
                .map(|_| {
                    let v: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
                    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                    v.into_iter().map(|a| a / norm).collect()
                })
                .collect()
        }
    }
}

pub(crate) fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Surface area of `S^{n-1}`.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / statrs::function::gamma::gamma(h)
}

/// Total integral of `d^(-1/2)` over a box or ellipsoid.
fn lebesgue_equilibrium_total(m: &Measure) -> Result<f64> {
    let order = match m.n() {
        1 => 400,
        2 => 160,
        _ => 48,
    };
    m.integrate(|x| equilibrium_density(m, x), order)
}

/// `mu_eq(B_rho(x, eps))` on the ball: the normalised surface area of the
/// part of the spherical cap of radius `eps` about the lift of `x` that lies
/// in the upper hemisphere.
fn hemisphere_cap_mass(x: &[f64], eps: f64) -> f64 {
    let n = x.len();
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt().min(1.0);
    let z0 = (1.0 - r * r).max(0.0).sqrt();
    let eps = eps.min(PI);
    let full = sin_power_integral(n - 1, PI / 2.0);
    if n == 1 {
        let th = z0.atan2(x[0]);
        let lo = (th - eps).max(0.0);
        let hi = (th + eps).min(PI);
        return (hi - lo) / PI;
    }
    // geodesic from the lift p = (x, z0) in unit tangent direction v reaches
    // height z0 cos t + v_up sin t; v_up ranges over [-r, r] as v varies
    let polar = z0.acos();
    if polar + eps <= PI / 2.0 {
        return sin_power_integral(n - 1, eps) / full;
    }
    // integrate over the tangent sphere S^{n-1}: v_up = r cos(phi)
    // (phi the angle from the "up" tangent), density sin^{n-2}(phi)
    let gl = gauss_legendre(64).expect("fixed rule");
    let mut acc = 0.0;
    let panels = 32;
    for p in 0..panels {
        let a = PI * p as f64 / panels as f64;
        let b = PI * (p + 1) as f64 / panels as f64;
        let half = 0.5 * (b - a);
        for (t, w) in gl.nodes.iter().zip(&gl.weights) {
            let phi = 0.5 * (a + b) + half * t;
            let up = r * phi.cos();
            // z0 cos t + up sin t > 0  <=>  t < atan2(z0, -up) on (0, pi)
            let tmax = z0.atan2(-up);
            let reach = eps.min(tmax);
            acc += w * half * phi.sin().powi(n as i32 - 2) * sin_power_integral(n - 1, reach);
        }
    }
    // the phi-marginal of S^{n-2} normalises with int_0^pi sin^{n-2}
    let norm = 2.0 * sin_power_integral(n - 2, PI / 2.0);
    acc / norm / full
}

/// `count` deterministic interior points. Ball: radii `sin((i + 1/2) pi / (2 count))`,
/// which cluster towards the boundary like the equilibrium measure, with
/// alternating signs (n = 1), golden-angle directions (n = 2) or seeded
/// uniform directions. Ellipsoid: the ball grid scaled. Box: a Halton
/// sequence.
pub fn interior_grid(m: &Measure, count: usize) -> Vec<Vec<f64>> {
    let n = m.n();
    let radius = |i: usize| ((i as f64 + 0.5) * PI / (2.0 * count as f64)).sin();
    let ball = || -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6772_6964);
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..count)
            .map(|i| {
                let r = radius(i);
                match n {
                    1 => vec![if i % 2 == 0 { r } else { -r }],
                    2 => {
                        let t = golden * i as f64;
                        vec![r * t.cos(), r * t.sin()]
                    }
                    _ => {
                        let g: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
                        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
                        g.into_iter().map(|v| r * v / norm).collect()
                    }
                }
            })
            .collect()
    };
    match m.domain() {
        Domain::Ball { .. } => ball(),
        Domain::Ellipsoid { semiaxes } => ball()
            .into_iter()
            .map(|p| p.iter().zip(semiaxes).map(|(v, s)| v * s).collect())
            .collect(),
        Domain::Box { bounds } => {
            const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
            (1..=count as u64)
                .map(|i| {
                    bounds
                        .iter()
                        .enumerate()
                        .map(|(d, &(lo, hi))| lo + (hi - lo) * halton(i, PRIMES[d % PRIMES.len()]))
                        .collect()
                })
                .collect()
        }
    }
}

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Arcsine CDF `1/2 + arcsin(x)/pi`, the normalised equilibrium measure of
/// `[-1, 1]`.
pub fn arcsine_cdf(x: f64) -> f64 {
    0.5 + x.clamp(-1.0, 1.0).asin() / PI
}
