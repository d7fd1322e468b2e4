//! Necessary-condition tests for interpolating and sampling families:
//! separation, Carleson ratios over a metric net, Gram (Riesz) and frame
//! spectra of the normalized kernels, and density against the equilibrium
//! measure.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{domain_distance, equilibrium_mass, metric_ball_volume, Region};
use crate::measures::{poly_dim, Domain, Measure};
use crate::polyspace::{BasisOptions, PolySpace};
use crate::report::{fmt_f64, CsvTable};

/// Points of one level `Lambda_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
}

/// A sequence of finite point sets tagged with their degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFamily {
    pub n: usize,
    #[serde(rename = "families")]
    pub levels: Vec<Level>,
}

impl PointFamily {
    /// Checks dimensions and strictly increasing degrees.
    pub fn new(n: usize, levels: Vec<Level>) -> Result<Self> {
        let fam = Self { n, levels };
        fam.check_shape()?;
        Ok(fam)
    }

    fn check_shape(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("family dimension must be at least 1".into()));
        }
        for w in self.levels.windows(2) {
            if w[1].k <= w[0].k {
                return Err(Error::InvalidInput(format!(
                    "degrees must be strictly increasing ({} then {})",
                    w[0].k, w[1].k
                )));
            }
        }
        for lvl in &self.levels {
            if let Some(p) = lvl.points.iter().find(|p| p.len() != self.n) {
                return Err(Error::InvalidInput(format!(
                    "point {p:?} at k = {} has the wrong dimension",
                    lvl.k
                )));
            }
        }
        Ok(())
    }

    /// Shape checks plus every point inside the closed domain of `m`.
    pub fn validate(&self, m: &Measure) -> Result<()> {
        self.check_shape()?;
        if m.n() != self.n {
            return Err(Error::InvalidInput(format!(
                "family dimension {} differs from measure dimension {}",
                self.n,
                m.n()
            )));
        }
        for lvl in &self.levels {
            for p in &lvl.points {
                m.check_point(p)?;
            }
        }
        Ok(())
    }

    pub fn level(&self, k: usize) -> Option<&Level> {
        self.levels.iter().find(|l| l.k == k)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let fam: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("point family JSON: {e}")))?;
        fam.check_shape()?;
        Ok(fam)
    }

    pub fn to_json(&self) -> String {
        crate::report::to_json_string(self).expect("point family serialises")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: Vec<f64>,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.iter().any(|a| !(a.mass >= 0.0) || !a.mass.is_finite()) {
            return Err(Error::InvalidInput("atom masses must be finite and >= 0".into()));
        }
        Ok(Self { atoms })
    }

    /// `sum_lambda delta_lambda / beta_k(lambda)`.
    pub fn from_level(ps: &PolySpace, points: &[Vec<f64>]) -> Self {
        let atoms = points
            .iter()
            .map(|p| Atom {
                point: p.clone(),
                mass: ps.christoffel(p).inv_beta,
            })
            .collect();
        Self { atoms }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }
}

/// `min_{i != j} k * dist(x_i, x_j)` in the domain's metric, or `None`
/// (standing for `+inf`) with fewer than two points.
pub fn separation_constant(m: &Measure, k: usize, points: &[Vec<f64>]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let best = (0..points.len())
        .into_par_iter()
        .map(|i| {
            points[i + 1..]
                .iter()
                .map(|q| domain_distance(m, &points[i], q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Some(k as f64 * best)
}

/// Reference volume in the Carleson ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeReference {
    #[default]
    Lebesgue,
    Weighted,
}

impl std::str::FromStr for VolumeReference {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lebesgue" => Ok(Self::Lebesgue),
            "weighted" => Ok(Self::Weighted),
            other => Err(Error::InvalidInput(format!(
                "unknown reference '{other}' (expected lebesgue or weighted)"
            ))),
        }
    }
}

pub const DEFAULT_NET_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlesonResult {
    pub k: usize,
    pub sup_ratio: f64,
    /// Net centre attaining the supremum (first in traversal order on ties).
    pub witness: Option<Vec<f64>>,
    pub net_size: usize,
    pub net_spacing: f64,
    pub ball_radius: f64,
    pub reference: VolumeReference,
}

/// `sup_x mu_k(B(x, 1/k)) / V(B(x, 1/k))` over a greedy `1/(2k)` net in the
/// domain's metric, with the proxy volumes of `metric_ball_volume`.
pub fn carleson_ratio(
    mu: &DiscreteMeasure,
    k: usize,
    m: &Measure,
    reference: VolumeReference,
    budget: usize,
) -> Result<CarlesonResult> {
    if reference == VolumeReference::Weighted && !m.is_ball() {
        return Err(Error::InvalidInput(
            "the weighted reference volume exists only for ball measures".into(),
        ));
    }
    for a in &mu.atoms {
        m.check_point(&a.point)?;
    }
    let kf = k.max(1) as f64;
    let radius = 1.0 / kf;
    let spacing = 0.5 / kf;
    let net = metric_net(m, spacing, budget)?;
    let ratios: Vec<f64> = net
        .par_iter()
        .map(|c| {
            let mass: f64 = mu
                .atoms
                .iter()
                .filter(|a| domain_distance(m, c, &a.point) < radius)
                .map(|a| a.mass)
                .sum();
            if mass == 0.0 {
                return Ok(0.0);
            }
            let v = metric_ball_volume(m, c, radius)?;
            let vol = match reference {
                VolumeReference::Lebesgue => v.lebesgue,
                VolumeReference::Weighted => v.weighted,
            };
            Ok(mass / vol)
        })
        .collect::<Result<_>>()?;
    let mut sup = 0.0;
    let mut witness = None;
    for (c, r) in net.iter().zip(&ratios) {
        if *r > sup {
            sup = *r;
            witness = Some(c.clone());
        }
    }
    Ok(CarlesonResult {
        k,
        sup_ratio: sup,
        witness,
        net_size: net.len(),
        net_spacing: spacing,
        ball_radius: radius,
        reference,
    })
}

/// Greedy `h`-net of the closed domain in its own metric: candidates on a
/// grid of spacing about `h/2` are accepted in a fixed order when no
/// accepted centre lies within `h`.
pub fn metric_net(m: &Measure, h: f64, budget: usize) -> Result<Vec<Vec<f64>>> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput("net spacing must be positive".into()));
    }
    match m.domain() {
        Domain::Ball { .. } => hemisphere_net(m.n(), h, budget),
        Domain::Ellipsoid { semiaxes } => Ok(hemisphere_net(m.n(), h, budget)?
            .into_iter()
            .map(|x| x.iter().zip(semiaxes).map(|(v, s)| v * s).collect())
            .collect()),
        Domain::Box { bounds } => {
            let steps = (PI / h).ceil() as usize + 1;
            let size = steps.checked_pow(bounds.len() as u32).unwrap_or(usize::MAX);
            if size > budget {
                return Err(Error::NetTooLarge { size, budget });
            }
            let axes: Vec<Vec<f64>> = bounds
                .iter()
                .map(|&(lo, hi)| {
                    (0..steps)
                        .map(|j| {
                            let t = (j as f64 * h).min(PI);
                            lo + 0.5 * (t.cos() + 1.0) * (hi - lo)
                        })
                        .collect()
                })
                .collect();
            let mut out = Vec::with_capacity(size);
            let mut idx = vec![0usize; bounds.len()];
            for _ in 0..size {
                out.push(idx.iter().enumerate().map(|(d, &i)| axes[d][i]).collect());
                for d in (0..bounds.len()).rev() {
                    idx[d] += 1;
                    if idx[d] < steps {
                        break;
                    }
                    idx[d] = 0;
                }
            }
            Ok(out)
        }
    }
}

/// Points of `S^{d-1}` with angular spacing at most about `s`, generated
/// by nested latitude rings.
fn sphere_grid(d: usize, s: f64) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![-1.0], vec![1.0]],
        2 => {
            let m = ((2.0 * PI / s).ceil() as usize).max(1);
            (0..m)
                .map(|j| {
                    let t = 2.0 * PI * j as f64 / m as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        }
        _ => {
            let rings = ((PI / s).ceil() as usize).max(1);
            let mut out = Vec::new();
            for j in 0..=rings {
                let phi = PI * j as f64 / rings as f64;
                let (c, sn) = (phi.cos(), phi.sin());
                if sn < 1e-12 {
                    let mut p = vec![0.0; d];
                    p[0] = c.signum();
                    out.push(p);
                    continue;
                }
                for sub in sphere_grid(d - 1, (s / sn).min(PI)) {
                    let mut p = Vec::with_capacity(d);
                    p.push(c);
                    p.extend(sub.iter().map(|v| sn * v));
                    out.push(p);
                }
            }
            out
        }
    }
}

/// Greedy `rho`-net of the unit ball in `R^n` built on the upper hemisphere
/// of `S^n`, where `rho` is the geodesic distance of the lifts.
fn hemisphere_net(n: usize, h: f64, budget: usize) -> Result<Vec<Vec<f64>>> {
    let s = 0.5 * h;
    let rings = ((0.5 * PI / s).ceil() as usize).max(1);
    let cell = 2.0 * (0.5 * h).sin();
    let cos_h = h.cos();
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut lifts: Vec<Vec<f64>> = Vec::new();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let key = |u: &[f64]| -> Vec<i64> { u.iter().map(|v| (v / cell).floor() as i64).collect() };
    let offsets: Vec<Vec<i64>> = {
        let mut offs = vec![vec![]];
        for _ in 0..=n {
            offs = offs
                .into_iter()
                .flat_map(|o: Vec<i64>| {
                    (-1..=1).map(move |d| {
                        let mut o = o.clone();
                        o.push(d);
                        o
                    })
                })
                .collect();
        }
        offs
    };
    for i in 0..=rings {
        let psi = (i as f64 * s).min(0.5 * PI);
        let r = psi.sin();
        let dirs = if i == 0 {
            vec![vec![0.0; n]]
        } else {
            sphere_grid(n, (s / r).min(PI))
        };
        for dir in dirs {
            let x: Vec<f64> = dir.iter().map(|v| r * v).collect();
            let mut u = x.clone();
            u.push(psi.cos());
            let kx = key(&u);
            let near = offsets.iter().any(|o| {
                let kk: Vec<i64> = kx.iter().zip(o).map(|(a, b)| a + b).collect();
                grid.get(&kk).is_some_and(|ids| {
                    ids.iter().any(|&id| {
                        let dot: f64 = lifts[id].iter().zip(&u).map(|(a, b)| a * b).sum();
                        dot > cos_h
                    })
                })
            });
            if near {
                continue;
            }
            if out.len() >= budget {
                return Err(Error::NetTooLarge {
                    size: out.len() + 1,
                    budget,
                });
            }
            grid.entry(kx).or_default().push(lifts.len());
            lifts.push(u);
            out.push(x);
        }
    }
    Ok(out)
}

/// Rows `phi(x) / |phi(x)|`: the normalized kernels `kappa_x` in the ONB.
fn normalized_rows(ps: &PolySpace, points: &[Vec<f64>]) -> DMatrix<f64> {
    let rows = ps.basis_rows(points);
    let mut a = DMatrix::zeros(points.len(), ps.dim());
    for (i, r) in rows.iter().enumerate() {
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (j, v) in r.iter().enumerate() {
            a[(i, j)] = v / norm;
        }
    }
    a
}

/// `G[i][j] = K_k(x_i, x_j) / sqrt(beta_k(x_i) beta_k(x_j))`.
pub fn gram_matrix(ps: &PolySpace, points: &[Vec<f64>]) -> DMatrix<f64> {
    let a = normalized_rows(ps, points);
    let mut g = &a * a.transpose();
    for i in 0..g.nrows() {
        g[(i, i)] = 1.0;
    }
    g
}

fn sorted_eigenvalues(m: DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let size = m.nrows();
    let eig = m
        .try_symmetric_eigen(f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Eigen(format!("symmetric eigenproblem of size {size}")))?;
    let mut v: Vec<f64> = eig.eigenvalues.iter().map(|x| x.max(0.0)).collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszBounds {
    pub eigmin: f64,
    pub eigmax: f64,
}

/// Extreme eigenvalues of the Gram matrix (clamped at 0).
pub fn riesz_bounds(ps: &PolySpace, points: &[Vec<f64>]) -> Result<RieszBounds> {
    if points.is_empty() {
        return Err(Error::EmptyLevel { k: ps.degree() });
    }
    let ev = sorted_eigenvalues(gram_matrix(ps, points))?;
    Ok(RieszBounds {
        eigmin: ev[0],
        eigmax: *ev.last().expect("non-empty"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub rank: usize,
}

/// Relative cutoff below which an eigenvalue counts towards the kernel.
pub const RANK_TOL: f64 = 1e-10;

/// Spectrum extremes of `S = sum kappa_x kappa_x^T` in the ONB and its rank.
pub fn frame_bounds(ps: &PolySpace, points: &[Vec<f64>]) -> Result<FrameBounds> {
    if points.is_empty() {
        return Err(Error::EmptyLevel { k: ps.degree() });
    }
    frame_spectrum(ps, points).map(|ev| {
        let upper = *ev.last().expect("dim >= 1");
        let rank = ev.iter().filter(|v| **v > RANK_TOL * upper).count();
        // a rank-deficient operator has lower bound exactly 0
        let lower = if rank < ev.len() { 0.0 } else { ev[0] };
        FrameBounds { lower, upper, rank }
    })
}

/// Sorted eigenvalues of the frame operator.
pub fn frame_spectrum(ps: &PolySpace, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let a = normalized_rows(ps, points);
    sorted_eigenvalues(a.transpose() * &a)
}

/// Sorted eigenvalues of the Gram matrix.
pub fn gram_spectrum(ps: &PolySpace, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    sorted_eigenvalues(gram_matrix(ps, points))
}

/// Biorthogonal system of a level with nonsingular Gram matrix.
#[derive(Debug, Clone)]
pub struct DualSystem {
    ps: PolySpace,
    /// `A^T G^{-1}`: column `l` holds the ONB coefficients of `g_l`.
    duals: DMatrix<f64>,
    /// `A^T G^{-1} A`, the subspace kernel in ONB coordinates.
    kernel: DMatrix<f64>,
}

/// Smallest Gram eigenvalue at which the dual basis is still formed.
pub const DUAL_EIGMIN: f64 = 1e-10;

pub fn dual_and_subspace_kernel(ps: &PolySpace, points: &[Vec<f64>]) -> Result<DualSystem> {
    if points.is_empty() {
        return Err(Error::EmptyLevel { k: ps.degree() });
    }
    let a = normalized_rows(ps, points);
    let g = gram_matrix(ps, points);
    let eig = g
        .try_symmetric_eigen(f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Eigen("Gram eigenproblem".into()))?;
    let eigmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(eigmin > DUAL_EIGMIN) {
        return Err(Error::DualUndefined { eigmin });
    }
    let inv_vals = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|v| 1.0 / v),
    );
    let ginv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    let duals = a.transpose() * ginv;
    let kernel = &duals * &a;
    Ok(DualSystem {
        ps: ps.clone(),
        duals,
        kernel,
    })
}

impl DualSystem {
    pub fn len(&self) -> usize {
        self.duals.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `g_l(x)`.
    pub fn g(&self, l: usize, x: &[f64]) -> f64 {
        let phi = self.ps.basis_values(x);
        self.duals.column(l).iter().zip(&phi).map(|(c, v)| c * v).sum()
    }

    /// `script K_k(x, y) = sum G^{-1}_{l l'} kappa_l(x) kappa_l'(y)`.
    pub fn subspace_kernel(&self, x: &[f64], y: &[f64]) -> f64 {
        let px = DVector::from_vec(self.ps.basis_values(x));
        let py = DVector::from_vec(self.ps.basis_values(y));
        px.dot(&(&self.kernel * py))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub k: usize,
    pub region: String,
    pub count: usize,
    pub dim: usize,
    pub count_over_dim: f64,
    pub equilibrium_mass: f64,
    /// `(count / dim) / equilibrium_mass`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTrend {
    pub region: String,
    /// `|ratio - 1|` at the largest degree.
    pub last_deviation: f64,
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    pub rows: Vec<DensityRow>,
    pub trends: Vec<DensityTrend>,
}

impl DensityTable {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "k",
            "region",
            "count",
            "dim",
            "count_over_dim",
            "equilibrium_mass",
            "ratio",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.k.to_string(),
                format!("\"{}\"", r.region),
                r.count.to_string(),
                r.dim.to_string(),
                fmt_f64(r.count_over_dim),
                fmt_f64(r.equilibrium_mass),
                fmt_f64(r.ratio),
            ]);
        }
        t
    }
}

/// Counts of each level in each region against the equilibrium mass.
pub fn density_report(fam: &PointFamily, m: &Measure, regions: &[Region]) -> Result<DensityTable> {
    fam.validate(m)?;
    let masses: Vec<f64> = regions
        .iter()
        .map(|r| equilibrium_mass(m, r))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for lvl in &fam.levels {
        let dim = poly_dim(m.n(), lvl.k);
        for (region, &mass) in regions.iter().zip(&masses) {
            let count = lvl.points.iter().filter(|p| region.contains(m, p)).count();
            let cod = count as f64 / dim as f64;
            rows.push(DensityRow {
                k: lvl.k,
                region: region.label(),
                count,
                dim,
                count_over_dim: cod,
                equilibrium_mass: mass,
                ratio: cod / mass,
            });
        }
    }
    let trends = regions
        .iter()
        .enumerate()
        .map(|(j, region)| {
            let ratios: Vec<f64> = rows
                .iter()
                .skip(j)
                .step_by(regions.len().max(1))
                .map(|r| r.ratio)
                .collect();
            DensityTrend {
                region: region.label(),
                last_deviation: ratios.last().map_or(f64::NAN, |r| (r - 1.0).abs()),
                ratios,
            }
        })
        .collect();
    Ok(DensityTable { rows, trends })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseOptions {
    pub basis: BasisOptions,
    pub reference: VolumeReference,
    pub net_budget: usize,
    pub regions: Vec<Region>,
    pub carleson: bool,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            basis: BasisOptions::default(),
            reference: VolumeReference::Lebesgue,
            net_budget: DEFAULT_NET_BUDGET,
            regions: Vec::new(),
            carleson: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub k: usize,
    pub count: usize,
    pub dim: usize,
    pub separation: Option<f64>,
    pub carleson: Option<CarlesonResult>,
    pub riesz: RieszBounds,
    pub frame: FrameBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub levels: Vec<LevelReport>,
    pub density: Option<DensityTable>,
}

impl DiagnosticsReport {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "k",
            "count",
            "dim",
            "separation",
            "carleson_sup",
            "riesz_min",
            "riesz_max",
            "frame_lower",
            "frame_upper",
            "frame_rank",
        ]);
        for l in &self.levels {
            t.push(vec![
                l.k.to_string(),
                l.count.to_string(),
                l.dim.to_string(),
                fmt_f64(l.separation.unwrap_or(f64::INFINITY)),
                l.carleson.as_ref().map_or(String::new(), |c| fmt_f64(c.sup_ratio)),
                fmt_f64(l.riesz.eigmin),
                fmt_f64(l.riesz.eigmax),
                fmt_f64(l.frame.lower),
                fmt_f64(l.frame.upper),
                l.frame.rank.to_string(),
            ]);
        }
        t
    }
}

/// Full battery over every level; levels run in parallel and are reported
/// in degree order.
pub fn diagnose(fam: &PointFamily, m: &Measure, opts: &DiagnoseOptions) -> Result<DiagnosticsReport> {
    fam.validate(m)?;
    let levels = fam
        .levels
        .par_iter()
        .map(|lvl| {
            if lvl.points.is_empty() {
                return Err(Error::EmptyLevel { k: lvl.k });
            }
            let ps = PolySpace::new(m, lvl.k, opts.basis)?;
            let carleson = if opts.carleson {
                let mu = DiscreteMeasure::from_level(&ps, &lvl.points);
                Some(carleson_ratio(&mu, lvl.k, m, opts.reference, opts.net_budget)?)
            } else {
                None
            };
            Ok(LevelReport {
                k: lvl.k,
                count: lvl.points.len(),
                dim: ps.dim(),
                separation: separation_constant(m, lvl.k, &lvl.points),
                carleson,
                riesz: riesz_bounds(&ps, &lvl.points)?,
                frame: frame_bounds(&ps, &lvl.points)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let density = if opts.regions.is_empty() {
        None
    } else {
        Some(density_report(fam, m, &opts.regions)?)
    };
    Ok(DiagnosticsReport { levels, density })
}
