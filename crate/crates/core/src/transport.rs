//! Wasserstein-1 distances between equal-mass discrete measures with
//! Euclidean cost: the CDF formula on the line, an exact transportation
//! simplex elsewhere.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{dual_and_subspace_kernel, Atom, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::measures::euclid;
use crate::polyspace::PolySpace;
use crate::report::{fmt_f64, CsvTable};

/// Total masses must agree to this absolute tolerance.
pub const MASS_TOL: f64 = 1e-10;
/// Default cap on `|sigma| * |nu|` for the general LP.
pub const DEFAULT_LP_BUDGET: usize = 4_000_000;

/// `W_1(sigma, nu)` with the default LP budget.
pub fn vaserstein1(sigma: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    vaserstein1_with_budget(sigma, nu, DEFAULT_LP_BUDGET)
}

pub fn vaserstein1_with_budget(
    sigma: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    budget: usize,
) -> Result<f64> {
    let (left, right) = (sigma.total_mass(), nu.total_mass());
    if !((left - right).abs() <= MASS_TOL) {
        return Err(Error::MassMismatch { left, right });
    }
    let dim = sigma
        .atoms
        .iter()
        .chain(&nu.atoms)
        .map(|a| a.point.len())
        .next();
    let Some(dim) = dim else {
        return Ok(0.0);
    };
    if sigma.atoms.iter().chain(&nu.atoms).any(|a| a.point.len() != dim) {
        return Err(Error::InvalidInput("atoms of different dimensions".into()));
    }
    if sigma.atoms.is_empty() || nu.atoms.is_empty() {
        return Err(Error::InvalidInput(
            "transport between an empty and a non-empty measure".into(),
        ));
    }
    if dim == 1 {
        Ok(w1_line(&sigma.atoms, &nu.atoms))
    } else {
        w1_simplex(&sigma.atoms, &nu.atoms, budget)
    }
}

/// `int |F_sigma - F_nu|` over the merged support.
fn w1_line(sigma: &[Atom], nu: &[Atom]) -> f64 {
    let mut events: Vec<(f64, f64)> = sigma
        .iter()
        .map(|a| (a.point[0], a.mass))
        .chain(nu.iter().map(|a| (a.point[0], -a.mass)))
        .collect();
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut cdf = 0.0;
    let mut total = 0.0;
    for w in events.windows(2) {
        cdf += w[0].1;
        total += cdf.abs() * (w[1].0 - w[0].0);
    }
    total
}

/// Exact W_1 by the general LP; exposed so the line formula can be checked.
pub fn vaserstein1_lp(sigma: &DiscreteMeasure, nu: &DiscreteMeasure, budget: usize) -> Result<f64> {
    let (left, right) = (sigma.total_mass(), nu.total_mass());
    if !((left - right).abs() <= MASS_TOL) {
        return Err(Error::MassMismatch { left, right });
    }
    w1_simplex(&sigma.atoms, &nu.atoms, budget)
}

/// Transportation simplex (MODI): north-west corner start, Dantzig entering
/// rule, ratio test along the unique cycle of the basis tree.
fn w1_simplex(sigma: &[Atom], nu: &[Atom], budget: usize) -> Result<f64> {
    let supply: Vec<&Atom> = sigma.iter().filter(|a| a.mass > 0.0).collect();
    let demand: Vec<&Atom> = nu.iter().filter(|a| a.mass > 0.0).collect();
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Ok(0.0);
    }
    if m.saturating_mul(n) > budget {
        return Err(Error::LpTooLarge {
            atoms: m + n,
            budget,
        });
    }
    let a: Vec<f64> = supply.iter().map(|s| s.mass).collect();
    // absorb the (tolerated) mass gap into the demands
    let scale = a.iter().sum::<f64>() / demand.iter().map(|d| d.mass).sum::<f64>();
    let b: Vec<f64> = demand.iter().map(|d| d.mass * scale).collect();
    let cost: Vec<f64> = supply
        .par_iter()
        .flat_map_iter(|s| demand.iter().map(move |d| euclid(&s.point, &d.point)))
        .collect();
    let c = |i: usize, j: usize| cost[i * n + j];
    let cost_scale = cost.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);

    // basis cells (i, j, flow); always m + n - 1 of them
    let mut basis: Vec<(usize, usize, f64)> = Vec::with_capacity(m + n - 1);
    {
        let (mut ra, mut rb) = (a.clone(), b.clone());
        let (mut i, mut j) = (0, 0);
        loop {
            let f = ra[i].min(rb[j]);
            basis.push((i, j, f));
            ra[i] -= f;
            rb[j] -= f;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if j == n - 1 || (i < m - 1 && ra[i] <= rb[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let max_iter = 50 * (m + n) * (m + n) + 1000;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    for _ in 0..max_iter {
        // adjacency of the basis tree: nodes 0..m rows, m..m+n columns
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n];
        for (id, &(i, j, _)) in basis.iter().enumerate() {
            adj[i].push(id);
            adj[m + j].push(id);
        }
        potentials(&basis, &adj, m, &c, &mut u, &mut v)?;
        let mut best = (-1e-12 * cost_scale, usize::MAX, usize::MAX);
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                let r = c(i, j) - ui - vj;
                if r < best.0 {
                    best = (r, i, j);
                }
            }
        }
        if best.1 == usize::MAX {
            return Ok(basis.iter().map(|&(i, j, f)| f * c(i, j)).sum());
        }
        let (ei, ej) = (best.1, best.2);
        let path = tree_path(&basis, &adj, m, ei, m + ej)?;
        // path runs row ei -> column ej; its cells alternate -, +, -, ...
        // (the entering cell closes the cycle with +)
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (pos, &id) in path.iter().enumerate() {
            if pos % 2 == 0 && basis[id].2 < theta {
                theta = basis[id].2;
                leave = id;
            }
        }
        for (pos, &id) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis[id].2 -= theta;
            } else {
                basis[id].2 += theta;
            }
        }
        basis[leave] = (ei, ej, theta);
    }
    Err(Error::LpFailed(format!(
        "no optimal basis after {max_iter} pivots ({m} x {n})"
    )))
}

fn potentials(
    basis: &[(usize, usize, f64)],
    adj: &[Vec<usize>],
    m: usize,
    c: &impl Fn(usize, usize) -> f64,
    u: &mut [f64],
    v: &mut [f64],
) -> Result<()> {
    let total = adj.len();
    let mut seen = vec![false; total];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    u[0] = 0.0;
    let mut visited = 1;
    while let Some(node) = queue.pop_front() {
        for &id in &adj[node] {
            let (i, j, _) = basis[id];
            let other = if node < m { m + j } else { i };
            if seen[other] {
                continue;
            }
            seen[other] = true;
            visited += 1;
            if other < m {
                u[i] = c(i, j) - v[j];
            } else {
                v[j] = c(i, j) - u[i];
            }
            queue.push_back(other);
        }
    }
    if visited != total {
        return Err(Error::LpFailed("basis is not a spanning tree".into()));
    }
    Ok(())
}

/// Basis cells on the tree path from node `from` to node `to`, in order.
fn tree_path(
    basis: &[(usize, usize, f64)],
    adj: &[Vec<usize>],
    m: usize,
    from: usize,
    to: usize,
) -> Result<Vec<usize>> {
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; adj.len()];
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(node) = queue.pop_front() {
        if node == to {
            break;
        }
        for &id in &adj[node] {
            let (i, j, _) = basis[id];
            let other = if node < m { m + j } else { i };
            if !seen[other] {
                seen[other] = true;
                parent[other] = Some((node, id));
                queue.push_back(other);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = to;
    while node != from {
        let (prev, id) = parent[node].ok_or_else(|| Error::LpFailed("disconnected basis".into()))?;
        path.push(id);
        node = prev;
    }
    path.reverse();
    Ok(path)
}

/// `W_1` between the counting measure of a level and the discretized
/// subspace-kernel density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportGap {
    pub k: usize,
    pub w1: f64,
    /// Nearest-neighbour mesh of the quadrature grid carrying `nu_k`.
    pub mesh: f64,
    pub sigma_mass: f64,
    pub nu_mass: f64,
    pub grid_size: usize,
}

/// `sigma_k = (1/dim) sum delta_x` against `nu_k = (1/dim) script K_k(x,x) dmu`
/// discretized on the rule of order `quad_order` (which must be at least `2k`
/// for the masses to agree). Use a rule finer than the family: on the
/// family's own Gauss nodes the two measures coincide.
pub fn interpolation_transport_gap(
    ps: &PolySpace,
    points: &[Vec<f64>],
    quad_order: usize,
) -> Result<TransportGap> {
    let k = ps.degree();
    if points.is_empty() {
        return Err(Error::EmptyLevel { k });
    }
    if quad_order < 2 * k {
        return Err(Error::InvalidInput(format!(
            "quadrature order {quad_order} must be at least 2k = {}",
            2 * k
        )));
    }
    let dual = dual_and_subspace_kernel(ps, points)?;
    let dim = ps.dim() as f64;
    let rule = ps.measure().rule(quad_order)?;
    let nu_atoms: Vec<Atom> = rule
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(x, w)| Atom {
            point: x.to_vec(),
            mass: dual.subspace_kernel(x, x) * w / dim,
        })
        .collect();
    let sigma = DiscreteMeasure {
        atoms: points
            .iter()
            .map(|p| Atom {
                point: p.clone(),
                mass: 1.0 / dim,
            })
            .collect(),
    };
    let nu = DiscreteMeasure { atoms: nu_atoms };
    let w1 = vaserstein1(&sigma, &nu)?;
    Ok(TransportGap {
        k,
        w1,
        mesh: rule.mesh(),
        sigma_mass: sigma.total_mass(),
        nu_mass: nu.total_mass(),
        grid_size: rule.len(),
    })
}

/// `(1/dim) int int |x - y|^2 K_k(x, y)^2 dmu(x) dmu(y)` by a tensor rule of
/// order `quad_order >= 2k + 2`.
pub fn offdiag_second_moment(ps: &PolySpace, quad_order: usize) -> Result<f64> {
    let k = ps.degree();
    if quad_order < 2 * k + 2 {
        return Err(Error::InvalidInput(format!(
            "quadrature order {quad_order} must be at least 2k + 2 = {}",
            2 * k + 2
        )));
    }
    let rule = ps.measure().rule(quad_order)?;
    let nodes: Vec<&[f64]> = rule.iter().map(|(x, _)| x).collect();
    let rows: Vec<Vec<f64>> = nodes.par_iter().map(|x| ps.basis_values(x)).collect();
    let total: f64 = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            let wi = rule.weights[i];
            let mut acc = 0.0;
            for j in 0..nodes.len() {
                let kij: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                let d2: f64 = nodes[i]
                    .iter()
                    .zip(nodes[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                acc += rule.weights[j] * d2 * kij * kij;
            }
            wi * acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(total / ps.dim() as f64)
}

/// One row of the transport trend table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportRow {
    pub k: usize,
    pub w1: Option<f64>,
    pub mesh: Option<f64>,
    pub k_moment: Option<f64>,
}

pub fn transport_csv(rows: &[TransportRow]) -> CsvTable {
    let opt = |v: Option<f64>| v.map_or(String::new(), fmt_f64);
    let mut t = CsvTable::new(&["k", "w1", "mesh", "k_moment"]);
    for r in rows {
        t.push(vec![r.k.to_string(), opt(r.w1), opt(r.mesh), opt(r.k_moment)]);
    }
    t
}
