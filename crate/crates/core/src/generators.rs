//! Candidate point families on the unit ball. All generators are pure
//! functions of their parameters and seed; level `k` draws from the ChaCha
//! stream `k` of `seed`, so levels are independent of each other and of the
//! thread count.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{Level, PointFamily};
use crate::error::{Error, Result};
use crate::geometry::{gaussian, rho, sin_power_integral};
use crate::measures::poly_dim;
use crate::quadrature::gauss_nodes_1d;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Zeros of the degree `k+1` Gegenbauer polynomial (n = 1).
    Gauss1d,
    /// Cartesian products of 1D Gauss nodes, thinned to the open ball. Not
    /// interpolating for total-degree spaces; a sampling-side input only.
    TensorGauss,
    /// Dart throwing with `rho`-separation `epsilon / k`.
    RandomSeparated,
    /// I.i.d. samples of the equilibrium measure `(1-|x|^2)^{-1/2} dx`.
    EquilibriumRandom,
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss_1d" => Ok(Self::Gauss1d),
            "tensor_gauss" => Ok(Self::TensorGauss),
            "random_separated" => Ok(Self::RandomSeparated),
            "equilibrium_random" => Ok(Self::EquilibriumRandom),
            _ => Err(Error::InvalidInput(format!(
                "unknown family kind '{s}' (expected gauss_1d, tensor_gauss, random_separated or equilibrium_random)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub kind: FamilyKind,
    pub n: usize,
    /// Weight exponent of the Gauss nodes.
    pub a: f64,
    pub ks: Vec<usize>,
    /// Separation constant for `random_separated`.
    pub epsilon: Option<f64>,
    /// Points per level for the random kinds; defaults to `dim P_k`.
    pub target: Option<usize>,
    pub seed: u64,
}

impl GeneratorParams {
    pub fn new(kind: FamilyKind, n: usize, ks: Vec<usize>) -> Self {
        Self {
            kind,
            n,
            a: 0.5,
            ks,
            epsilon: None,
            target: None,
            seed: 0,
        }
    }
}

/// Consecutive rejected darts after which a level counts as saturated.
pub const MAX_MISSES: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedFamily {
    pub family: PointFamily,
    /// Degrees whose `random_separated` level saturated before the target.
    pub saturated: Vec<usize>,
}

pub fn generate_family(params: &GeneratorParams) -> Result<GeneratedFamily> {
    let n = params.n;
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be >= 1".into()));
    }
    if !(params.a >= 0.0) {
        return Err(Error::InvalidInput(format!("weight exponent a = {} must be >= 0", params.a)));
    }
    let epsilon = match params.kind {
        FamilyKind::Gauss1d if n != 1 => {
            return Err(Error::InvalidInput("gauss_1d needs n = 1".into()));
        }
        FamilyKind::RandomSeparated => match params.epsilon {
            Some(e) if e > 0.0 && e.is_finite() => e,
            _ => {
                return Err(Error::InvalidInput(
                    "random_separated needs a separation epsilon > 0".into(),
                ))
            }
        },
        _ => 0.0,
    };
    let levels: Vec<(Level, bool)> = params
        .ks
        .par_iter()
        .map(|&k| -> Result<(Level, bool)> {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(k as u64);
            let target = params.target.unwrap_or_else(|| poly_dim(n, k));
            let (points, saturated) = match params.kind {
                FamilyKind::Gauss1d => (gauss_level(k, params.a)?, false),
                FamilyKind::TensorGauss => (tensor_level(n, k, params.a)?, false),
                FamilyKind::RandomSeparated => {
                    random_separated_level(&mut rng, n, epsilon / k.max(1) as f64, target)
                }
                FamilyKind::EquilibriumRandom => {
                    ((0..target).map(|_| equilibrium_sample(&mut rng, n)).collect(), false)
                }
            };
            Ok((Level { k, points }, saturated))
        })
        .collect::<Result<_>>()?;
    let saturated = levels.iter().filter(|l| l.1).map(|l| l.0.k).collect();
    let family = PointFamily::new(n, levels.into_iter().map(|l| l.0).collect())?;
    Ok(GeneratedFamily { family, saturated })
}

fn gauss_level(k: usize, a: f64) -> Result<Vec<Vec<f64>>> {
    Ok(gauss_nodes_1d(k + 1, a)?.nodes.into_iter().map(|x| vec![x]).collect())
}

fn tensor_level(n: usize, k: usize, a: f64) -> Result<Vec<Vec<f64>>> {
    let nodes = gauss_nodes_1d(k + 1, a)?.nodes;
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                nodes.iter().map(move |&c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .filter(|q| q.iter().map(|v| v * v).sum::<f64>() < 1.0)
            .collect();
    }
    Ok(out)
}

/// Darts are drawn from the equilibrium measure, which is uniform in the
/// `rho` geometry, and kept when `rho`-farther than `sep` from all kept ones.
fn random_separated_level(rng: &mut ChaCha8Rng, n: usize, sep: f64, target: usize) -> (Vec<Vec<f64>>, bool) {
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(target);
    let mut misses = 0;
    while points.len() < target {
        let x = equilibrium_sample(rng, n);
        if points.iter().all(|p| rho(p, &x) >= sep) {
            points.push(x);
            misses = 0;
        } else {
            misses += 1;
            if misses >= MAX_MISSES {
                return (points, true);
            }
        }
    }
    (points, false)
}

/// One sample of `(1-|x|^2)^{-1/2} dx` on the unit ball: a uniform direction
/// and a radius `sin(theta)` with `theta` drawn by inverting
/// `int_0^theta sin^{n-1}`.
pub fn equilibrium_sample(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let dir: Vec<f64> = if n == 1 {
        vec![if rng.random::<bool>() { 1.0 } else { -1.0 }]
    } else {
        loop {
            let g: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break g.into_iter().map(|v| v / norm).collect();
            }
        }
    };
    let u: f64 = rng.random();
    let total = sin_power_integral(n - 1, PI / 2.0);
    let (mut lo, mut hi) = (0.0, PI / 2.0);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if sin_power_integral(n - 1, mid) < u * total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = (0.5 * (lo + hi)).sin();
    dir.into_iter().map(|v| v * r).collect()
}
