//! One-dimensional Gauss rules built from the Jacobi matrix of the
//! orthonormal recurrence (Golub–Welsch), with a Newton polish of the nodes
//! and Christoffel-sum weights.

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest node count accepted by the 1D rule builders.
pub const MAX_RULE_NODES: usize = 4096;

/// Nodes (ascending) and weights of a one-dimensional quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Three-term recurrence of the orthonormal polynomials for the Jacobi weight
/// `(1-x)^alpha (1+x)^beta` on `[-1, 1]`:
///
/// `x p_j = off[j+1] p_{j+1} + diag[j] p_j + off[j] p_{j-1}`, with `off[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiRecurrence {
    pub alpha: f64,
    pub beta: f64,
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    /// Total mass of the weight.
    pub mass: f64,
}

impl JacobiRecurrence {
    /// Coefficients for degrees `0..len` (i.e. `diag` has `len` entries and
    /// `off` has `len + 1`, so `p_len` can be formed).
    pub fn new(len: usize, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > -1.0 && beta > -1.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "Jacobi exponents must exceed -1 (alpha = {alpha}, beta = {beta})"
            )));
        }
        let ab = alpha + beta;
        let mut diag = Vec::with_capacity(len);
        for j in 0..len {
            let a = if alpha == beta {
                0.0
            } else if j == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                let s = 2.0 * j as f64 + ab;
                (beta * beta - alpha * alpha) / (s * (s + 2.0))
            };
            diag.push(a);
        }
        let mut off = Vec::with_capacity(len + 1);
        off.push(0.0);
        for j in 1..=len {
            let jf = j as f64;
            let b2 = if j == 1 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                let s = 2.0 * jf + ab;
                4.0 * jf * (jf + alpha) * (jf + beta) * (jf + ab)
                    / (s * s * (s + 1.0) * (s - 1.0))
            };
            off.push(b2.sqrt());
        }
        let ln_mass = (ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0)
            + ln_gamma(beta + 1.0)
            - ln_gamma(ab + 2.0);
        Ok(Self {
            alpha,
            beta,
            diag,
            off,
            mass: ln_mass.exp(),
        })
    }

    /// Highest degree `d` for which `values` can produce `p_0..=p_d`.
    pub fn max_degree(&self) -> usize {
        self.diag.len()
    }

    /// Writes `p_0(x), .., p_{out.len()-1}(x)` into `out`.
    pub fn values_into(&self, x: f64, out: &mut [f64]) {
        if out.is_empty() {
            return;
        }
        assert!(out.len() <= self.diag.len() + 1, "recurrence too short");
        out[0] = 1.0 / self.mass.sqrt();
        let mut prev = 0.0;
        for j in 0..out.len() - 1 {
            let next = ((x - self.diag[j]) * out[j] - self.off[j] * prev) / self.off[j + 1];
            prev = out[j];
            out[j + 1] = next;
        }
    }

    /// `p_m(x)` and `p_m'(x)` together with `sum_{j<m} p_j(x)^2`.
    fn eval_with_derivative(&self, m: usize, x: f64) -> (f64, f64, f64) {
        let mut p_prev = 0.0;
        let mut p = 1.0 / self.mass.sqrt();
        let mut d_prev = 0.0;
        let mut d = 0.0;
        let mut christoffel_sum = 0.0;
        for j in 0..m {
            christoffel_sum += p * p;
            let p_next = ((x - self.diag[j]) * p - self.off[j] * p_prev) / self.off[j + 1];
            let d_next = ((x - self.diag[j]) * d + p - self.off[j] * d_prev) / self.off[j + 1];
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
        }
        (p, d, christoffel_sum)
    }
}

/// `m`-point Gauss–Jacobi rule for `(1-x)^alpha (1+x)^beta` on `[-1, 1]`,
/// exact for polynomials of degree `2m - 1`.
pub fn gauss_jacobi(m: usize, alpha: f64, beta: f64) -> Result<Rule1d> {
    if m == 0 {
        return Err(Error::InvalidInput("node count must be at least 1".into()));
    }
    if m > MAX_RULE_NODES {
        return Err(Error::OrderTooLarge {
            order: 2 * m - 1,
            nodes: m,
            cap: MAX_RULE_NODES,
        });
    }
    let rec = JacobiRecurrence::new(m, alpha, beta)?;
    let jacobi = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            rec.diag[i]
        } else if i + 1 == j {
            rec.off[j]
        } else if j + 1 == i {
            rec.off[i]
        } else {
            0.0
        }
    });
    let eig = jacobi
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NodeComputation(format!("tridiagonal eigenproblem of size {m}")))?;
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if nodes.iter().any(|x| !x.is_finite()) {
        return Err(Error::NodeComputation("non-finite eigenvalue".into()));
    }
    nodes.sort_by(f64::total_cmp);

    let mut weights = Vec::with_capacity(m);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp, _) = rec.eval_with_derivative(m, *x);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.is_finite() || step.abs() > 1e-6 {
                break;
            }
            *x -= step;
            if step.abs() < 1e-17 {
                break;
            }
        }
        *x = x.clamp(-1.0, 1.0);
        let (_, _, s) = rec.eval_with_derivative(m, *x);
        weights.push(1.0 / s);
    }
    // symmetric weights give exactly antisymmetric nodes
    if alpha == beta {
        for i in 0..m / 2 {
            let j = m - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -x;
            nodes[j] = x;
            let w = 0.5 * (weights[i] + weights[j]);
            weights[i] = w;
            weights[j] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
    }
    Ok(Rule1d { nodes, weights })
}

/// `m`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> Result<Rule1d> {
    gauss_jacobi(m, 0.0, 0.0)
}

/// Gauss nodes and weights for the weight `(1-x^2)^(a-1/2)` on `[-1, 1]`:
/// the zeros of the degree-`m` Gegenbauer-type orthogonal polynomial.
pub fn gauss_nodes_1d(m: usize, a: f64) -> Result<Rule1d> {
    if !(a >= 0.0) {
        return Err(Error::InvalidInput(format!("weight exponent a = {a} must be >= 0")));
    }
    gauss_jacobi(m, a - 0.5, a - 0.5)
}
