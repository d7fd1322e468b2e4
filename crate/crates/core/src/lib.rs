//! Weighted polynomial reproducing kernels on the unit ball and model convex
//! domains, with sampling and interpolation diagnostics for point families.

// `!(x > 0.0)` and friends are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod dd;
pub mod diagnostics;
pub mod error;
pub mod generators;
pub mod geometry;
pub mod localized;
pub mod measures;
pub mod polyspace;
pub mod quadrature;
pub mod report;
pub mod scaling;
pub mod transport;

pub use error::{Error, Result};
pub use measures::{enumerate_multiindices, poly_dim, Domain, Measure, MultiIndex, QuadRule};
pub use polyspace::{orthonormal_basis, BasisOptions, BasisPath, PolySpace, Precision};
pub use quadrature::gauss_nodes_1d;
