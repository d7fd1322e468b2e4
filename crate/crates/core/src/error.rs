use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {point:?} lies outside the closed domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("degree {k} too large: configured cap is {cap} for this measure and precision")]
    DegreeTooLarge { k: usize, cap: usize },

    #[error("Gram numerically singular at degree {k}: pivot ratio {ratio:.3e} below threshold {threshold:.1e}")]
    GramSingular { k: usize, ratio: f64, threshold: f64 },

    #[error("quadrature order {order} too large: {nodes} nodes exceeds the cap of {cap}")]
    OrderTooLarge { order: usize, nodes: usize, cap: usize },

    #[error("node computation failed: {0}")]
    NodeComputation(String),

    #[error("region outside domain")]
    RegionOutsideDomain,

    #[error("net too large: {size} centres exceeds the budget of {budget}")]
    NetTooLarge { size: usize, budget: usize },

    #[error("mass mismatch: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },

    #[error("LP size cap exceeded: {atoms} atoms, budget {budget}")]
    LpTooLarge { atoms: usize, budget: usize },

    #[error("transport LP failed: {0}")]
    LpFailed(String),

    #[error("Gram singular (smallest eigenvalue {eigmin:.3e}): dual basis undefined")]
    DualUndefined { eigmin: f64 },

    #[error("no points at level k = {k}")]
    EmptyLevel { k: usize },

    #[error("eigen-solver failure: {0}")]
    Eigen(String),

    #[error("quadrature refinements disagree by {rel_diff:.3e} (> 1%) at order {order}")]
    QuadratureInsufficient { order: usize, rel_diff: f64 },
}

impl Error {
    /// True for errors caused by hitting a numerical or size cap rather than
    /// by malformed input.
    pub fn is_numerical_cap(&self) -> bool {
        matches!(
            self,
            Error::DegreeTooLarge { .. }
                | Error::GramSingular { .. }
                | Error::OrderTooLarge { .. }
                | Error::NetTooLarge { .. }
                | Error::LpTooLarge { .. }
                | Error::LpFailed(_)
                | Error::NodeComputation(_)
                | Error::Eigen(_)
                | Error::QuadratureInsufficient { .. }
                | Error::DualUndefined { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
