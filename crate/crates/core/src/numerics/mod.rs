//! Shared numerical substrate.

mod contour;
mod grid;
mod interp;
mod linalg;
mod mat2;
mod numerov;
mod ode;
mod quadrature;
mod roots;

pub use contour::{contour_residue, DEFAULT_NODES as RESIDUE_NODES};
pub use grid::RadialGrid;
pub use interp::{interpolate_mat, interpolate_scalar};
pub use linalg::ComplexLu;
pub use mat2::{CMat2, Mat2, RMat2, Scalar};
pub use numerov::numerov_matrix;
pub use ode::{
    effective, integrate_matrix_ode, integrate_system, propagate, regular_series, regular_start, wronskian, Direction,
    OdeOptions, OdeProblem, Propagation, RadialPotential, SolutionTable, Start, WaveTable, ZeroPotential,
};
pub use quadrature::{composite_gauss, cumulative_quadrature, cumulative_scalar, gauss_legendre, From as QuadFrom};
pub use roots::{find_root_bracketed, scan_roots};

#[derive(Debug, Clone, thiserror::Error)]
pub enum NumericsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite value at x = {x}")]
    NonFinite { x: f64 },
    #[error("step size underflow at x = {x}; shrink x_min or supply a series start")]
    StepUnderflow { x: f64 },
    #[error("step limit exceeded at x = {x}")]
    TooManySteps { x: f64 },
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("singular linear system (condition {condition:e})")]
    Singular { condition: f64 },
}
