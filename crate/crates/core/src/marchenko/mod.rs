//! Separable Marchenko kernel, its exact per-node solution, the reconstructed
//! potential and the closed-form Jost matrix.

mod kernel;
mod potential;
mod solve;

use num_complex::Complex64;

pub use kernel::{build_kernel, kernel_from_residues, KernelTerm, SeparableKernel};
pub use potential::{check_integrability, EntryIntegrability, IntegrabilityReport, PotentialTable, ENTRIES};
pub use solve::{
    equation_residual, extract_potential, jost_by_quadrature, jost_closed_form, jost_solution_at, solve_marchenko,
    solve_node, JostMatrix, MarchenkoPotential, MarchenkoSolution, NodeSolution, MAX_CONDITION,
};

use crate::numerics::NumericsError;
use crate::smatrix::SMatrixError;

#[derive(Debug, Clone, thiserror::Error)]
pub enum MarchenkoError {
    #[error("kernel term with rate {0} does not decay")]
    GrowingTerm(Complex64),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("singular Marchenko system at x = {x} (condition {condition:e})")]
    Singular { x: f64, condition: f64 },
    #[error("potential not real symmetric at x = {x} (defect {imag:e})")]
    ComplexPotential { x: f64, imag: f64 },
    #[error("Jost matrix singular: λ + ik = 0 for k = {k}, λ = {rate}")]
    JostPole { k: Complex64, rate: Complex64 },
    #[error(transparent)]
    SMatrix(#[from] SMatrixError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
