//! Independent forward coupled-channel solver: S-matrix on real k, bound
//! states, and the Riccati–Hankel matching basis.

pub mod acceptance;
mod bound;
mod forward;
mod riccati;

pub use bound::{find_bound_state, find_bound_state_in, find_bound_states, BoundOptions, BoundState};
pub use forward::{
    eigenphases, forward_on_nodes, forward_smatrix, forward_smatrix_continued, match_smatrix, max_deviation,
    regular_at, ForwardResult, PowerTail, TailOptions, MAX_COLUMN_CONDITION,
};
pub use riccati::{decaying, hankel_minus, hankel_plus, AsymptoticBasis, L_MAX};

use crate::numerics::NumericsError;

#[derive(Debug, Clone, thiserror::Error)]
pub enum VerifyError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("column solutions dependent at R = {radius} (condition {condition:e})")]
    DependentColumns { radius: f64, condition: f64 },
    #[error("no bound state: matching determinant keeps its sign on −E ∈ [{lo}, {hi}]")]
    NoBoundState { lo: f64, hi: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
