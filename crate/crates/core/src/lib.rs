//! Inverse scattering for a two-channel (ℓ = 0, 2) Bargmann S-matrix: the
//! separable Marchenko solve, a three-stage phase-equivalent transformation
//! chain, and a forward solver to check the results.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod marchenko;
pub mod numerics;
pub mod smatrix;
pub mod verify;
