//! The three-stage transformation chain V₀ → V₁ → V₂ → V₃ with bound-state
//! tracking, the σ solve and the optional ℓ-raising step.

mod mpet;
mod origin;
mod sigma;
mod stages;
mod transform;

use std::sync::Arc;

use num_complex::Complex64;

pub use mpet::{inverse_square_content, mpet_raise, mpet_raise_potential, RaiseVariant};
pub use origin::OriginSeries;
pub use sigma::{solve_sigma, SigmaSolution, SIGMA_LO, SIGMA_SAMPLES};
pub use stages::{
    bound_state_closed_form, decaying_tail, origin_switch, regular_solution, stage1, stage2, stage3, track_bound_state,
    transform_scattering_solution, zero_energy_column, StageState, ZeroEnergyColumn, CANCELLATION_RADIUS,
    MIN_ORIGIN_SWITCH,
};
pub use transform::{continue_from_origin, Rank1Transform};

use crate::marchenko::{
    build_kernel, extract_potential, jost_closed_form, solve_marchenko, MarchenkoError, MarchenkoSolution,
    SeparableKernel,
};
use crate::numerics::{NumericsError, RadialGrid};
use crate::smatrix::{bound_state_norms, BargmannParams, BoundStateNorms, SMatrixError};

#[derive(Debug, Clone, thiserror::Error)]
pub enum ChainError {
    #[error("no σ with [F(0)T(0)]₂₁ = 0 on ({lo}, {hi}]")]
    NoSigma { lo: f64, hi: f64 },
    #[error("stage {stage}: factor J singular at x = {x} (value {value:e})")]
    SingularFactor { stage: usize, x: f64, value: f64 },
    #[error("stage {stage}: transform excluded at k² = {k2}")]
    ExcludedEnergy { stage: usize, k2: f64 },
    #[error("ℓ-raising step: {what} singular at x = {x}")]
    SingularMpet { x: f64, what: &'static str },
    #[error("bound-state normalisation: {0}")]
    Normalization(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Marchenko(#[from] MarchenkoError),
    #[error(transparent)]
    SMatrix(#[from] SMatrixError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Clone, Debug, Default)]
pub struct ChainOptions {
    /// Upper end of the σ scan; defaults to 5κ (5 fm⁻¹ without a bound state).
    pub sigma_max: Option<f64>,
}

/// Everything from the scattering data to V₃.
#[derive(Clone, Debug)]
pub struct Chain {
    pub kernel: SeparableKernel,
    pub marchenko: MarchenkoSolution,
    pub norms: Option<BoundStateNorms>,
    pub kappa: Option<f64>,
    pub sigma: Option<SigmaSolution>,
    /// Stages 0 to 3.
    pub stages: Vec<Arc<StageState>>,
}

impl Chain {
    pub fn build(params: &BargmannParams, grid: &Arc<RadialGrid>, opts: &ChainOptions) -> Result<Self, ChainError> {
        let norms = bound_state_norms(params)?;
        let kernel = build_kernel(params, &norms)?;
        Self::from_kernel(kernel, Some((params.kappa, norms)), grid, opts)
    }

    /// The chain for arbitrary separable data. An empty kernel (S̄ = I, no
    /// bound state) yields identity stages.
    pub fn from_kernel(
        kernel: SeparableKernel,
        bound: Option<(f64, BoundStateNorms)>,
        grid: &Arc<RadialGrid>,
        opts: &ChainOptions,
    ) -> Result<Self, ChainError> {
        let marchenko = solve_marchenko(&kernel, grid)?;
        let v0 = extract_potential(&marchenko)?;
        let sigma = if kernel.is_empty() {
            None
        } else {
            let hi = opts.sigma_max.unwrap_or_else(|| bound.map_or(5.0, |(k, _)| 5.0 * k));
            Some(solve_sigma(|k: Complex64| Ok(jost_closed_form(&marchenko, k)?.value), hi)?)
        };
        let phi0 = match bound {
            Some((kappa, norms)) => Some((bound_state_closed_form(&marchenko, kappa, &norms)?, -kappa * kappa)),
            None => None,
        };
        let s0 = Arc::new(StageState::initial(v0, phi0, sigma.as_ref().map(|s| s.sigma)));
        let s1 = stage1(&s0)?;
        let s2 = stage2(&s1)?;
        let s3 = stage3(&s2)?;
        Ok(Self {
            kernel,
            marchenko,
            norms: bound.map(|b| b.1),
            kappa: bound.map(|b| b.0),
            sigma,
            stages: vec![s0, s1, s2, s3],
        })
    }

    pub fn stage(&self, n: usize) -> &Arc<StageState> {
        &self.stages[n]
    }

    pub fn last(&self) -> &Arc<StageState> {
        self.stages.last().expect("four stages")
    }
}

#[cfg(test)]
mod tests;
