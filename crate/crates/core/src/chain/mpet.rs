use std::sync::Arc;

use super::stages::{regular_solution, StageState};
use super::ChainError;
use crate::marchenko::PotentialTable;
use crate::numerics::{RMat2, RadialPotential};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RaiseVariant {
    /// V₄ = V₃ − 2[G̃₃⁻¹G̃₃′]′: both labels + 1.
    Inverse,
    /// X = G₃[∫₀ˣ G̃₃G₃]⁻¹, V₄ = V₃ − 2[X G̃₃]′: both labels + 2.
    Direct,
}

impl RaiseVariant {
    pub fn raise(self) -> u32 {
        match self {
            Self::Inverse => 1,
            Self::Direct => 2,
        }
    }
}

/// The ℓ-raising transformation of any tabulated potential, built on its
/// zero-energy regular solution. The centrifugal content of the result
/// for the raised labels is removed from the stored values.
pub fn mpet_raise_potential(pot: &PotentialTable, variant: RaiseVariant) -> Result<PotentialTable, ChainError> {
    let g = regular_solution(pot, 0.0)?;
    let gram = g.gram.as_ref().expect("gram requested");
    let pts = pot.grid.points();
    let new_labels = pot.labels.map(|l| l + variant.raise());
    let c_old = RMat2::centrifugal(pot.labels);
    let c_new = RMat2::centrifugal(new_labels);
    let mut values = Vec::with_capacity(pts.len());
    for (i, &x) in pts.iter().enumerate() {
        let q = pot.values[i] + c_old.scale(1.0 / (x * x));
        let (gi, dgi) = (g.values[i], g.derivs[i]);
        let total = match variant {
            RaiseVariant::Inverse => {
                let inv = gi.inverse().ok_or(ChainError::SingularMpet { x, what: "G₃" })?;
                let l = dgi * inv;
                // [G̃⁻¹G̃′]′ = (L′)ᵀ = (Q − L²)ᵀ with L = G′G⁻¹.
                q - (q - l * l).transpose().scale(2.0)
            }
            RaiseVariant::Direct => {
                let inv = gram[i].inverse().ok_or(ChainError::SingularMpet { x, what: "∫G̃₃G₃" })?;
                let gt = gi.transpose();
                let d = dgi * inv * gt + gi * inv * dgi.transpose() - gi * inv * (gt * gi) * inv * gt;
                q - d.scale(2.0)
            }
        };
        let v = total - c_new.scale(1.0 / (x * x));
        let off = 0.5 * (v.m[0][1] + v.m[1][0]);
        values.push(RMat2::sym(v.m[0][0], off, v.m[1][1]));
    }
    Ok(PotentialTable::new(Arc::clone(&pot.grid), values, new_labels)?)
}

/// [`mpet_raise_potential`] applied to the last stage, as stage 4.
pub fn mpet_raise(state3: &Arc<StageState>, variant: RaiseVariant) -> Result<Arc<StageState>, ChainError> {
    let v4 = mpet_raise_potential(&state3.potential, variant)?;
    Ok(Arc::new(StageState {
        stage: state3.stage + 1,
        potential: v4,
        transform: None,
        bound: None,
        bound_energy: state3.bound_energy,
        sigma: state3.sigma,
        carry: None,
        previous: Some(Arc::clone(state3)),
    }))
}

/// Least-squares c in x²V(x) ≈ c over the outer half of the table, per entry
/// of V + C/x²: the effective inverse-square content.
pub fn inverse_square_content(pot: &PotentialTable) -> RMat2 {
    let pts = pot.grid.points();
    let c = RMat2::centrifugal(pot.labels);
    let start = pot.grid.nearest(0.5 * pot.grid.r_max());
    let mut acc = RMat2::zero();
    for &x in &pts[start..] {
        acc += pot.coupling(x).scale(x * x) + c;
    }
    acc.scale(1.0 / (pts.len() - start) as f64)
}
