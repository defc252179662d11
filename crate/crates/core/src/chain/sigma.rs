use num_complex::Complex64;

use super::ChainError;
use crate::numerics::{scan_roots, CMat2};
use crate::smatrix::{modification_matrix, ModificationData};

/// Default scan: σ ∈ (SIGMA_LO, 5κ] on this many samples.
pub const SIGMA_SAMPLES: usize = 2000;
pub const SIGMA_LO: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct SigmaSolution {
    pub sigma: f64,
    /// ζ₀ = F₂₂(0)/F₂₁(0).
    pub zeta0: f64,
    /// Both roots ζ₀ ± √(ζ₀² + 1).
    pub zeta_roots: [f64; 2],
    /// Every σ found on the scan, ascending; `sigma` is the first.
    pub all: Vec<f64>,
    /// |[F(0)T(0)]₂₁| at `sigma`.
    pub residual: f64,
    pub modification: ModificationData,
}

impl SigmaSolution {
    pub fn multiplicity(&self) -> usize {
        self.all.len()
    }
}

/// Smallest σ > 0 with ζ(σ)² − 2ζ₀ζ(σ) − 1 = 0, ζ(σ) = F₂₂(iσ)/F₂₁(iσ).
/// Multiplied through by F₂₁(iσ)²F₂₁(0) the condition is free of poles in
/// ζ and covers both roots at once.
pub fn solve_sigma<F>(jost: F, sigma_max: f64) -> Result<SigmaSolution, ChainError>
where
    F: Fn(Complex64) -> Result<CMat2, ChainError>,
{
    let f0 = jost(Complex64::from(0.0))?;
    let (p, q) = (f0.m[1][0].re, f0.m[1][1].re);
    if p.abs() < 1e-300 {
        return Err(ChainError::NoSigma { lo: SIGMA_LO, hi: sigma_max });
    }
    let zeta0 = q / p;
    let root = (zeta0 * zeta0 + 1.0).sqrt();
    let g = |s: f64| -> f64 {
        match jost(Complex64::new(0.0, s)) {
            Ok(f) => {
                let (a, b) = (f.m[1][0].re, f.m[1][1].re);
                p * (b * b - a * a) - 2.0 * q * a * b
            }
            Err(_) => f64::NAN,
        }
    };
    let all = scan_roots(g, SIGMA_LO, sigma_max, SIGMA_SAMPLES, 1e-15)?;
    let sigma = *all.first().ok_or(ChainError::NoSigma { lo: SIGMA_LO, hi: sigma_max })?;
    let fs = jost(Complex64::new(0.0, sigma))?;
    let modification = ModificationData::from_jost(sigma, &fs)?;
    let t0 = modification_matrix(&modification, Complex64::from(0.0))?;
    let residual = (f0 * t0).m[1][0].norm();
    Ok(SigmaSolution { sigma, zeta0, zeta_roots: [zeta0 + root, zeta0 - root], all, residual, modification })
}
