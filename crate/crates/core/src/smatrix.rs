//! The rational two-channel S-matrix, its poles and residues, the
//! bound-state normalisation, and the rank-one modification T(k).

use num_complex::Complex64;

use crate::numerics::{contour_residue, CMat2, NumericsError, RESIDUE_NODES};

/// Distance from a pole below which [`eval_s`] refuses to evaluate.
pub const POLE_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SMatrixError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("k = {k} is within {POLE_GUARD:e} of the pole {pole}")]
    PoleProximity { k: Complex64, pole: Complex64 },
    #[error("poles {a} and {b} coincide")]
    PoleCoincidence { a: Complex64, b: Complex64 },
    #[error("bound-state residue is not rank one (det/|R|² = {0:e})")]
    NotRankOne(f64),
    #[error("bound-state residue admits no positive semidefinite factorisation")]
    NotSemidefinite,
    #[error("modification data: {0}")]
    InvalidModification(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Parameters (χ, φ, κ) of the rational S-matrix, all in fm⁻¹.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BargmannParams {
    pub chi: f64,
    pub phi: f64,
    pub kappa: f64,
}

impl BargmannParams {
    pub fn new(chi: f64, phi: f64, kappa: f64) -> Result<Self, SMatrixError> {
        for (name, v) in [("chi", chi), ("phi", phi), ("kappa", kappa)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SMatrixError::InvalidParams(format!("{name} = {v} must be positive")));
            }
        }
        if (kappa - phi).abs() < 1e-8 {
            return Err(SMatrixError::InvalidParams(format!("kappa = {kappa} coincides with phi = {phi}")));
        }
        Ok(Self { chi, phi, kappa })
    }

    /// χ = 0.26, φ = 0.944, κ = 0.232 fm⁻¹.
    pub fn golden() -> Self {
        Self { chi: 0.26, phi: 0.944, kappa: 0.232 }
    }

    /// Bound-state energy −κ² in fm⁻².
    pub fn bound_energy(&self) -> f64 {
        -self.kappa * self.kappa
    }

    /// Every pole of S in the complex plane: iφ, iκ and the four roots of
    /// k⁴ + 4χ⁴.
    fn singularities(&self) -> Vec<Complex64> {
        let c = self.chi;
        vec![
            Complex64::new(0.0, self.phi),
            Complex64::new(0.0, self.kappa),
            Complex64::new(c, c),
            Complex64::new(-c, c),
            Complex64::new(c, -c),
            Complex64::new(-c, -c),
        ]
    }
}

/// S(k) = B(k) diag(f(k), 1) B(k)ᵀ / (k⁴ + 4χ⁴) with
/// B = [[2χ², k²], [−k², 2χ²]] and f = (k+iφ)(k+iκ)/((k−iφ)(k−iκ)).
pub fn eval_s(p: &BargmannParams, k: Complex64) -> Result<CMat2, SMatrixError> {
    for pole in p.singularities() {
        if (k - pole).norm() < POLE_GUARD {
            return Err(SMatrixError::PoleProximity { k, pole });
        }
    }
    let i = Complex64::i();
    let f = (k + i * p.phi) * (k + i * p.kappa) / ((k - i * p.phi) * (k - i * p.kappa));
    let chi2 = Complex64::from(2.0 * p.chi * p.chi);
    let k2 = k * k;
    let b = CMat2::new(chi2, k2, -k2, chi2);
    let d = CMat2::diag(f, Complex64::from(1.0));
    let den = k2 * k2 + chi2 * chi2;
    Ok((b * d * b.transpose()).scale(Complex64::from(1.0) / den))
}

/// S̄ = D S D with D = e^{−iπ𝓛/2} = diag(1, −1) for ℓ₂ = 2. An involution.
pub fn to_sbar(s: &CMat2) -> CMat2 {
    let mut out = *s;
    out.m[0][1] = -out.m[0][1];
    out.m[1][0] = -out.m[1][0];
    out
}

/// Upper-half-plane poles sorted by imaginary part (then real part).
pub fn enumerate_poles(p: &BargmannParams) -> Result<Vec<Complex64>, SMatrixError> {
    let mut poles: Vec<Complex64> = p.singularities().into_iter().filter(|z| z.im > 0.0).collect();
    poles.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    for (n, a) in poles.iter().enumerate() {
        for b in &poles[n + 1..] {
            if (a - b).norm() < 1e-8 {
                return Err(SMatrixError::PoleCoincidence { a: *a, b: *b });
            }
        }
    }
    Ok(poles)
}

/// Contour radius for a pole: 0.4 of the distance to the nearest other
/// singularity.
fn residue_radius(p: &BargmannParams, pole: Complex64) -> f64 {
    p.singularities().into_iter().map(|z| (z - pole).norm()).filter(|d| *d > 1e-12).fold(f64::INFINITY, f64::min) * 0.4
}

/// Residue of S at every upper-half-plane pole.
pub fn residue_matrices(p: &BargmannParams) -> Result<Vec<(Complex64, CMat2)>, SMatrixError> {
    let poles = enumerate_poles(p)?;
    let mut out = Vec::with_capacity(poles.len());
    for pole in poles {
        let r = residue_radius(p, pole);
        let res = contour_residue(|k| eval_s(p, k).unwrap_or_else(|_| CMat2::zero()), pole, r, RESIDUE_NODES)?;
        out.push((pole, res));
    }
    Ok(out)
}

/// Asymptotic normalisation constants of the bound state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundStateNorms {
    pub a1: f64,
    pub a2: f64,
}

impl BoundStateNorms {
    /// A·Ã.
    pub fn matrix(&self) -> CMat2 {
        CMat2::outer([self.a1.into(), self.a2.into()], [self.a1.into(), self.a2.into()])
    }
}

/// Factor the bound-state residue as A·Ã. The residue R of S at iκ enters
/// through i·R, which must be real, symmetric, rank one and semidefinite
/// up to a global sign; the sign is fixed by semidefiniteness.
pub fn bound_state_norms(p: &BargmannParams) -> Result<BoundStateNorms, SMatrixError> {
    let pole = Complex64::new(0.0, p.kappa);
    let res = contour_residue(
        |k| eval_s(p, k).unwrap_or_else(|_| CMat2::zero()),
        pole,
        residue_radius(p, pole),
        RESIDUE_NODES,
    )?;
    norms_from_residue(&res)
}

pub(crate) fn norms_from_residue(res: &CMat2) -> Result<BoundStateNorms, SMatrixError> {
    let m = res.scale(Complex64::i());
    let scale = m.max_abs();
    if m.im().max_abs() > 1e-8 * scale.max(1e-300) || m.asymmetry() > 1e-8 * scale {
        return Err(SMatrixError::NotRankOne(f64::NAN));
    }
    let r = m.re();
    let rank = r.det().abs() / (scale * scale);
    if rank > 1e-8 {
        return Err(SMatrixError::NotRankOne(rank));
    }
    for sign in [1.0, -1.0] {
        let q = r.scale(sign);
        if q.m[0][0] >= 0.0 && q.m[1][1] >= 0.0 && q.trace() > 0.0 {
            let a1 = q.m[0][0].sqrt();
            let a2 = q.m[1][1].sqrt().copysign(q.m[0][1]);
            if a1 == 0.0 {
                return Ok(BoundStateNorms { a1: 0.0, a2: q.m[1][1].sqrt() });
            }
            return Ok(BoundStateNorms { a1, a2 });
        }
    }
    Err(SMatrixError::NotSemidefinite)
}

/// Data of the stage-one S-matrix modification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModificationData {
    pub sigma: f64,
    /// 𝓒 = F̃(iσ)/(2σ).
    pub c: CMat2,
    /// s = (𝓒̃𝓒)₂₂.
    pub s: f64,
}

impl ModificationData {
    /// Builds 𝓒 and s from the Jost matrix at iσ.
    pub fn from_jost(sigma: f64, jost_at_i_sigma: &CMat2) -> Result<Self, SMatrixError> {
        if !(sigma > 0.0) {
            return Err(SMatrixError::InvalidModification(format!("sigma = {sigma}")));
        }
        let c = jost_at_i_sigma.transpose().scale(Complex64::from(0.5 / sigma));
        let s = (c.transpose() * c).m[1][1];
        if s.im.abs() > 1e-10 * s.norm() {
            return Err(SMatrixError::InvalidModification(format!("s = {s} is not real")));
        }
        let data = Self { sigma, c, s: s.re };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<(), SMatrixError> {
        if !(self.s > 0.0) {
            return Err(SMatrixError::InvalidModification(format!("s = {} must be positive", self.s)));
        }
        let p = CMat2::proj2();
        let lhs = p.scale(Complex64::from(self.s));
        let rhs = p * self.c.transpose() * self.c * p;
        if (lhs - rhs).max_abs() > 1e-10 * self.s.max(1.0) {
            return Err(SMatrixError::InvalidModification("s𝓟 ≠ 𝓟𝓒̃𝓒𝓟".into()));
        }
        Ok(())
    }
}

/// T(k) = I − 2σ(σ+ik)⁻¹ s⁻¹ 𝓒𝓟𝓒̃.
pub fn modification_matrix(d: &ModificationData, k: Complex64) -> Result<CMat2, SMatrixError> {
    let den = Complex64::from(d.sigma) + Complex64::i() * k;
    if den.norm() < POLE_GUARD {
        return Err(SMatrixError::PoleProximity { k, pole: Complex64::new(0.0, d.sigma) });
    }
    let cpc = d.c * CMat2::proj2() * d.c.transpose();
    let factor = Complex64::from(2.0 * d.sigma / d.s) / den;
    Ok(CMat2::identity() - cpc.scale(factor))
}
