use num_complex::Complex64;

use super::MarchenkoError;
use crate::numerics::CMat2;
use crate::smatrix::{residue_matrices, BargmannParams, BoundStateNorms};

/// One term M e^{λ(r+r′)} of the separable input kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelTerm {
    pub rate: Complex64,
    pub weight: CMat2,
}

/// Q(r, r′) = Σₙ Mₙ e^{λₙ(r+r′)}; a function of r + r′ only.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeparableKernel {
    terms: Vec<KernelTerm>,
}

impl SeparableKernel {
    pub fn new(terms: Vec<KernelTerm>) -> Result<Self, MarchenkoError> {
        for t in &terms {
            if !(t.rate.re < 0.0) {
                return Err(MarchenkoError::GrowingTerm(t.rate));
            }
            if !t.weight.is_finite() {
                return Err(MarchenkoError::InvalidKernel(format!("non-finite weight at rate {}", t.rate)));
            }
        }
        Ok(Self { terms })
    }

    /// The kernel of S̄ = I without bound states.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[KernelTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Q as a function of s = r + r′.
    pub fn eval(&self, s: f64) -> CMat2 {
        self.terms.iter().fold(CMat2::zero(), |acc, t| acc + t.weight.scale((t.rate * s).exp()))
    }

    /// Largest imaginary part and asymmetry of Q(s) over the sample points,
    /// relative to |Q|.
    pub fn reality_defect(&self, samples: &[f64]) -> f64 {
        samples
            .iter()
            .map(|&s| {
                let q = self.eval(s);
                let scale = q.max_abs().max(1e-300);
                (q.im().max_abs().max(q.asymmetry())) / scale
            })
            .fold(0.0, f64::max)
    }
}

/// Continuum terms λ = i·k_pole with weight −i·Res from closing the
/// contour above, plus the bound-state term (−κ, A·Ã).
pub fn build_kernel(params: &BargmannParams, norms: &BoundStateNorms) -> Result<SeparableKernel, MarchenkoError> {
    let residues = residue_matrices(params)?;
    kernel_from_residues(&residues, Some((params.kappa, *norms)))
}

pub fn kernel_from_residues(
    residues: &[(Complex64, CMat2)],
    bound: Option<(f64, BoundStateNorms)>,
) -> Result<SeparableKernel, MarchenkoError> {
    let i = Complex64::i();
    let mut terms: Vec<KernelTerm> =
        residues.iter().map(|(pole, res)| KernelTerm { rate: i * pole, weight: res.scale(-i) }).collect();
    if let Some((kappa, norms)) = bound {
        terms.push(KernelTerm { rate: Complex64::from(-kappa), weight: norms.matrix() });
    }
    let k = SeparableKernel::new(terms)?;
    let defect = k.reality_defect(&[0.5, 1.0, 2.0, 5.0]);
    if defect > 1e-10 {
        return Err(MarchenkoError::InvalidKernel(format!("kernel not real symmetric (defect {defect:e})")));
    }
    Ok(k)
}
