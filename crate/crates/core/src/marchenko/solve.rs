use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{MarchenkoError, PotentialTable, SeparableKernel};
use crate::numerics::{composite_gauss, CMat2, ComplexLu, RMat2, RadialGrid, RadialPotential};

/// Per-node systems with a worse 1-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Coefficients of K(x, x′) = Σₙ Wₙ(x) e^{λₙx′} and their x-derivatives.
#[derive(Clone, Debug)]
pub struct NodeSolution {
    pub x: f64,
    pub w: Vec<CMat2>,
    pub dw: Vec<CMat2>,
}

impl NodeSolution {
    /// K(x, t).
    pub fn k_at(&self, kernel: &SeparableKernel, t: f64) -> CMat2 {
        self.w.iter().zip(kernel.terms()).fold(CMat2::zero(), |a, (w, term)| a + w.scale((term.rate * t).exp()))
    }

    /// K(x, x).
    pub fn k_diag(&self, kernel: &SeparableKernel) -> CMat2 {
        self.k_at(kernel, self.x)
    }

    /// d/dx K(x, x) from the analytic coefficient derivatives.
    pub fn dk_diag(&self, kernel: &SeparableKernel) -> CMat2 {
        let mut acc = CMat2::zero();
        for ((w, dw), term) in self.w.iter().zip(&self.dw).zip(kernel.terms()) {
            acc += (*dw + w.scale(term.rate)).scale((term.rate * self.x).exp());
        }
        acc
    }

    /// −2 d/dx K(x,x), still complex.
    pub fn potential(&self, kernel: &SeparableKernel) -> CMat2 {
        self.dk_diag(kernel).scale(Complex64::from(-2.0))
    }
}

/// Solves the separable reduction at one point:
/// Wₙ + Mₙe^{λₙx} − Σₘ Wₘ Mₙ e^{(λₘ+λₙ)x}/(λₘ+λₙ) = 0,
/// and its x-derivative, which shares the same matrix.
pub fn solve_node(kernel: &SeparableKernel, x: f64) -> Result<NodeSolution, MarchenkoError> {
    let terms = kernel.terms();
    let n = terms.len();
    if n == 0 {
        return Ok(NodeSolution { x, w: vec![], dw: vec![] });
    }
    let dim = 2 * n;
    let ex: Vec<Complex64> = terms.iter().map(|t| (t.rate * x).exp()).collect();
    // W (2 × 2N) solves W(I − G) = −E. Work with the transpose:
    // (I − G)ᵀ Wᵀ = −Eᵀ, with block G_{mn} = Mₙ e^{(λₘ+λₙ)x}/(λₘ+λₙ).
    let mut a = vec![Complex64::from(0.0); dim * dim];
    let mut gp = vec![CMat2::zero(); n * n];
    for m in 0..n {
        for (nn, tn) in terms.iter().enumerate() {
            let sum = terms[m].rate + tn.rate;
            let e = ex[m] * ex[nn];
            let g = tn.weight.scale(e / sum);
            gp[m * n + nn] = tn.weight.scale(e);
            for r in 0..2 {
                for c in 0..2 {
                    // (I − G)ᵀ at row (2nn + c), column (2m + r).
                    let delta = if m == nn && r == c { 1.0 } else { 0.0 };
                    a[(2 * nn + c) * dim + 2 * m + r] = Complex64::from(delta) - g.m[r][c];
                }
            }
        }
    }
    let lu = ComplexLu::new(dim, a).map_err(|_| MarchenkoError::Singular { x, condition: f64::INFINITY })?;
    let cond = lu.condition();
    if !(cond <= MAX_CONDITION) {
        return Err(MarchenkoError::Singular { x, condition: cond });
    }
    let solve_rhs = |rhs: &dyn Fn(usize) -> CMat2| -> Vec<CMat2> {
        // Column j of Wᵀ is row j of W.
        let mut cols = [vec![Complex64::from(0.0); dim], vec![Complex64::from(0.0); dim]];
        for nn in 0..n {
            let b = rhs(nn);
            for (j, col) in cols.iter_mut().enumerate() {
                col[2 * nn] = b.m[j][0];
                col[2 * nn + 1] = b.m[j][1];
            }
        }
        for col in cols.iter_mut() {
            lu.solve_in_place(col);
        }
        (0..n)
            .map(|nn| CMat2::new(cols[0][2 * nn], cols[0][2 * nn + 1], cols[1][2 * nn], cols[1][2 * nn + 1]))
            .collect()
    };
    let w = solve_rhs(&|nn| terms[nn].weight.scale(-ex[nn]));
    // W′(I − G) = W G′ − E′, G′_{mn} = Mₙ e^{(λₘ+λₙ)x}, E′ₙ = λₙ Mₙ e^{λₙx}.
    let dw = solve_rhs(&|nn| {
        let mut acc = terms[nn].weight.scale(-terms[nn].rate * ex[nn]);
        for m in 0..n {
            acc += w[m] * gp[m * n + nn];
        }
        acc
    });
    Ok(NodeSolution { x, w, dw })
}

/// The separable solve on every grid node plus the origin.
#[derive(Clone, Debug)]
pub struct MarchenkoSolution {
    pub kernel: SeparableKernel,
    pub grid: Arc<RadialGrid>,
    pub nodes: Vec<NodeSolution>,
    /// The solve at x = 0, needed for the Jost matrix.
    pub origin: NodeSolution,
}

pub fn solve_marchenko(kernel: &SeparableKernel, grid: &Arc<RadialGrid>) -> Result<MarchenkoSolution, MarchenkoError> {
    let nodes = grid.points().par_iter().map(|&x| solve_node(kernel, x)).collect::<Result<Vec<_>, _>>()?;
    Ok(MarchenkoSolution { kernel: kernel.clone(), grid: Arc::clone(grid), nodes, origin: solve_node(kernel, 0.0)? })
}

fn real_potential(c: &CMat2, x: f64) -> Result<RMat2, MarchenkoError> {
    let im = c.im().max_abs();
    if im > 1e-8 * c.max_abs().max(1.0) {
        return Err(MarchenkoError::ComplexPotential { x, imag: im });
    }
    let r = c.re();
    // Symmetrise away rounding-level asymmetry.
    let off = 0.5 * (r.m[0][1] + r.m[1][0]);
    Ok(RMat2::sym(r.m[0][0], off, r.m[1][1]))
}

/// V₀ = −2 d/dx K(x,x) on the grid, labels (0, 0).
pub fn extract_potential(sol: &MarchenkoSolution) -> Result<PotentialTable, MarchenkoError> {
    let mut values = Vec::with_capacity(sol.nodes.len());
    for node in &sol.nodes {
        let c = node.potential(&sol.kernel);
        if c.asymmetry() > 1e-8 * c.max_abs().max(1.0) {
            return Err(MarchenkoError::ComplexPotential { x: node.x, imag: c.asymmetry() });
        }
        values.push(real_potential(&c, node.x)?);
    }
    Ok(PotentialTable::new(Arc::clone(&sol.grid), values, [0, 0])?)
}

/// The reconstructed potential evaluated by a fresh separable solve at any
/// x, bypassing table interpolation.
#[derive(Clone, Debug)]
pub struct MarchenkoPotential {
    pub kernel: SeparableKernel,
}

impl MarchenkoPotential {
    pub fn eval(&self, x: f64) -> Result<RMat2, MarchenkoError> {
        let node = solve_node(&self.kernel, x)?;
        real_potential(&node.potential(&self.kernel), x)
    }
}

impl RadialPotential for MarchenkoPotential {
    fn coupling(&self, x: f64) -> RMat2 {
        self.eval(x).unwrap_or(RMat2::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN))
    }
    fn labels(&self) -> [u32; 2] {
        [0, 0]
    }
}

/// F(k) = I − Σₙ Wₙ(0)/(λₙ + ik).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JostMatrix {
    pub k: Complex64,
    pub value: CMat2,
}

pub fn jost_closed_form(sol: &MarchenkoSolution, k: Complex64) -> Result<JostMatrix, MarchenkoError> {
    jost_from_origin(&sol.kernel, &sol.origin, k)
}

pub(crate) fn jost_from_origin(
    kernel: &SeparableKernel,
    origin: &NodeSolution,
    k: Complex64,
) -> Result<JostMatrix, MarchenkoError> {
    let ik = Complex64::i() * k;
    let mut f = CMat2::identity();
    for (w, t) in origin.w.iter().zip(kernel.terms()) {
        let d = t.rate + ik;
        if d.norm() < 1e-12 {
            return Err(MarchenkoError::JostPole { k, rate: t.rate });
        }
        f -= w.scale(Complex64::from(1.0) / d);
    }
    Ok(JostMatrix { k, value: f })
}

/// Jost solution f(x,k) = e^{ikx}[I − Σₙ Wₙ(x)e^{λₙx}/(λₙ+ik)] and its
/// derivative at one node.
pub fn jost_solution_at(kernel: &SeparableKernel, node: &NodeSolution, k: Complex64) -> (CMat2, CMat2) {
    let ik = Complex64::i() * k;
    let mut br = CMat2::identity();
    let mut dbr = CMat2::zero();
    for ((w, dw), t) in node.w.iter().zip(&node.dw).zip(kernel.terms()) {
        let e = (t.rate * node.x).exp() / (t.rate + ik);
        br -= w.scale(e);
        dbr -= (*dw + w.scale(t.rate)).scale(e);
    }
    let ekx = (ik * node.x).exp();
    (br.scale(ekx), (br.scale(ik) + dbr).scale(ekx))
}

/// Length over which the slowest kernel term falls by e⁻⁴⁰.
fn decay_span(kernel: &SeparableKernel) -> f64 {
    let slowest = kernel.terms().iter().map(|t| -t.rate.re).fold(f64::INFINITY, f64::min);
    if slowest.is_finite() {
        40.0 / slowest
    } else {
        0.0
    }
}

/// K(r, r′) + Q(r + r′) + ∫_r^∞ K(r, t) Q(t + r′) dt by Gauss quadrature;
/// independent of the separable reduction used to find K.
pub fn equation_residual(kernel: &SeparableKernel, node: &NodeSolution, r_prime: f64) -> CMat2 {
    let r = node.x;
    let span = decay_span(kernel);
    let mut integral = CMat2::zero();
    for (t, w) in composite_gauss(r, r + span, (10.0 * span).ceil().max(1.0) as usize, 10) {
        integral += (node.k_at(kernel, t) * kernel.eval(t + r_prime)).scale(Complex64::from(w));
    }
    node.k_at(kernel, r_prime) + kernel.eval(r + r_prime) + integral
}

/// F(k) = I + ∫₀^∞ K(0, t) e^{ikt} dt by quadrature, for comparison with
/// [`jost_closed_form`]. Needs Im k > max Re λ for convergence.
pub fn jost_by_quadrature(sol: &MarchenkoSolution, k: Complex64) -> CMat2 {
    let span = decay_span(&sol.kernel);
    let mut f = CMat2::identity();
    for (t, w) in composite_gauss(0.0, span, (10.0 * span).ceil().max(1.0) as usize, 10) {
        f += sol.origin.k_at(&sol.kernel, t).scale((Complex64::i() * k * t).exp() * w);
    }
    f
}
