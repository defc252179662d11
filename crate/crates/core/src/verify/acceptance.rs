//! The acceptance criteria as reusable checks. The CLI report and the
//! acceptance test target both run these.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{find_bound_state, forward_smatrix, forward_smatrix_continued, max_deviation, TailOptions, VerifyError};
use crate::chain::{track_bound_state, Chain, ChainError, ChainOptions};
use crate::marchenko::{
    build_kernel, check_integrability, equation_residual, extract_potential, jost_by_quadrature, jost_closed_form,
    kernel_from_residues, solve_marchenko, solve_node, MarchenkoError,
};
use crate::numerics::{
    integrate_matrix_ode, wronskian, CMat2, Direction, NumericsError, OdeOptions, OdeProblem, RMat2, RadialGrid, Start,
};
use crate::smatrix::{bound_state_norms, eval_s, BargmannParams, SMatrixError};

/// σ for the reference parameters χ = 0.26, φ = 0.944, κ = 0.232 fm⁻¹.
pub const GOLDEN_SIGMA: f64 = 0.2053483144;

pub const CHECK_IDS: [&str; 9] = ["AC-1", "AC-2", "AC-3", "AC-4", "AC-5", "AC-6", "AC-7", "AC-8", "AC-9"];

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error("unknown check {0:?}")]
    Unknown(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Marchenko(#[from] MarchenkoError),
    #[error(transparent)]
    SMatrix(#[from] SMatrixError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRecord {
    pub id: String,
    pub title: String,
    pub passed: bool,
    /// Worst measured value of the quantity compared against `tolerance`.
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
    pub seconds: f64,
}

/// Refined grid used for the reference run: geometric from 10⁻⁶ fm to
/// 0.02 fm, then uniform to 160 fm.
pub fn golden_grid() -> RadialGrid {
    RadialGrid::origin_refined(1e-6, 160.0, 0.02, 25).expect("valid constant grid")
}

/// Shared inputs: the parameters and the full chain on one grid.
pub struct CheckContext {
    pub params: BargmannParams,
    pub grid: Arc<RadialGrid>,
    pub chain: Chain,
}

impl CheckContext {
    pub fn new(params: BargmannParams, grid: Arc<RadialGrid>, opts: &ChainOptions) -> Result<Self, CheckError> {
        let chain = Chain::build(&params, &grid, opts)?;
        Ok(Self { params, grid, chain })
    }

    pub fn golden() -> Result<Self, CheckError> {
        Self::new(BargmannParams::golden(), Arc::new(golden_grid()), &ChainOptions::default())
    }

    fn is_golden(&self) -> bool {
        let g = BargmannParams::golden();
        self.params.chi == g.chi && self.params.phi == g.phi && self.params.kappa == g.kappa
    }
}

pub fn run_check(id: &str, ctx: &CheckContext) -> Result<CheckRecord, CheckError> {
    let start = Instant::now();
    let mut rec = match id {
        "AC-1" => ac1(ctx)?,
        "AC-2" => ac2(ctx)?,
        "AC-3" => ac3(ctx)?,
        "AC-4" => ac4(ctx)?,
        "AC-5" => ac5(ctx)?,
        "AC-6" => ac6(ctx)?,
        "AC-7" => ac7(ctx)?,
        "AC-8" => ac8()?,
        "AC-9" => ac9(ctx)?,
        other => return Err(CheckError::Unknown(other.to_string())),
    };
    rec.seconds = start.elapsed().as_secs_f64();
    if let Some(limit) = runtime_limit(id) {
        if rec.seconds >= limit {
            rec.passed = false;
            rec.detail.push_str(&format!("; runtime {:.1} s over the {limit} s budget", rec.seconds));
        }
    }
    Ok(rec)
}

fn runtime_limit(id: &str) -> Option<f64> {
    match id {
        "AC-1" => Some(5.0),
        "AC-2" => Some(10.0),
        "AC-3" => Some(60.0),
        _ => None,
    }
}

fn record(id: &str, title: &str, residual: f64, tolerance: f64, passed: bool, detail: String) -> CheckRecord {
    CheckRecord {
        id: id.into(),
        title: title.into(),
        passed: passed && residual.is_finite(),
        residual,
        tolerance,
        detail,
        seconds: 0.0,
    }
}

fn ac1(ctx: &CheckContext) -> Result<CheckRecord, CheckError> {
    // Timed from scratch: kernel, origin solve, σ scan.
    let p = &ctx.params;
    let kernel = build_kernel(p, &bound_state_norms(p)?)?;
    let grid = Arc::new(RadialGrid::uniform(1e-3, 1.0, 600)?);
    let sol = solve_marchenko(&kernel, &grid)?;
    let s = crate::chain::solve_sigma(|k: Complex64| Ok(jost_closed_form(&sol, k)?.value), 5.0 * p.kappa)?;
    let detail =
        format!("sigma = {:.12} fm^-1, [F(0)T(0)]21 = {:.1e}, roots found = {}", s.sigma, s.residual, s.multiplicity());
    Ok(if ctx.is_golden() {
        let rel = (s.sigma - GOLDEN_SIGMA).abs() / GOLDEN_SIGMA;
        record("AC-1", "golden sigma", rel, 1e-6, rel < 1e-6, detail)
    } else {
        record("AC-1", "sigma gate residual", s.residual, 1e-10, s.residual < 1e-10, detail)
    })
}

fn ac2(ctx: &CheckContext) -> Result<CheckRecord, CheckError> {
    let kernel = &ctx.chain.kernel;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let r: f64 = rng.gen_range(0.2..8.0);
        let rp: f64 = rng.gen_range(0.2..8.0);
        let node = solve_node(kernel, r)?;
        worst = worst.max(equation_residual(kernel, &node, rp).max_abs());
    }
    Ok(record("AC-2", "Marchenko residual", worst, 1e-8, worst < 1e-8, "10 seeded (r, r') pairs in [0.2, 8] fm".into()))
}

/// The physical S-matrix in the (0, 2) convention: S̄ with the sign of the
/// ℓ = 2 partial wave restored.
fn restored_smatrix(p: &BargmannParams, k: f64) -> Result<CMat2, SMatrixError> {
    let d = CMat2::diag(Complex64::from(1.0), Complex64::from(-1.0));
    Ok(d * eval_s(p, Complex64::from(k))? * d)
}

pub const AC3_MOMENTA: [f64; 4] = [0.2, 0.5, 1.0, 1.5];

fn ac3(ctx: &CheckContext) -> Result<CheckRecord, CheckError> {
    let v0 = &ctx.chain.stages[0].potential;
    let v3 = &ctx.chain.stages[3].potential;
    let r = ctx.grid.r_max();
    let (mut d0, mut d3, mut spread): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in AC3_MOMENTA {
        let sbar = eval_s(&ctx.params, Complex64::from(k))?;
        d0 = d0.max(max_deviation(&forward_smatrix(v0, k, r)?.s, &sbar));
        let (f3, sp) = forward_smatrix_continued(v3, k, &TailOptions::default())?;
        d3 = d3.max(max_deviation(&f3.s, &restored_smatrix(&ctx.params, k)?));
        spread = spread.max(sp);
    }
    let passed = d0 < 1e-4 && d3 < 1e-3;
    Ok(record(
        "AC-3",
        "phase-equivalence round trip",
        d3.max(d0 * 10.0),
        1e-3,
        passed,
        format!("V0 vs S: {d0:.2e} (tol 1e-4); V3 vs restored S: {d3:.2e} (tol 1e-3); tail extrapolation spread {spread:.1e}"),
    ))
}

fn ac4(ctx: &CheckContext) -> Result<CheckRecord, CheckError> {
    let e = -ctx.params.kappa * ctx.params.kappa;
    let search = (1e-4, 1.0);
    let b0 = find_bound_state(&ctx.chain.stages[0].potential, search)?;
    let b3 = find_bound_state(&ctx.chain.stages[3].potential, search)?;
    let r0 = ((b0.energy - e) / e).abs();
    let r3 = ((b3.energy - e) / e).abs();
    let phi3 = track_bound_state(&ctx.chain.stages[3]).pop().expect("four stages");
    let x = ctx.grid.points();
    let window: Vec<f64> = x
        .iter()
        .zip(&phi3.values)
        .take_while(|(x, _)| **x <= 10.0 * ctx.grid.x_min() * (1.0 + 1e-12))
        .map(|(x, v)| v[1] / x.powi(3))
        .collect();
    let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mid = window.first().copied().unwrap_or(f64::NAN);
    let spread = (hi - lo) / mid.abs();
    let origin_ok = window.len() >= 2 && mid.abs() > 1e-12 && spread < 1e-2;
    Ok(record(
        "AC-4",
        "bound-state preservation",
        r0.max(r3),
        1e-4,
        r0 < 1e-4 && r3 < 1e-4 && origin_ok,
        format!(
            "E(V0) = {:.9}, E(V3) = {:.9} fm^-2; Phi3_D/x^3 = {mid:.6e} over [x_min, 10 x_min], spread {spread:.1e}",
            b0.energy, b3.energy
        ),
    ))
}

fn ac5(ctx: &CheckContext) -> Result<CheckRecord, CheckError> {
    let (v0, v1, v2) = (&ctx.chain.stages[0].potential, &ctx.chain.stages[1].potential, &ctx.chain.stages[2].potential);
    let x0 = ctx.grid.x_min();
    let d01 = (v1.values[0] - v0.values[0]).max_abs();
    let off = v2.values[0].m[0][1].abs();
    let probes = [0.5 * x0, x0, 2.0 * x0].map(|x| v2.value_at(x).m[1][1]);
    let probe_spread = probes.iter().map(|v| (v - probes[1]).abs()).fold(0.0, f64::max);
    let peak = v2
        .grid
        .points()
        .iter()
        .zip(&v2.values)
        .take_while(|(x, _)| **x <= 1.0)
        .map(|(_, v)| v.m[1][1].abs())
        .fold(0.0, f64::max);
    // Bounded means no trace of the cancelled 1/x² pieces: the probes agree
    // and the entry stays on the scale of V₁ near the origin.
    let scale = 10.0 * v1.values[0].max_abs().max(1.0);
    let bounded = peak < scale && probe_spread < 1e-3 * scale;
    Ok(record(
        "AC-5",
        "stage identities at the origin",
        d01.max(off * 0.1),
        1e-5,
        d01 < 1e-5 && off < 1e-4 && bounded,
        format!(
            "|V1-V0|(x_min) = {d01:.2e} (tol 1e-5); |V2_12(x_min)| = {off:.2e} (tol 1e-4); \
             max |V2_22| on [x_min, 1] = {peak:.4}, spread over x_min/2..2x_min = {probe_spread:.1e}"
        ),
    ))
}

fn ac6(ctx: &CheckContext) -> Result<CheckRecord, CheckError> {
    let y0 = &ctx.chain.stages[1].transform.as_ref().ok_or_else(no_stages)?.working;
    let y3 = &ctx.chain.stages[3].transform.as_ref().ok_or_else(no_stages)?.transformed;
    let mut worst: f64 = 0.0;
    for (i, x) in ctx.grid.points().iter().enumerate() {
        if (20.0..=35.0).contains(x) {
            let (a, b) = (y3.values[i], y0.values[i]);
            let diff = ((a[0] + b[0]).powi(2) + (a[1] + b[1]).powi(2)).sqrt();
            worst = worst.max(diff / (b[0].powi(2) + b[1].powi(2)).sqrt());
        }
    }
    Ok(record(
        "AC-6",
        "stage-3 inversion Y3 = -Y0",
        worst,
        1e-3,
        worst < 1e-3,
        "max relative |Y3 + Y0| over [20, 35] fm".into(),
    ))
}

fn no_stages() -> CheckError {
    CheckError::Chain(ChainError::InvalidInput("chain has no transformations (free data)".into()))
}

fn ac7(ctx: &CheckContext) -> Result<CheckRecord, CheckError> {
    let v3 = &ctx.chain.stages[3].potential;
    let weighted: Vec<f64> = [30.0, 35.0, 40.0]
        .iter()
        .map(|&x| {
            let i = ctx.grid.nearest(x);
            let x = ctx.grid.points()[i];
            x * x * v3.values[i].max_abs()
        })
        .collect();
    let decreasing = weighted.windows(2).all(|w| w[1] < w[0]);
    let tail = super::PowerTail::fit(v3, 0.5, 10.0)?.inverse_square();
    let limit = tail.max_abs();
    let mut failed = Vec::new();
    for (name, pot) in [("V0", &ctx.chain.stages[0].potential), ("V3", v3)] {
        for theta in [-0.5, 0.5] {
            let rep = check_integrability(pot, theta)?;
            if !rep.passes() {
                let worst = rep.entries.iter().map(|e| e.tail_exponent).fold(f64::NEG_INFINITY, f64::max);
                failed.push(format!("{name} at theta={theta} (tail exponent {worst:.2})"));
            }
        }
    }
    Ok(record(
        "AC-7",
        "decay and integrability",
        limit,
        1e-2,
        decreasing && limit < 1e-2 && failed.is_empty(),
        format!(
            "x^2 |V3| at 30/35/40 fm = {:.4}/{:.4}/{:.4}; fitted lim x^2 V3 = [[{:.3}, {:.3}], [{:.3}, {:.3}]]; integrability failures: {}",
            weighted[0],
            weighted[1],
            weighted[2],
            tail.m[0][0],
            tail.m[0][1],
            tail.m[1][0],
            tail.m[1][1],
            if failed.is_empty() { "none".to_string() } else { failed.join(", ") }
        ),
    ))
}

fn ac8() -> Result<CheckRecord, CheckError> {
    let grid = Arc::new(RadialGrid::uniform(1e-3, 20.0, 1000)?);
    let kernel = kernel_from_residues(&[], None)?;
    let chain = Chain::from_kernel(kernel, None, &grid, &ChainOptions::default())?;
    let k_zero = chain.marchenko.nodes.iter().all(|n| n.k_diag(&chain.kernel) == CMat2::zero());
    let v0_zero = extract_potential(&chain.marchenko)?.values.iter().all(|v| *v == RMat2::zero());
    let worst = chain.stages.iter().flat_map(|s| s.potential.values.iter().map(|v| v.max_abs())).fold(0.0, f64::max);
    let identity = chain.stages.iter().all(|s| s.transform.as_ref().is_none_or(|t| t.is_identity()));
    Ok(record(
        "AC-8",
        "free-case identities",
        worst,
        0.0,
        k_zero && v0_zero && identity && worst == 0.0 && chain.sigma.is_none(),
        format!("K = 0: {k_zero}, V0 = 0: {v0_zero}, identity stages: {identity}"),
    ))
}

fn ac9(ctx: &CheckContext) -> Result<CheckRecord, CheckError> {
    let mut parts = Vec::new();
    let mut worst: f64 = 0.0;
    let ks = [0.1, 0.3, 0.7, 1.5, 4.0];
    let mut s_defect: f64 = 0.0;
    for k in ks {
        let s = eval_s(&ctx.params, Complex64::from(k))?;
        s_defect = s_defect.max((s * s.adjoint() - CMat2::identity()).max_abs()).max(s.asymmetry());
    }
    parts.push(format!("eval_s unitarity/symmetry {s_defect:.1e}"));
    worst = worst.max(s_defect);

    let v0 = &ctx.chain.stages[0].potential;
    let mut f_defect: f64 = 0.0;
    for k in [0.5, 1.0] {
        let (u, sym) = forward_smatrix(v0, k, ctx.grid.r_max())?.unitarity_defect();
        f_defect = f_defect.max(u).max(sym);
    }
    parts.push(format!("forward unitarity/symmetry {f_defect:.1e}"));
    worst = worst.max(f_defect);

    let asym = ctx.chain.stages.iter().map(|s| s.potential.max_asymmetry()).fold(0.0, f64::max);
    parts.push(format!("table asymmetry {asym:.1e}"));
    worst = worst.max(asym);

    // W{G̃, G} vanishes at the origin, so it must stay at zero relative to
    // the size of G G′.
    let opts = OdeOptions::default();
    let prob = OdeProblem { potential: v0, k_squared: 0.49, start: Start::Regular, gram: false };
    let g = integrate_matrix_ode(&prob, &ctx.grid, Direction::Forward, &opts)?;
    let mut w_defect: f64 = 0.0;
    for i in (0..g.len()).step_by(7) {
        let w = wronskian(g.values[i], g.derivs[i], g.values[i], g.derivs[i]);
        w_defect = w_defect.max(w.max_abs() / (g.values[i].max_abs() * g.derivs[i].max_abs()).max(1e-300));
    }
    let w_tol = 100.0 * opts.rtol;
    parts.push(format!("Wronskian drift {w_defect:.1e} (tol {w_tol:.0e})"));

    let mut j_defect: f64 = 0.0;
    for k in [Complex64::new(0.3, 0.0), Complex64::new(1.1, 0.0), Complex64::new(0.0, 0.2)] {
        let closed = jost_closed_form(&ctx.chain.marchenko, k)?.value;
        j_defect = j_defect.max((closed - jost_by_quadrature(&ctx.chain.marchenko, k)).max_abs());
    }
    parts.push(format!("Jost closed form vs quadrature {j_defect:.1e}"));
    worst = worst.max(j_defect);

    Ok(record("AC-9", "structural invariants", worst, 1e-8, worst < 1e-8 && w_defect < w_tol, parts.join("; ")))
}
