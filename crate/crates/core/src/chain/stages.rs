use std::sync::Arc;

use num_complex::Complex64;

use super::transform::Rank1Transform;
use super::ChainError;
use crate::marchenko::{jost_solution_at, MarchenkoSolution, PotentialTable};
use crate::numerics::{
    composite_gauss, cumulative_scalar, integrate_matrix_ode, integrate_system, regular_series, Direction, OdeOptions,
    OdeProblem, QuadFrom, RMat2, RadialGrid, RadialPotential, SolutionTable, Start, WaveTable,
};
use crate::smatrix::BoundStateNorms;
use crate::verify::decaying;

/// Below this radius the (2,2) entry of V₂ is formed from the
/// cancellation-free auxiliary quantities of the zero-energy column.
pub const CANCELLATION_RADIUS: f64 = 0.05;

/// Default origin switch: transformed stage-2 solutions are continued by
/// regular solutions below max(10·x_min, this).
pub const MIN_ORIGIN_SWITCH: f64 = 0.01;

/// One link of the chain. Stage 0 holds V₀ and Φ₀; stage n > 0 also holds
/// the step that produced it from stage n − 1.
#[derive(Clone, Debug)]
pub struct StageState {
    pub stage: usize,
    pub potential: PotentialTable,
    pub transform: Option<Rank1Transform>,
    /// Φ at this stage, if the data carry a bound state.
    pub bound: Option<WaveTable>,
    pub bound_energy: Option<f64>,
    pub sigma: Option<f64>,
    /// The next stage's working column transported to this stage
    /// (Y₁ after stage 1, Y₂ after stage 2).
    pub carry: Option<WaveTable>,
    pub previous: Option<Arc<StageState>>,
}

impl StageState {
    pub fn initial(potential: PotentialTable, bound: Option<(WaveTable, f64)>, sigma: Option<f64>) -> Self {
        let (bound, bound_energy) = match bound {
            Some((w, e)) => (Some(w), Some(e)),
            None => (None, None),
        };
        Self { stage: 0, potential, transform: None, bound, bound_energy, sigma, carry: None, previous: None }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.potential.grid
    }

    /// Stages 0..=self.stage, oldest first.
    pub fn lineage(&self) -> Vec<&StageState> {
        let mut out = vec![self];
        let mut cur = self;
        while let Some(p) = cur.previous.as_deref() {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    fn is_free(&self) -> bool {
        self.sigma.is_none()
    }
}

/// Regular matrix solution at energy k² with the Gram integral ∫₀ˣ G̃G.
pub fn regular_solution(pot: &PotentialTable, k_squared: f64) -> Result<SolutionTable, ChainError> {
    let problem = OdeProblem { potential: pot, k_squared, start: Start::Regular, gram: true };
    Ok(integrate_matrix_ode(&problem, &pot.grid, Direction::Forward, &OdeOptions::default())?)
}

/// Φ₀ = f(x, iκ)·A from the closed-form Jost solution; exactly
/// e^{−κx}(A₁, A₂) at large x up to the faster kernel exponentials.
pub fn bound_state_closed_form(
    sol: &MarchenkoSolution,
    kappa: f64,
    norms: &BoundStateNorms,
) -> Result<WaveTable, ChainError> {
    let k = Complex64::new(0.0, kappa);
    let a = [Complex64::from(norms.a1), Complex64::from(norms.a2)];
    let mut values = Vec::with_capacity(sol.nodes.len());
    let mut derivs = Vec::with_capacity(sol.nodes.len());
    for node in &sol.nodes {
        let (f, df) = jost_solution_at(&sol.kernel, node, k);
        let v = f.mul_vec(a);
        let d = df.mul_vec(a);
        let im = v[0].im.abs().max(v[1].im.abs());
        if im > 1e-8 * (v[0].norm() + v[1].norm()).max(1e-300) && im > 1e-14 {
            return Err(ChainError::Normalization(format!("Φ₀ not real at x = {} (imag {im:e})", node.x)));
        }
        values.push([v[0].re, v[1].re]);
        derivs.push([d[0].re, d[1].re]);
    }
    let wave = WaveTable { grid: Arc::clone(&sol.grid), values, derivs };
    // The asymptotic readout must reproduce (A₁, A₂).
    let grid = &sol.grid;
    let i = grid.nearest(0.5 * grid.r_max().min(60.0));
    let x = grid.points()[i];
    let e = (kappa * x).exp();
    let dev = ((wave.values[i][0] * e - norms.a1).abs()).max((wave.values[i][1] * e - norms.a2).abs());
    if dev > 1e-3 * norms.a1.hypot(norms.a2) {
        return Err(ChainError::Normalization(format!("Φ₀ e^(κx) at x = {x} misses (A₁, A₂) by {dev:e}")));
    }
    Ok(wave)
}

/// The first transformation with Y₀ = G₀(x, iσ)𝓟, J₁ = I + ∫₀ˣ Ỹ₀Y₀.
pub fn stage1(state0: &Arc<StageState>) -> Result<Arc<StageState>, ChainError> {
    let grid = Arc::clone(state0.grid());
    let Some(sigma) = state0.sigma else {
        return Ok(identity_stage(state0, 1));
    };
    let v0 = &state0.potential;
    let g0 = regular_solution(v0, -sigma * sigma)?;
    let y = WaveTable::column(&g0, 1);
    let gram = g0.gram.as_ref().expect("gram requested");
    let j: Vec<f64> = gram.iter().map(|g| 1.0 + g.m[1][1]).collect();
    let t = Rank1Transform::new(1, y, j, 1.0, 1.0, -sigma * sigma, None)?;
    let values: Vec<RMat2> = (0..grid.len()).map(|i| v0.values[i] + t.delta_v(i)).collect();
    let v1 = PotentialTable::new(Arc::clone(&grid), values, v0.labels)?;
    let bound = transform_bound(&t, state0, &v1)?;
    let carry = Some(t.transformed.clone());
    Ok(Arc::new(StageState {
        stage: 1,
        potential: v1,
        transform: Some(t),
        bound,
        bound_energy: state0.bound_energy,
        sigma: Some(sigma),
        carry,
        previous: Some(Arc::clone(state0)),
    }))
}

fn identity_stage(prev: &Arc<StageState>, stage: usize) -> Arc<StageState> {
    Arc::new(StageState {
        stage,
        potential: prev.potential.clone(),
        transform: Some(Rank1Transform::identity(stage, prev.grid())),
        bound: prev.bound.clone(),
        bound_energy: prev.bound_energy,
        sigma: None,
        carry: None,
        previous: Some(Arc::clone(prev)),
    })
}

fn transform_bound(
    t: &Rank1Transform,
    prev: &StageState,
    after: &PotentialTable,
) -> Result<Option<WaveTable>, ChainError> {
    match (&prev.bound, prev.bound_energy) {
        (Some(phi), Some(e)) => Ok(Some(t.apply(std::slice::from_ref(phi), e, after)?.remove(0))),
        _ => Ok(None),
    }
}

/// Zero-energy second column z of the regular solution of V₁ with
/// I = ∫₀ˣ|z|², and the auxiliary m = x z₂′ − z₂, N = x z₂² − 3I that carry
/// the small-x cancellations exactly: m′ = x(V₁z)₂, N′ = 2z₂m − 3z₁².
#[derive(Clone, Debug)]
pub struct ZeroEnergyColumn {
    pub z: WaveTable,
    pub gram: Vec<f64>,
    pub m: Vec<f64>,
    pub n: Vec<f64>,
}

pub fn zero_energy_column(pot: &PotentialTable) -> Result<ZeroEnergyColumn, ChainError> {
    if pot.labels != [0, 0] {
        return Err(ChainError::InvalidInput(format!("stage-1 potential has labels {:?}", pot.labels)));
    }
    let pts = pot.grid.points();
    let x0 = pts[0];
    let v0 = pot.coupling(x0);
    let (g, dg, gram) = regular_series([0, 0], v0, 0.0, x0);
    let a = v0.m[1][1] / 6.0;
    let c = v0.m[0][1] / 6.0;
    let y0 = [
        g.m[0][1],
        g.m[1][1],
        dg.m[0][1],
        dg.m[1][1],
        gram.m[1][1],
        2.0 * a * x0.powi(3),
        0.8 * a * x0.powi(5) + (a * a - 3.0 * c * c / 7.0) * x0.powi(7),
    ];
    let rhs = |x: f64, y: &[f64], dy: &mut [f64]| {
        let v = pot.coupling(x);
        if !v.is_finite() {
            return Err(crate::numerics::NumericsError::NonFinite { x });
        }
        let vz = v.mul_vec([y[0], y[1]]);
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = vz[0];
        dy[3] = vz[1];
        dy[4] = y[0] * y[0] + y[1] * y[1];
        dy[5] = x * vz[1];
        dy[6] = 2.0 * y[1] * y[5] - 3.0 * y[0] * y[0];
        Ok(())
    };
    let groups = [0..2, 2..4, 4..5, 5..6, 6..7];
    let flat = integrate_system(rhs, pts, &y0, &groups, &OdeOptions::default())?;
    let mut z = WaveTable { grid: Arc::clone(&pot.grid), values: vec![], derivs: vec![] };
    let (mut gi, mut mi, mut ni) = (vec![], vec![], vec![]);
    for s in flat.chunks_exact(7) {
        z.values.push([s[0], s[1]]);
        z.derivs.push([s[2], s[3]]);
        gi.push(s[4]);
        mi.push(s[5]);
        ni.push(s[6]);
    }
    Ok(ZeroEnergyColumn { z, gram: gi, m: mi, n: ni })
}

/// Default origin switch for a grid.
pub fn origin_switch(grid: &RadialGrid) -> f64 {
    (10.0 * grid.x_min()).max(MIN_ORIGIN_SWITCH)
}

/// The second transformation: Z₁ = G₁(x, 0)𝓟, J₂ = I − 𝓟 − ∫₀ˣ Z̃₁Z₁, and
/// V₂ = V₁ + 2[Z₂Z̃₁]′ − 6𝓟/x² with centrifugal labels (0, 2).
pub fn stage2(state1: &Arc<StageState>) -> Result<Arc<StageState>, ChainError> {
    let grid = Arc::clone(state1.grid());
    let Some(sigma) = state1.sigma else {
        return Ok(identity_stage(state1, 2));
    };
    let v1 = &state1.potential;
    let col = zero_energy_column(v1)?;
    let j: Vec<f64> = col.gram.iter().map(|g| -g).collect();
    let t = Rank1Transform::new(2, col.z.clone(), j, 0.0, -1.0, 0.0, Some(origin_switch(&grid)))?;
    let pts = grid.points();
    let mut values = Vec::with_capacity(pts.len());
    for (i, &x) in pts.iter().enumerate() {
        let mut v = v1.values[i] + t.delta_v(i);
        if x < CANCELLATION_RADIUS {
            let [z1, z2] = col.z.values[i];
            let (ii, m, n) = (col.gram[i], col.m[i], col.n[i]);
            let dn = 2.0 * z2 * m - 3.0 * z1 * z1;
            let xi = x * ii;
            let u = dn / xi - n * (ii + x * (z1 * z1 + z2 * z2)) / (xi * xi);
            v.m[1][1] = v1.values[i].m[1][1] - 2.0 * u;
        } else {
            v.m[1][1] -= 6.0 / (x * x);
        }
        values.push(v);
    }
    let v2 = PotentialTable::new(Arc::clone(&grid), values, [0, 2])?;
    let bound = transform_bound(&t, state1, &v2)?;
    let carry = match &state1.carry {
        Some(y1) => Some(t.apply(std::slice::from_ref(y1), -sigma * sigma, &v2)?.remove(0)),
        None => None,
    };
    Ok(Arc::new(StageState {
        stage: 2,
        potential: v2,
        transform: Some(t),
        bound,
        bound_energy: state1.bound_energy,
        sigma: Some(sigma),
        carry,
        previous: Some(Arc::clone(state1)),
    }))
}

/// ∫_R^∞ |y|² for y continued beyond R by the decaying Riccati functions
/// of the channel labels at momentum iσ.
pub fn decaying_tail(y: [f64; 2], labels: [u32; 2], sigma: f64, r: f64) -> f64 {
    let span = 80.0 / sigma;
    let nodes = composite_gauss(r, r + span, 200, 8);
    let mut total = 0.0;
    for ch in 0..2 {
        let d_r = decaying(labels[ch], sigma * r).0;
        if d_r == 0.0 {
            continue;
        }
        let c = y[ch] / d_r;
        total += c * c * nodes.iter().map(|(t, w)| w * decaying(labels[ch], sigma * t).0.powi(2)).sum::<f64>();
    }
    total
}

/// [`decaying_tail`] at R_max with its leading error removed. The Riccati
/// continuation ignores the x⁻³ remainder of V₂, which leaves a relative
/// error c/x³ in the tail integral. ΔV₃ is a near-cancellation of terms
/// ~σ², so c is fixed by demanding that the in-grid integral from a few
/// interior radii agrees with the corrected tails there.
fn calibrated_tail(y: &WaveTable, cum: &[f64], labels: [u32; 2], sigma: f64) -> f64 {
    let grid = &y.grid;
    let n = grid.len() - 1;
    let r = grid.r_max();
    let end = decaying_tail(y.values[n], labels, sigma, r);
    let (mut num, mut den) = (0.0, 0.0);
    for back in [10.0, 15.0, 20.0] {
        let i = grid.nearest(r - back);
        let x = grid.points()[i];
        if i == n || x < 0.5 * r {
            continue;
        }
        let est = decaying_tail(y.values[i], labels, sigma, x);
        // cum + end(1 − c/r³) = est(1 − c/x³), linear in c; weight by est.
        let a = est / x.powi(3) - end / r.powi(3);
        let b = est - cum[i] - end;
        num += a * b;
        den += a * a;
    }
    let c = if den > 0.0 { num / den } else { 0.0 };
    end * (1.0 - c / r.powi(3))
}

/// The third transformation with the stage-2 image Y₂ of Y₁ and
/// J₃ = I − 𝓟 − ∫ₓ^∞ Ỹ₂Y₂.
pub fn stage3(state2: &Arc<StageState>) -> Result<Arc<StageState>, ChainError> {
    let grid = Arc::clone(state2.grid());
    let Some(sigma) = state2.sigma else {
        return Ok(identity_stage(state2, 3));
    };
    let y2 = state2.carry.clone().ok_or_else(|| ChainError::InvalidInput("stage 3 needs Y₂ from stage 2".into()))?;
    let v2 = &state2.potential;
    let dens: Vec<f64> = y2.values.iter().map(|v| v[0] * v[0] + v[1] * v[1]).collect();
    let cum = cumulative_scalar(&dens, &grid, QuadFrom::Infinity)?;
    let tail = calibrated_tail(&y2, &cum, v2.labels, sigma);
    let p: Vec<f64> = cum.into_iter().map(|c| c + tail).collect();
    let j: Vec<f64> = p.iter().map(|p| -p).collect();
    let t = Rank1Transform::new(3, y2, j, 0.0, 1.0, -sigma * sigma, None)?;
    let values: Vec<RMat2> = (0..grid.len()).map(|i| v2.values[i] + t.delta_v(i)).collect();
    let v3 = PotentialTable::new(Arc::clone(&grid), values, v2.labels)?;
    let bound = transform_bound(&t, state2, &v3)?;
    Ok(Arc::new(StageState {
        stage: 3,
        potential: v3,
        transform: Some(t),
        bound,
        bound_energy: state2.bound_energy,
        sigma: Some(sigma),
        carry: None,
        previous: Some(Arc::clone(state2)),
    }))
}

/// Φ₀, …, Φ at the given stage.
pub fn track_bound_state(state: &StageState) -> Vec<WaveTable> {
    state.lineage().iter().filter_map(|s| s.bound.clone()).collect()
}

/// The regular solution of V₀ at real k carried through every stage up to
/// `state`. At stage ≥ 1 it solves that stage's equation.
pub fn transform_scattering_solution(state: &StageState, k: f64) -> Result<SolutionTable, ChainError> {
    if !(k > 0.0) {
        return Err(ChainError::InvalidInput(format!("k = {k} must be positive")));
    }
    let stages = state.lineage();
    let mut psi = regular_solution(&stages[0].potential, k * k)?;
    psi.gram = None;
    for s in &stages[1..] {
        if s.is_free() {
            continue;
        }
        if let Some(t) = &s.transform {
            psi = t.apply_matrix(&psi, k * k, &s.potential)?;
        }
    }
    Ok(psi)
}
