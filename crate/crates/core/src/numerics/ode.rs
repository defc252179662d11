//! Adaptive Dormand–Prince 5(4) integration and the radial matrix ODE
//! Ψ″ = (V(x) + diag(ℓ(ℓ+1))/x² − k²) Ψ built on top of it.

use std::ops::Range;
use std::sync::Arc;

use super::{Mat2, NumericsError, RMat2, RadialGrid};

#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-300, max_steps: 50_000_000 }
    }
}

impl OdeOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        Self { rtol, ..Self::default() }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Integrates y′ = f(x, y) through `nodes` (monotone in either direction)
/// and returns the state at every node, flattened node-major.
///
/// Error control is relative per component group: every component in a
/// group is measured against the largest magnitude in that group, so a
/// small entry riding next to a large one (or crossing zero) does not
/// throttle the step. Components outside any group are measured against
/// themselves.
pub fn integrate_system<F>(
    mut rhs: F,
    nodes: &[f64],
    y0: &[f64],
    groups: &[Range<usize>],
    opts: &OdeOptions,
) -> Result<Vec<f64>, NumericsError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), NumericsError>,
{
    let n = y0.len();
    let mut group_of: Vec<Option<usize>> = vec![None; n];
    for (g, r) in groups.iter().enumerate() {
        for i in r.clone() {
            group_of[i] = Some(g);
        }
    }
    let mut out = Vec::with_capacity(n * nodes.len());
    out.extend_from_slice(y0);
    if nodes.len() < 2 {
        return Ok(out);
    }

    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut gscale = vec![0.0; groups.len()];
    let mut x = nodes[0];
    rhs(x, &y, &mut k[0])?;
    let mut h = (nodes[1] - nodes[0]) * 0.5;
    let mut steps = 0usize;

    for &target in &nodes[1..] {
        let dir = (target - x).signum();
        h = h.abs() * dir;
        while (target - x) * dir > 0.0 {
            let remaining = target - x;
            let last = h.abs() >= remaining.abs();
            let hs = if last { remaining } else { h };
            if hs.abs() <= 1e-14 * x.abs().max(1e-300) {
                if last {
                    // Nodes closer than rounding: the state does not move.
                    x = target;
                    break;
                }
                return Err(NumericsError::StepUnderflow { x });
            }
            steps += 1;
            if steps > opts.max_steps {
                return Err(NumericsError::TooManySteps { x });
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, a) in A[s][..s].iter().enumerate() {
                        acc += hs * a * k[j][i];
                    }
                    ytmp[i] = acc;
                }
                rhs(x + C[s] * hs, &ytmp, &mut k[s])?;
            }
            // Stage 7 is evaluated at the 5th-order solution itself (FSAL).
            ynew.copy_from_slice(&ytmp);

            for g in gscale.iter_mut() {
                *g = 0.0;
            }
            for i in 0..n {
                if let Some(g) = group_of[i] {
                    let m = y[i].abs().max(ynew[i].abs());
                    if m > gscale[g] {
                        gscale[g] = m;
                    }
                }
            }
            let mut err = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for (j, ej) in E.iter().enumerate() {
                    e += ej * k[j][i];
                }
                e *= hs;
                let mag = match group_of[i] {
                    Some(g) => gscale[g],
                    None => y[i].abs().max(ynew[i].abs()),
                };
                let sc = opts.atol + opts.rtol * mag;
                err += (e / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                h = hs * 0.2;
                continue;
            }
            if err <= 1.0 {
                x = if last { target } else { x + hs };
                y.copy_from_slice(&ynew);
                k.swap(0, 6);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // Do not let a node-clipped step shrink the running step size.
                h = if last { h.abs().max(hs.abs() * fac) * dir } else { hs * fac };
            } else {
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
        }
        out.extend_from_slice(&y);
    }
    Ok(out)
}

/// A channel-coupled potential with explicit centrifugal labels.
///
/// `coupling` returns the potential matrix without the ℓ(ℓ+1)/x² terms.
pub trait RadialPotential: Sync {
    fn coupling(&self, x: f64) -> RMat2;
    fn labels(&self) -> [u32; 2];
}

/// The identically vanishing potential with given labels.
#[derive(Clone, Copy, Debug)]
pub struct ZeroPotential(pub [u32; 2]);

impl RadialPotential for ZeroPotential {
    fn coupling(&self, _x: f64) -> RMat2 {
        RMat2::zero()
    }
    fn labels(&self) -> [u32; 2] {
        self.0
    }
}

impl<P: RadialPotential + ?Sized> RadialPotential for &P {
    fn coupling(&self, x: f64) -> RMat2 {
        (**self).coupling(x)
    }
    fn labels(&self) -> [u32; 2] {
        (**self).labels()
    }
}

/// Full effective matrix V + C/x² − k².
pub fn effective(pot: &dyn RadialPotential, k_squared: f64, x: f64) -> RMat2 {
    let c = RMat2::centrifugal(pot.labels());
    let mut q = pot.coupling(x) + c.scale(1.0 / (x * x));
    q.m[0][0] -= k_squared;
    q.m[1][1] -= k_squared;
    q
}

/// Two-term power series of the regular matrix solution at small x:
/// column j opens as x^{ℓⱼ+1} on the diagonal and x^{ℓⱼ+3} off it.
/// Returns (G, G′, ∫₀ˣ G̃G).
pub fn regular_series(labels: [u32; 2], v0: RMat2, k_squared: f64, x: f64) -> (RMat2, RMat2, RMat2) {
    let mut g = RMat2::zero();
    let mut dg = RMat2::zero();
    let mut gram = RMat2::zero();
    for j in 0..2 {
        let lj = labels[j] as f64;
        let p = lj + 1.0;
        let a = (v0.m[j][j] - k_squared) / (4.0 * lj + 6.0);
        g.m[j][j] = x.powf(p) + a * x.powf(p + 2.0);
        dg.m[j][j] = p * x.powf(p - 1.0) + a * (p + 2.0) * x.powf(p + 1.0);
        gram.m[j][j] = x.powf(2.0 * p + 1.0) / (2.0 * p + 1.0) + 2.0 * a * x.powf(2.0 * p + 3.0) / (2.0 * p + 3.0);
        let i = 1 - j;
        let li = labels[i] as f64;
        let den = (lj + 3.0) * (lj + 2.0) - li * (li + 1.0);
        if den != 0.0 {
            let c = v0.m[i][j] / den;
            g.m[i][j] = c * x.powf(p + 2.0);
            dg.m[i][j] = c * (p + 2.0) * x.powf(p + 1.0);
            gram.m[j][j] += c * c * x.powf(2.0 * p + 5.0) / (2.0 * p + 5.0);
        }
    }
    (g, dg, gram)
}

/// How the integration is started.
#[derive(Clone, Copy, Debug)]
pub enum Start {
    /// Regular at the origin via [`regular_series`] evaluated at the first node.
    Regular,
    /// Explicit value and derivative at the first node in the integration
    /// direction.
    Explicit { value: RMat2, derivative: RMat2 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

pub struct OdeProblem<'a> {
    pub potential: &'a dyn RadialPotential,
    pub k_squared: f64,
    pub start: Start,
    /// Also accumulate the Gram integral ∫ G̃G from the starting node.
    pub gram: bool,
}

/// Matrix solution and derivative sampled on a grid.
#[derive(Clone, Debug)]
pub struct SolutionTable {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<RMat2>,
    pub derivs: Vec<RMat2>,
    /// ∫ G̃G from the starting end, if requested.
    pub gram: Option<Vec<RMat2>>,
}

impl SolutionTable {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// W{Ãᵢ, Bᵢ} = ÃB′ − Ã′B at node i.
    pub fn wronskian_with(&self, other: &SolutionTable, i: usize) -> RMat2 {
        wronskian(self.values[i], self.derivs[i], other.values[i], other.derivs[i])
    }
}

/// Matrix Wronskian W{Ã, B} = ÃB′ − Ã′B.
pub fn wronskian(a: RMat2, da: RMat2, b: RMat2, db: RMat2) -> RMat2 {
    a.transpose() * db - da.transpose() * b
}

fn pack(g: &RMat2, dg: &RMat2, gram: Option<&RMat2>, out: &mut Vec<f64>) {
    out.extend(g.m.iter().flatten());
    out.extend(dg.m.iter().flatten());
    if let Some(q) = gram {
        out.extend(q.m.iter().flatten());
    }
}

fn unpack(s: &[f64], off: usize) -> RMat2 {
    Mat2::new(s[off], s[off + 1], s[off + 2], s[off + 3])
}

/// Integrates Ψ″ = (V + C/x² − k²)Ψ across the grid.
pub fn integrate_matrix_ode(
    problem: &OdeProblem<'_>,
    grid: &Arc<RadialGrid>,
    direction: Direction,
    opts: &OdeOptions,
) -> Result<SolutionTable, NumericsError> {
    let pts = grid.points();
    let nodes: Vec<f64> = match direction {
        Direction::Forward => pts.to_vec(),
        Direction::Backward => pts.iter().rev().copied().collect(),
    };
    let x0 = nodes[0];
    let (g0, dg0, gram0) = match problem.start {
        Start::Regular => {
            if direction == Direction::Backward {
                return Err(NumericsError::InvalidInput("a regular start requires forward integration".into()));
            }
            regular_start(problem.potential, problem.k_squared, x0)?
        }
        Start::Explicit { value, derivative } => (value, derivative, RMat2::zero()),
    };
    let mut run =
        propagate(problem.potential, problem.k_squared, &nodes, (g0, dg0), problem.gram.then_some(gram0), opts)?;
    if direction == Direction::Backward {
        run.values.reverse();
        run.derivs.reverse();
        if let Some(g) = run.gram.as_mut() {
            g.reverse();
        }
    }
    Ok(SolutionTable { grid: Arc::clone(grid), values: run.values, derivs: run.derivs, gram: run.gram })
}

/// [`regular_series`] at `x` using the potential sampled there.
pub fn regular_start(
    pot: &dyn RadialPotential,
    k_squared: f64,
    x: f64,
) -> Result<(RMat2, RMat2, RMat2), NumericsError> {
    let v0 = pot.coupling(x);
    if !v0.is_finite() {
        return Err(NumericsError::NonFinite { x });
    }
    Ok(regular_series(pot.labels(), v0, k_squared, x))
}

/// Output of [`propagate`], in the order of the supplied nodes.
#[derive(Clone, Debug)]
pub struct Propagation {
    pub values: Vec<RMat2>,
    pub derivs: Vec<RMat2>,
    pub gram: Option<Vec<RMat2>>,
}

/// Integrates the matrix equation through an arbitrary monotone node list,
/// starting from (G, G′) at the first node, optionally carrying ∫G̃G.
pub fn propagate(
    pot: &dyn RadialPotential,
    k_squared: f64,
    nodes: &[f64],
    start: (RMat2, RMat2),
    gram_start: Option<RMat2>,
    opts: &OdeOptions,
) -> Result<Propagation, NumericsError> {
    let gram = gram_start.is_some();
    let mut y0 = Vec::with_capacity(12);
    pack(&start.0, &start.1, gram_start.as_ref(), &mut y0);
    let n = y0.len();
    let rhs = |x: f64, y: &[f64], dy: &mut [f64]| -> Result<(), NumericsError> {
        let q = effective(pot, k_squared, x);
        if !q.is_finite() {
            return Err(NumericsError::NonFinite { x });
        }
        let g = unpack(y, 0);
        dy[..4].copy_from_slice(&y[4..8]);
        let d2 = q * g;
        dy[4..8].copy_from_slice(&[d2.m[0][0], d2.m[0][1], d2.m[1][0], d2.m[1][1]]);
        if gram {
            let w = g.transpose() * g;
            dy[8..12].copy_from_slice(&[w.m[0][0], w.m[0][1], w.m[1][0], w.m[1][1]]);
        }
        Ok(())
    };
    // Error groups are the columns of G and of G′ (plus the Gram entries).
    // Row-major packing splits columns, so integrate a permuted state
    // [G00, G10, G01, G11, G'00, G'10, G'01, G'11, Γ...].
    let perm: [usize; 8] = [0, 2, 1, 3, 4, 6, 5, 7];
    let permute = |y: &[f64], out: &mut [f64]| {
        for (k, &p) in perm.iter().enumerate() {
            out[k] = y[p];
        }
        out[8..n].copy_from_slice(&y[8..n]);
    };
    let unpermute = |y: &[f64], out: &mut [f64]| {
        for (k, &p) in perm.iter().enumerate() {
            out[p] = y[k];
        }
        out[8..n].copy_from_slice(&y[8..n]);
    };
    let mut groups = vec![0..2, 2..4, 4..6, 6..8];
    if gram {
        groups.push(8..9);
        groups.push(9..11);
        groups.push(11..12);
    }
    let mut yp0 = vec![0.0; n];
    permute(&y0, &mut yp0);
    let mut buf_in = vec![0.0; n];
    let mut buf_out = vec![0.0; n];
    let prhs = |x: f64, y: &[f64], dy: &mut [f64]| -> Result<(), NumericsError> {
        unpermute(y, &mut buf_in);
        rhs(x, &buf_in, &mut buf_out)?;
        permute(&buf_out, dy);
        Ok(())
    };
    let flat = integrate_system(prhs, nodes, &yp0, &groups, opts)?;

    let mut values = Vec::with_capacity(nodes.len());
    let mut derivs = Vec::with_capacity(nodes.len());
    let mut grams = Vec::with_capacity(if gram { nodes.len() } else { 0 });
    let mut s = vec![0.0; n];
    for chunk in flat.chunks_exact(n) {
        unpermute(chunk, &mut s);
        values.push(unpack(&s, 0));
        derivs.push(unpack(&s, 4));
        if gram {
            grams.push(unpack(&s, 8));
        }
    }
    Ok(Propagation { values, derivs, gram: gram.then_some(grams) })
}

/// A two-component solution (one column) and its derivative on a grid.
#[derive(Clone, Debug)]
pub struct WaveTable {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<[f64; 2]>,
    pub derivs: Vec<[f64; 2]>,
}

impl WaveTable {
    /// Column `j` of a matrix solution.
    pub fn column(table: &SolutionTable, j: usize) -> Self {
        Self {
            grid: Arc::clone(&table.grid),
            values: table.values.iter().map(|m| m.col(j)).collect(),
            derivs: table.derivs.iter().map(|m| m.col(j)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| [v[0] * s, v[1] * s]).collect(),
            derivs: self.derivs.iter().map(|v| [v[0] * s, v[1] * s]).collect(),
        }
    }
}
