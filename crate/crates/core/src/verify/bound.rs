use std::sync::Arc;

use super::forward::regular_at;
use super::riccati::decaying;
use super::VerifyError;
use crate::marchenko::PotentialTable;
use crate::numerics::{
    cumulative_scalar, propagate, scan_roots, OdeOptions, QuadFrom, RMat2, RadialGrid, RadialPotential, WaveTable,
};

#[derive(Clone, Debug)]
pub struct BoundOptions {
    /// The inner and outer solutions meet at this fraction of R_max.
    pub match_fraction: f64,
    pub samples: usize,
    pub tol: f64,
    pub ode: OdeOptions,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self { match_fraction: 0.25, samples: 200, tol: 1e-14, ode: OdeOptions::default() }
    }
}

#[derive(Clone, Debug)]
pub struct BoundState {
    /// −κ², fm⁻².
    pub energy: f64,
    pub kappa: f64,
    /// Unit-norm wavefunction on the grid.
    pub wave: WaveTable,
    /// Φᵢ(x)/(e^{−κx}-normalised decaying Riccati function), read off midway
    /// between the match radius and R_max.
    pub asymptotic: [f64; 2],
    pub match_radius: f64,
}

struct Matcher<'a> {
    pot: &'a dyn RadialPotential,
    grid: &'a RadialGrid,
    im: usize,
    opts: &'a BoundOptions,
}

fn unit_columns(g: &RMat2, dg: &RMat2, kappa: f64) -> (RMat2, RMat2) {
    let n = |j: usize| {
        (g.m[0][j].powi(2) + g.m[1][j].powi(2) + (dg.m[0][j].powi(2) + dg.m[1][j].powi(2)) / (kappa * kappa)).sqrt()
    };
    let s = RMat2::diag(1.0 / n(0), 1.0 / n(1));
    (*g * s, *dg * s)
}

impl Matcher<'_> {
    fn r_match(&self) -> f64 {
        self.grid.points()[self.im]
    }

    fn outer_start(&self, kappa: f64) -> (RMat2, RMat2) {
        let r = self.grid.r_max();
        let [l0, l1] = self.pot.labels();
        let (a, da) = decaying(l0, kappa * r);
        let (b, db) = decaying(l1, kappa * r);
        (RMat2::diag(a, b), RMat2::diag(kappa * da, kappa * db))
    }

    fn inner(&self, kappa: f64, nodes: &[f64]) -> Result<Vec<(RMat2, RMat2)>, VerifyError> {
        regular_at(self.pot, -kappa * kappa, self.grid.x_min(), nodes, &self.opts.ode)
    }

    fn outer(&self, kappa: f64, nodes: &[f64]) -> Result<Vec<(RMat2, RMat2)>, VerifyError> {
        let run = propagate(self.pot, -kappa * kappa, nodes, self.outer_start(kappa), None, &self.opts.ode)?;
        Ok(run.values.into_iter().zip(run.derivs).collect())
    }

    /// W{Õ, G} at the match radius with unit-normalised columns.
    fn wronskian(&self, kappa: f64) -> Result<RMat2, VerifyError> {
        let rm = self.r_match();
        let (g, dg) = self.inner(kappa, &[rm])?[0];
        let (o, d_o) = *self.outer(kappa, &[self.grid.r_max(), rm])?.last().expect("two nodes");
        let (g, dg) = unit_columns(&g, &dg, kappa);
        let (o, d_o) = unit_columns(&o, &d_o, kappa);
        Ok((o.transpose() * dg - d_o.transpose() * g).scale(1.0 / kappa))
    }

    fn determinant(&self, kappa: f64) -> f64 {
        self.wronskian(kappa).map(|w| w.det()).unwrap_or(f64::NAN)
    }
}

fn matcher<'a>(
    pot: &'a dyn RadialPotential,
    grid: &'a RadialGrid,
    opts: &'a BoundOptions,
) -> Result<Matcher<'a>, VerifyError> {
    let im = grid.nearest(opts.match_fraction * grid.r_max());
    if im == 0 || im + 1 >= grid.len() {
        return Err(VerifyError::InvalidInput(format!("match fraction {} unusable", opts.match_fraction)));
    }
    Ok(Matcher { pot, grid, im, opts })
}

fn check_search(search: (f64, f64)) -> Result<(), VerifyError> {
    if !(search.0 > 0.0 && search.1 > search.0 && search.1.is_finite()) {
        return Err(VerifyError::InvalidInput(format!("search interval {search:?} for −E")));
    }
    Ok(())
}

/// Every κ where the matching determinant changes sign, as energies −κ².
pub fn find_bound_states(
    pot: &dyn RadialPotential,
    grid: &RadialGrid,
    search: (f64, f64),
    opts: &BoundOptions,
) -> Result<Vec<f64>, VerifyError> {
    check_search(search)?;
    let m = matcher(pot, grid, opts)?;
    let roots = scan_roots(|k| m.determinant(k), search.0.sqrt(), search.1.sqrt(), opts.samples, opts.tol)?;
    Ok(roots.into_iter().map(|k| -k * k).collect())
}

/// The deepest bound state of `pot` with −E in `search`, and its wavefunction.
pub fn find_bound_state_in(
    pot: &dyn RadialPotential,
    grid: &Arc<RadialGrid>,
    search: (f64, f64),
    opts: &BoundOptions,
) -> Result<BoundState, VerifyError> {
    let energies = find_bound_states(pot, grid, search, opts)?;
    let energy = energies
        .iter()
        .copied()
        .fold(None, |a: Option<f64>, e| Some(a.map_or(e, |a| a.min(e))))
        .ok_or(VerifyError::NoBoundState { lo: search.0, hi: search.1 })?;
    let kappa = (-energy).sqrt();
    let m = matcher(pot, grid, opts)?;
    let pts = grid.points();
    let im = m.im;

    let inner = m.inner(kappa, &pts[1..=im])?;
    let outer_nodes: Vec<f64> = pts[im..].iter().rev().copied().collect();
    let mut outer = m.outer(kappa, &outer_nodes)?;
    outer.reverse();

    let (g_m, dg_m) = inner[im - 1];
    let (o_m, do_m) = outer[0];
    let w = o_m.transpose() * dg_m - do_m.transpose() * g_m;
    // Null vector of the (numerically singular) Wronskian.
    let row = if w.m[0][0].hypot(w.m[0][1]) >= w.m[1][0].hypot(w.m[1][1]) { 0 } else { 1 };
    let v = [-w.m[row][1], w.m[row][0]];
    let psi_m = g_m.mul_vec(v);
    let a = o_m
        .inverse()
        .ok_or_else(|| VerifyError::InvalidInput("outer solution singular at the match radius".into()))?
        .mul_vec(psi_m);

    let (g0, dg0, _) = crate::numerics::regular_start(pot, energy, pts[0])?;
    let mut values = Vec::with_capacity(pts.len());
    let mut derivs = Vec::with_capacity(pts.len());
    values.push(g0.mul_vec(v));
    derivs.push(dg0.mul_vec(v));
    for (g, dg) in &inner[..im - 1] {
        values.push(g.mul_vec(v));
        derivs.push(dg.mul_vec(v));
    }
    for (o, d_o) in &outer {
        values.push(o.mul_vec(a));
        derivs.push(d_o.mul_vec(a));
    }
    let dens: Vec<f64> = values.iter().map(|p| p[0] * p[0] + p[1] * p[1]).collect();
    let norm = cumulative_scalar(&dens, grid, QuadFrom::Origin)?.last().copied().unwrap_or(0.0).sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(VerifyError::InvalidInput("bound-state wavefunction has zero norm".into()));
    }
    let probe = grid.nearest(0.5 * (pts[im] + grid.r_max()));
    let [l0, l1] = pot.labels();
    let xp = pts[probe];
    let mut asymptotic =
        [values[probe][0] / norm / decaying(l0, kappa * xp).0, values[probe][1] / norm / decaying(l1, kappa * xp).0];
    let lead = if asymptotic[0].abs() >= asymptotic[1].abs() { 0 } else { 1 };
    let sign = asymptotic[lead].signum() / norm;
    asymptotic.iter_mut().for_each(|c| *c *= sign * norm);
    let wave = WaveTable { grid: Arc::clone(grid), values, derivs }.scaled(sign);
    Ok(BoundState { energy, kappa, wave, asymptotic, match_radius: pts[im] })
}

/// [`find_bound_state_in`] on the table's own grid with default settings.
pub fn find_bound_state(pot: &PotentialTable, search: (f64, f64)) -> Result<BoundState, VerifyError> {
    find_bound_state_in(pot, &pot.grid, search, &BoundOptions::default())
}
