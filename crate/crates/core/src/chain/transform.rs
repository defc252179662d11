//! The rank-one Darboux-type step shared by all three stages. A working
//! column y (the second column of Y = yᵀ-shaped Y𝓟) and the scalar (2,2)
//! slot j of the factor J = diag(j₁₁, j) define Ŷ = Y J⁻¹, whose second
//! column is ŷ = y/j, and
//!
//!   V_new = V − 2s [ŷ ỹ]′,      Ψ_new = Ψ + s ŷ W{ỹ, Ψ}/(k² − E),
//!
//! with s = sign(j′) and E the energy of y.

use super::ChainError;
use crate::numerics::{
    propagate, regular_start, OdeOptions, RMat2, RadialGrid, RadialPotential, SolutionTable, WaveTable,
};
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct Rank1Transform {
    pub stage: usize,
    /// y and y′ (Y₀, Z₁ or Y₂).
    pub working: WaveTable,
    /// ŷ and ŷ′ (Y₁, Z₂ or Y₃).
    pub transformed: WaveTable,
    pub j: Vec<f64>,
    pub j11: f64,
    pub sign: f64,
    pub energy: f64,
    /// Below this radius transformed solutions are replaced by the regular
    /// solution of the new potential with the same value at the switch.
    pub origin_switch: Option<f64>,
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl Rank1Transform {
    pub fn new(
        stage: usize,
        working: WaveTable,
        j: Vec<f64>,
        j11: f64,
        sign: f64,
        energy: f64,
        origin_switch: Option<f64>,
    ) -> Result<Self, ChainError> {
        let x = working.grid.points();
        let mut values = Vec::with_capacity(j.len());
        let mut derivs = Vec::with_capacity(j.len());
        for (i, (&jj, (y, dy))) in j.iter().zip(working.values.iter().zip(&working.derivs)).enumerate() {
            if !(jj.is_finite() && jj.abs() > 1e-300) {
                return Err(ChainError::SingularFactor { stage, x: x[i], value: jj });
            }
            let yy = dot(*y, *y);
            let c = sign * yy / (jj * jj);
            values.push([y[0] / jj, y[1] / jj]);
            derivs.push([dy[0] / jj - c * y[0], dy[1] / jj - c * y[1]]);
        }
        let transformed = WaveTable { grid: Arc::clone(&working.grid), values, derivs };
        Ok(Self { stage, working, transformed, j, j11, sign, energy, origin_switch })
    }

    /// The do-nothing step used when there are no working functions.
    pub fn identity(stage: usize, grid: &Arc<RadialGrid>) -> Self {
        let n = grid.len();
        let zero = WaveTable { grid: Arc::clone(grid), values: vec![[0.0; 2]; n], derivs: vec![[0.0; 2]; n] };
        Self {
            stage,
            working: zero.clone(),
            transformed: zero,
            j: vec![1.0; n],
            j11: 1.0,
            sign: 1.0,
            energy: 0.0,
            origin_switch: None,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.working.values.iter().all(|v| v[0] == 0.0 && v[1] == 0.0)
    }

    /// J at node i.
    pub fn j_matrix(&self, i: usize) -> RMat2 {
        RMat2::diag(self.j11, self.j[i])
    }

    /// −2s [ŷ ỹ]′ at node i, from stored first derivatives.
    pub fn delta_v(&self, i: usize) -> RMat2 {
        let y = self.working.values[i];
        let dy = self.working.derivs[i];
        let j = self.j[i];
        let yy = dot(y, y);
        let sym = |a: usize, b: usize| (dy[a] * y[b] + y[a] * dy[b]) / j - self.sign * y[a] * y[b] * yy / (j * j);
        RMat2::sym(sym(0, 0), sym(0, 1), sym(1, 1)).scale(-2.0 * self.sign)
    }

    /// Transforms solutions at energy `k2` of the old equation into solutions
    /// of the new one, whose potential is `after`.
    pub fn apply(
        &self,
        columns: &[WaveTable],
        k2: f64,
        after: &dyn RadialPotential,
    ) -> Result<Vec<WaveTable>, ChainError> {
        if self.is_identity() {
            return Ok(columns.to_vec());
        }
        let den = k2 - self.energy;
        if den.abs() < 1e-12 {
            return Err(ChainError::ExcludedEnergy { stage: self.stage, k2 });
        }
        let mut out: Vec<WaveTable> = columns
            .iter()
            .map(|psi| {
                let mut values = Vec::with_capacity(psi.len());
                let mut derivs = Vec::with_capacity(psi.len());
                for i in 0..psi.len() {
                    let (y, dy) = (self.working.values[i], self.working.derivs[i]);
                    let (h, dh) = (self.transformed.values[i], self.transformed.derivs[i]);
                    let (p, dp) = (psi.values[i], psi.derivs[i]);
                    let f = self.sign * (dot(y, dp) - dot(dy, p)) / den;
                    let g = self.sign * dot(y, p);
                    values.push([p[0] + h[0] * f, p[1] + h[1] * f]);
                    derivs.push([dp[0] + dh[0] * f - h[0] * g, dp[1] + dh[1] * f - h[1] * g]);
                }
                WaveTable { grid: Arc::clone(&psi.grid), values, derivs }
            })
            .collect();
        if let Some(xs) = self.origin_switch {
            continue_from_origin(&mut out, xs, k2, after)?;
        }
        Ok(out)
    }

    /// [`Self::apply`] on both columns of a matrix solution.
    pub fn apply_matrix(
        &self,
        sol: &SolutionTable,
        k2: f64,
        after: &dyn RadialPotential,
    ) -> Result<SolutionTable, ChainError> {
        let cols = [WaveTable::column(sol, 0), WaveTable::column(sol, 1)];
        let [a, b]: [WaveTable; 2] = self.apply(&cols, k2, after)?.try_into().expect("two columns");
        let join = |u: &[[f64; 2]], v: &[[f64; 2]]| -> Vec<RMat2> {
            u.iter().zip(v).map(|(p, q)| RMat2::from_cols(*p, *q)).collect()
        };
        Ok(SolutionTable {
            grid: Arc::clone(&sol.grid),
            values: join(&a.values, &b.values),
            derivs: join(&a.derivs, &b.derivs),
            gram: None,
        })
    }
}

/// Replaces each column below `xs` by G(x)G(x_s)⁻¹ψ(x_s), G the regular
/// solution of `pot` at `k2`. Used where the transform formula cancels
/// large terms against each other.
pub fn continue_from_origin(
    columns: &mut [WaveTable],
    xs: f64,
    k2: f64,
    pot: &dyn RadialPotential,
) -> Result<(), ChainError> {
    let Some(first) = columns.first() else { return Ok(()) };
    let pts = first.grid.points();
    let is = pts.partition_point(|&x| x < xs);
    if is == 0 || is >= pts.len() {
        return Ok(());
    }
    let (g0, dg0, _) = regular_start(pot, k2, pts[0])?;
    let run = propagate(pot, k2, &pts[..=is], (g0, dg0), None, &OdeOptions::default())?;
    let inv = run.values[is].inverse().ok_or(ChainError::SingularFactor {
        stage: 2,
        x: pts[is],
        value: run.values[is].det(),
    })?;
    for col in columns.iter_mut() {
        let c = inv.mul_vec(col.values[is]);
        for i in 0..is {
            col.values[i] = run.values[i].mul_vec(c);
            col.derivs[i] = run.derivs[i].mul_vec(c);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ZeroPotential;
    use proptest::prelude::*;

    fn grid() -> Arc<RadialGrid> {
        Arc::new(RadialGrid::uniform(1e-3, 10.0, 1000).unwrap())
    }

    #[test]
    fn identity_leaves_everything() {
        let g = grid();
        let t = Rank1Transform::identity(1, &g);
        assert!(t.is_identity());
        assert!((0..g.len()).all(|i| t.delta_v(i) == RMat2::zero()));
        let psi = WaveTable {
            grid: Arc::clone(&g),
            values: g.points().iter().map(|x| [x.sin(), 0.5 * x]).collect(),
            derivs: g.points().iter().map(|x| [x.cos(), 0.5]).collect(),
        };
        let out = t.apply(std::slice::from_ref(&psi), 1.0, &ZeroPotential([0, 0])).unwrap();
        assert_eq!(out[0].values, psi.values);
    }

    #[test]
    fn free_first_stage_is_a_solution() {
        // y = sinh(σx) in channel 2 of the free problem, J = 1 + ∫y².
        let g = grid();
        let s = 0.4;
        let x = g.points();
        let y = WaveTable {
            grid: Arc::clone(&g),
            values: x.iter().map(|x| [0.0, (s * x).sinh()]).collect(),
            derivs: x.iter().map(|x| [0.0, s * (s * x).cosh()]).collect(),
        };
        let j: Vec<f64> = x.iter().map(|x| 1.0 + ((2.0 * s * x).sinh() / (2.0 * s) - x) / 2.0).collect();
        let t = Rank1Transform::new(1, y, j, 1.0, 1.0, -s * s, None).unwrap();
        // ŷ solves y″ = (V₁ − E)y; check by a centred second difference.
        let h = x[1] - x[0];
        for i in [100, 400, 800] {
            let yh = |k: usize| t.transformed.values[k][1];
            let d2 = (yh(i + 1) - 2.0 * yh(i) + yh(i - 1)) / (h * h);
            let rhs = (t.delta_v(i).m[1][1] + s * s) * yh(i);
            assert!((d2 - rhs).abs() < 1e-4 * rhs.abs().max(1e-3), "i={i} {d2} {rhs}");
        }
    }

    proptest! {
        #[test]
        fn rank1_change_is_symmetric_and_j_structured(s in 0.05f64..1.0, a in -1.0f64..1.0) {
            // Two-component working column a·sinh, sinh of the free problem.
            let g = grid();
            let x = g.points();
            let y = WaveTable {
                grid: Arc::clone(&g),
                values: x.iter().map(|x| [a * (s * x).sinh(), (s * x).sinh()]).collect(),
                derivs: x.iter().map(|x| [a * s * (s * x).cosh(), s * (s * x).cosh()]).collect(),
            };
            let j: Vec<f64> = x
                .iter()
                .map(|x| 1.0 + (1.0 + a * a) * ((2.0 * s * x).sinh() / (2.0 * s) - x) / 2.0)
                .collect();
            let t = Rank1Transform::new(1, y, j, 1.0, 1.0, -s * s, None).unwrap();
            for i in (0..x.len()).step_by(50) {
                let dv = t.delta_v(i);
                prop_assert!(dv.asymmetry() <= 1e-12 * dv.max_abs().max(1.0));
                let jm = t.j_matrix(i);
                prop_assert!(jm.m[0][0] == 1.0 && jm.m[0][1] == 0.0 && jm.m[1][0] == 0.0 && jm.m[1][1] >= 1.0);
            }
        }
    }
}
