use num_complex::Complex64;

use super::riccati::{hankel_plus, L_MAX};
use super::VerifyError;
use crate::marchenko::PotentialTable;
use crate::numerics::{propagate, regular_start, CMat2, ComplexLu, OdeOptions, RMat2, RadialPotential};

/// Column solutions whose 4-vectors (G; G′/k) are closer to dependent than
/// this are rejected.
pub const MAX_COLUMN_CONDITION: f64 = 1e10;

#[derive(Clone, Debug)]
pub struct ForwardResult {
    pub k: f64,
    pub s: CMat2,
    pub delta1: f64,
    pub delta2: f64,
    pub epsilon: f64,
    /// ‖S − Oᵀ-rebuilt S‖ from the eigenphase decomposition.
    pub reconstruction_error: f64,
    /// max |V| at the match radius; the matching assumes it is negligible.
    pub residual_potential: f64,
}

impl ForwardResult {
    fn from_s(k: f64, s: CMat2, residual_potential: f64) -> Self {
        let (delta1, delta2, epsilon, reconstruction_error) = eigenphases(&s);
        Self { k, s, delta1, delta2, epsilon, reconstruction_error, residual_potential }
    }

    /// ‖S S† − I‖ and ‖S − Sᵀ‖.
    pub fn unitarity_defect(&self) -> (f64, f64) {
        ((self.s * self.s.adjoint() - CMat2::identity()).max_abs(), self.s.asymmetry())
    }
}

/// Blatt–Biedenharn form S = O diag(e^{2iδ₁}, e^{2iδ₂}) Oᵀ with O the
/// rotation by ε ∈ (−π/4, π/4]. Returns (δ₁, δ₂, ε, reconstruction error).
pub fn eigenphases(s: &CMat2) -> (f64, f64, f64, f64) {
    let diff = s.m[0][0] - s.m[1][1];
    let off = s.m[0][1] + s.m[1][0];
    // tan 2ε = 2S₁₂/(S₁₁ − S₂₂), real for a symmetric unitary S.
    let num = (off * diff.conj()).re;
    let den = diff.norm_sqr();
    let mut two_eps = if num.abs() < 1e-300 && den < 1e-300 { 0.0 } else { num.atan2(den) };
    if two_eps > std::f64::consts::FRAC_PI_2 {
        two_eps -= std::f64::consts::PI;
    }
    let eps = 0.5 * two_eps;
    let (c2, s2) = (two_eps.cos(), two_eps.sin());
    let tr = s.m[0][0] + s.m[1][1];
    let split = diff * c2 + off * s2;
    let e1 = 0.5 * (tr + split);
    let e2 = 0.5 * (tr - split);
    let (c, sn) = (eps.cos(), eps.sin());
    let o = CMat2::new(c.into(), (-sn).into(), sn.into(), c.into());
    let u1 = e1 / e1.norm();
    let u2 = e2 / e2.norm();
    let rebuilt = o * CMat2::diag(u1, u2) * o.transpose();
    (0.5 * u1.arg(), 0.5 * u2.arg(), eps, (rebuilt - *s).max_abs())
}

/// H±(kR) = diag(h±_ℓ) and their x-derivatives.
fn hankel_diag(labels: [u32; 2], k: f64, r: f64) -> ((CMat2, CMat2), (CMat2, CMat2)) {
    let rho = Complex64::from(k * r);
    let (p0, dp0) = hankel_plus(labels[0], rho);
    let (p1, dp1) = hankel_plus(labels[1], rho);
    let plus = (CMat2::diag(p0, p1), CMat2::diag(dp0 * k, dp1 * k));
    let minus = (plus.0.conj(), plus.1.conj());
    (plus, minus)
}

fn column_condition(g: &RMat2, dg: &RMat2, k: f64) -> f64 {
    // Gram matrix of the two 4-vectors (G; G′/k), normalised per column.
    let d = dg.scale(1.0 / k);
    let gram = g.transpose() * *g + d.transpose() * d;
    let (a, b, c) = (gram.m[0][0], gram.m[0][1], gram.m[1][1]);
    let nrm = (a * c).sqrt();
    if !(nrm > 0.0) {
        return f64::INFINITY;
    }
    let r = b / nrm;
    let lo = 1.0 - r.abs();
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        ((1.0 + r.abs()) / lo).sqrt()
    }
}

/// S from a regular matrix solution at R. With Ψ = G C = H⁻ − H⁺S and
/// W{G, G} = 0, S = W{G, H⁺}⁻¹ W{G, H⁻}.
pub fn match_smatrix(labels: [u32; 2], k: f64, r: f64, g: &RMat2, dg: &RMat2) -> Result<CMat2, VerifyError> {
    if labels.iter().any(|&l| l > L_MAX) {
        return Err(VerifyError::InvalidInput(format!("labels {labels:?} exceed ℓ = {L_MAX}")));
    }
    let cond = column_condition(g, dg, k);
    if !(cond <= MAX_COLUMN_CONDITION) {
        return Err(VerifyError::DependentColumns { radius: r, condition: cond });
    }
    // Column scaling leaves S unchanged and keeps x^{ℓ+1}-sized columns
    // from being swamped.
    let scale = RMat2::diag(
        1.0 / (g.m[0][0].hypot(g.m[1][0]) + dg.m[0][0].hypot(dg.m[1][0]) / k),
        1.0 / (g.m[0][1].hypot(g.m[1][1]) + dg.m[0][1].hypot(dg.m[1][1]) / k),
    );
    let gc = (*g * scale).to_complex();
    let dgc = (*dg * scale).to_complex();
    let ((hp, dhp), (hm, dhm)) = hankel_diag(labels, k, r);
    let w_plus = gc.transpose() * dhp - dgc.transpose() * hp;
    let w_minus = gc.transpose() * dhm - dgc.transpose() * hm;
    let inv = w_plus.inverse().ok_or(VerifyError::DependentColumns { radius: r, condition: f64::INFINITY })?;
    Ok(inv * w_minus)
}

/// Integrates the regular solution of `pot` from `x_start` through `nodes`
/// (ascending, all beyond `x_start`) and returns (G, G′) there.
pub fn regular_at(
    pot: &dyn RadialPotential,
    k_squared: f64,
    x_start: f64,
    nodes: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<(RMat2, RMat2)>, VerifyError> {
    let (g0, dg0, _) = regular_start(pot, k_squared, x_start)?;
    let mut all = Vec::with_capacity(nodes.len() + 1);
    all.push(x_start);
    all.extend_from_slice(nodes);
    let run = propagate(pot, k_squared, &all, (g0, dg0), None, opts)?;
    Ok(run.values.into_iter().zip(run.derivs).skip(1).collect())
}

/// Forward S-matrix of a tabulated potential, matched at `match_radius`.
pub fn forward_smatrix(pot: &PotentialTable, k: f64, match_radius: f64) -> Result<ForwardResult, VerifyError> {
    if !(match_radius <= pot.grid.r_max() && match_radius > pot.grid.x_min()) {
        return Err(VerifyError::InvalidInput(format!(
            "match radius {match_radius} outside the table [{}, {}]",
            pot.grid.x_min(),
            pot.grid.r_max()
        )));
    }
    let mut nodes: Vec<f64> = pot.grid.points()[1..].iter().copied().take_while(|&x| x < match_radius).collect();
    nodes.push(match_radius);
    forward_on_nodes(pot, k, pot.grid.x_min(), &nodes, &OdeOptions::default())
}

/// Forward S-matrix of any potential, integrating from `x_start` through
/// the ascending `nodes` and matching at the last one.
pub fn forward_on_nodes(
    pot: &dyn RadialPotential,
    k: f64,
    x_start: f64,
    nodes: &[f64],
    opts: &OdeOptions,
) -> Result<ForwardResult, VerifyError> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(VerifyError::InvalidInput(format!("k = {k} must be positive")));
    }
    let r = *nodes.last().ok_or_else(|| VerifyError::InvalidInput("no nodes".into()))?;
    let sols = regular_at(pot, k * k, x_start, nodes, opts)?;
    let (g, dg) = sols.last().expect("nonempty");
    let s = match_smatrix(pot.labels(), k, r, g, dg)?;
    Ok(ForwardResult::from_s(k, s, pot.coupling(r).max_abs()))
}

/// Settings for continuing a slowly decaying tail beyond the table.
#[derive(Clone, Debug)]
pub struct TailOptions {
    /// Fit window is [lo_fraction·R_max, R_max − margin].
    pub lo_fraction: f64,
    pub margin: f64,
    /// First extrapolated match radius; the second is twice this.
    pub far_radius: f64,
    pub ode: OdeOptions,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self { lo_fraction: 0.5, margin: 10.0, far_radius: 2.0e4, ode: OdeOptions::default() }
    }
}

/// Σ_{p=2..5} c_p x^{−p} per entry, fitted to the outer part of a table.
#[derive(Clone, Debug)]
pub struct PowerTail {
    pub join: f64,
    /// Coefficients for entries (1,1), (1,2), (2,2), powers 2..=5, in
    /// units of the fit window's lower end.
    pub coeffs: [[f64; 4]; 3],
    pub x_ref: f64,
}

impl PowerTail {
    pub fn fit(pot: &PotentialTable, lo_fraction: f64, margin: f64) -> Result<Self, VerifyError> {
        let r = pot.grid.r_max();
        let lo = lo_fraction * r;
        let hi = r - margin;
        let xs: Vec<(usize, f64)> =
            pot.grid.points().iter().copied().enumerate().filter(|(_, x)| *x >= lo && *x <= hi).collect();
        if xs.len() < 8 {
            return Err(VerifyError::InvalidInput(format!("tail fit window [{lo}, {hi}] has {} nodes", xs.len())));
        }
        let basis = |x: f64| -> [f64; 4] { std::array::from_fn(|j| (lo / x).powi(j as i32 + 2)) };
        let mut normal = [[0.0; 4]; 4];
        for &(_, x) in &xs {
            let b = basis(x);
            for i in 0..4 {
                for j in 0..4 {
                    normal[i][j] += b[i] * b[j];
                }
            }
        }
        let flat: Vec<Complex64> = normal.iter().flatten().map(|&v| Complex64::from(v)).collect();
        let lu = ComplexLu::new(4, flat)?;
        let mut coeffs = [[0.0; 4]; 3];
        for (e, (rr, cc)) in crate::marchenko::ENTRIES.iter().enumerate() {
            let mut rhs = [Complex64::from(0.0); 4];
            for &(i, x) in &xs {
                let b = basis(x);
                let v = pot.values[i].m[*rr][*cc];
                for j in 0..4 {
                    rhs[j] += b[j] * v;
                }
            }
            lu.solve_in_place(&mut rhs);
            coeffs[e] = rhs.map(|c| c.re);
        }
        Ok(Self { join: hi, coeffs, x_ref: lo })
    }

    pub fn eval(&self, x: f64) -> RMat2 {
        let t = self.x_ref / x;
        let v: [f64; 3] = std::array::from_fn(|e| (0..4).map(|j| self.coeffs[e][j] * t.powi(j as i32 + 2)).sum());
        RMat2::sym(v[0], v[1], v[2])
    }

    /// x² V(x) as x → ∞.
    pub fn inverse_square(&self) -> RMat2 {
        let s = self.x_ref * self.x_ref;
        RMat2::sym(self.coeffs[0][0] * s, self.coeffs[1][0] * s, self.coeffs[2][0] * s)
    }
}

struct Continued<'a> {
    table: &'a PotentialTable,
    tail: &'a PowerTail,
}

impl RadialPotential for Continued<'_> {
    fn coupling(&self, x: f64) -> RMat2 {
        if x <= self.tail.join {
            self.table.value_at(x)
        } else {
            self.tail.eval(x)
        }
    }
    fn labels(&self) -> [u32; 2] {
        self.table.labels
    }
}

/// Forward S-matrix for a table whose potential has not died out by R_max:
/// the outer region is replaced by a fitted inverse-power tail, matched at
/// R_far and 2R_far, and the remaining 1/R truncation error removed by
/// Richardson extrapolation. Also returns the unextrapolated spread.
pub fn forward_smatrix_continued(
    pot: &PotentialTable,
    k: f64,
    opts: &TailOptions,
) -> Result<(ForwardResult, f64), VerifyError> {
    let tail = PowerTail::fit(pot, opts.lo_fraction, opts.margin)?;
    let cont = Continued { table: pot, tail: &tail };
    let mut nodes: Vec<f64> = pot.grid.points()[1..].iter().copied().take_while(|&x| x < tail.join).collect();
    nodes.push(tail.join);
    let (r1, r2) = (opts.far_radius, 2.0 * opts.far_radius);
    nodes.push(r1);
    nodes.push(r2);
    if !(k > 0.0) {
        return Err(VerifyError::InvalidInput(format!("k = {k} must be positive")));
    }
    let sols = regular_at(&cont, k * k, pot.grid.x_min(), &nodes, &opts.ode)?;
    let n = sols.len();
    let (g1, dg1) = &sols[n - 2];
    let (g2, dg2) = &sols[n - 1];
    let s1 = match_smatrix(pot.labels, k, r1, g1, dg1)?;
    let s2 = match_smatrix(pot.labels, k, r2, g2, dg2)?;
    let s = s2.scale(Complex64::from(2.0)) - s1;
    let spread = (s2 - s1).max_abs();
    Ok((ForwardResult::from_s(k, s, cont.coupling(r2).max_abs()), spread))
}

/// Helper for tests and checks: largest entrywise |A − B|.
pub fn max_deviation(a: &CMat2, b: &CMat2) -> f64 {
    (*a - *b).max_abs()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::marchenko::{build_kernel, extract_potential, solve_marchenko};
    use crate::numerics::RadialGrid;
    use crate::smatrix::{bound_state_norms, eval_s, BargmannParams};
    use proptest::prelude::*;

    fn golden_v0(r_max: f64) -> PotentialTable {
        let p = BargmannParams::golden();
        let kernel = build_kernel(&p, &bound_state_norms(&p).unwrap()).unwrap();
        let grid = Arc::new(RadialGrid::origin_refined(1e-4, r_max, 0.02, 20).unwrap());
        extract_potential(&solve_marchenko(&kernel, &grid).unwrap()).unwrap()
    }

    #[test]
    fn free_is_identity() {
        let grid = Arc::new(RadialGrid::uniform(1e-3, 30.0, 1000).unwrap());
        for labels in [[0, 0], [0, 2], [1, 3]] {
            let t = PotentialTable::zero(Arc::clone(&grid), labels);
            for k in [0.1, 0.8, 2.5] {
                let r = forward_smatrix(&t, k, 30.0).unwrap();
                assert!((r.s - CMat2::identity()).max_abs() < 1e-8, "{labels:?} k={k} {:?}", r.s);
                assert!(r.delta1.abs() < 1e-8 && r.delta2.abs() < 1e-8 && r.epsilon.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn eigenphase_roundtrip() {
        for (d1, d2, e) in [(0.3, -0.7, 0.1), (1.2, 0.4, -0.6), (0.5, 0.5, 0.0), (-1.0, 0.2, 0.78)] {
            let o = CMat2::new(f64::cos(e).into(), (-f64::sin(e)).into(), f64::sin(e).into(), f64::cos(e).into());
            let s = o
                * CMat2::diag(Complex64::from_polar(1.0, 2.0 * d1), Complex64::from_polar(1.0, 2.0 * d2))
                * o.transpose();
            let (a, b, eps, err) = eigenphases(&s);
            assert!(err < 1e-12);
            let rebuilt = {
                let o = CMat2::new(eps.cos().into(), (-eps.sin()).into(), eps.sin().into(), eps.cos().into());
                o * CMat2::diag(Complex64::from_polar(1.0, 2.0 * a), Complex64::from_polar(1.0, 2.0 * b))
                    * o.transpose()
            };
            assert!((rebuilt - s).max_abs() < 1e-12);
            assert!(eps > -std::f64::consts::FRAC_PI_4 - 1e-12 && eps <= std::f64::consts::FRAC_PI_4 + 1e-12);
        }
    }

    #[test]
    fn golden_v0_reproduces_sbar() {
        let v0 = golden_v0(40.0);
        let p = BargmannParams::golden();
        for k in [0.3, 0.7, 1.5] {
            let r = forward_smatrix(&v0, k, 40.0).unwrap();
            // The rational S-matrix is itself the ℓ = 0 convention matrix S̄.
            let expect = eval_s(&p, Complex64::from(k)).unwrap();
            let dev = max_deviation(&r.s, &expect);
            assert!(dev < 1e-4, "k={k} dev={dev}");
            let (u, sym) = r.unitarity_defect();
            assert!(u < 1e-8 && sym < 1e-8);
            assert!(r.reconstruction_error < 1e-8);
        }
    }

    #[test]
    fn match_radius_independence() {
        let grid = Arc::new(RadialGrid::uniform(1e-3, 40.0, 4000).unwrap());
        let vals = grid
            .points()
            .iter()
            .map(|x| {
                let e = (-x).exp();
                RMat2::sym(-2.0 * e, -1.5 * e, -e)
            })
            .collect();
        let t = PotentialTable::new(grid, vals, [0, 2]).unwrap();
        for k in [0.2, 1.0] {
            let a = forward_smatrix(&t, k, 30.0).unwrap();
            let b = forward_smatrix(&t, k, 40.0).unwrap();
            assert!(max_deviation(&a.s, &b.s) < 1e-6, "k={k}");
        }
        // The golden V₀ decays only like e^{−2·0.26x}; it needs R ≥ 40 fm.
        let v0 = golden_v0(55.0);
        for k in [0.2, 1.0] {
            let a = forward_smatrix(&v0, k, 40.0).unwrap();
            let b = forward_smatrix(&v0, k, 55.0).unwrap();
            let d = max_deviation(&a.s, &b.s);
            assert!(d < 1e-6, "k={k} dev={d}");
        }
    }

    #[test]
    fn threshold_coupling_vanishes() {
        let grid = Arc::new(RadialGrid::uniform(1e-3, 30.0, 3000).unwrap());
        let vals = grid
            .points()
            .iter()
            .map(|x| {
                let e = (-x).exp();
                RMat2::sym(-2.0 * e, -1.5 * e, -e)
            })
            .collect();
        let t = PotentialTable::new(grid, vals, [0, 2]).unwrap();
        let s12: Vec<f64> =
            [0.2, 0.1, 0.05].iter().map(|&k| forward_smatrix(&t, k, 30.0).unwrap().s.m[0][1].norm()).collect();
        assert!(s12[0] > s12[1] && s12[1] > s12[2], "{s12:?}");
    }

    #[test]
    fn power_tail_continuation_converges() {
        // A pure 1/x² coupled tail: the continued S must agree with a direct
        // solve on a much longer table.
        let f = |x: f64| {
            let d = 1.0 / (1.0 + x * x);
            RMat2::sym(0.8 * d, -0.5 * d, 0.3 * d)
        };
        struct Analytic<F>(F);
        impl<F: Fn(f64) -> RMat2 + Sync> RadialPotential for Analytic<F> {
            fn coupling(&self, x: f64) -> RMat2 {
                (self.0)(x)
            }
            fn labels(&self) -> [u32; 2] {
                [0, 2]
            }
        }
        let grid = Arc::new(RadialGrid::uniform(1e-3, 160.0, 8000).unwrap());
        let vals = grid.points().iter().map(|&x| f(x)).collect();
        let t = PotentialTable::new(grid, vals, [0, 2]).unwrap();
        let k = 0.5;
        let (cont, spread) = forward_smatrix_continued(&t, k, &TailOptions::default()).unwrap();
        let exact = forward_on_nodes(&Analytic(f), k, 1e-3, &[2.0e5, 4.0e5], &OdeOptions::default()).unwrap();
        let exact_far = forward_on_nodes(&Analytic(f), k, 1e-3, &[2.0e5], &OdeOptions::default()).unwrap();
        let rich = exact.s.scale(Complex64::from(2.0)) - exact_far.s;
        assert!(spread < 1e-3);
        assert!(max_deviation(&cont.s, &rich) < 1e-5, "{}", max_deviation(&cont.s, &rich));
    }

    proptest! {
        #[test]
        fn eigenphases_rebuild_any_unitary_symmetric_s(
            d1 in -1.5f64..1.5, d2 in -1.5f64..1.5, e in -0.78f64..0.78,
        ) {
            let o = CMat2::new(e.cos().into(), (-e.sin()).into(), e.sin().into(), e.cos().into());
            let s = o * CMat2::diag(Complex64::from_polar(1.0, 2.0 * d1), Complex64::from_polar(1.0, 2.0 * d2)) * o.transpose();
            let (_, _, eps, err) = eigenphases(&s);
            prop_assert!(err < 1e-12);
            prop_assert!(eps.abs() <= std::f64::consts::FRAC_PI_4 + 1e-12);
        }

        #[test]
        fn forward_s_is_unitary_and_symmetric(k in 0.05f64..3.0, depth in 0.1f64..3.0, mix in -1.0f64..1.0) {
            let grid = Arc::new(RadialGrid::uniform(1e-3, 30.0, 600).unwrap());
            let vals = grid.points().iter().map(|x| {
                let e = (-x).exp();
                RMat2::sym(-depth * e, mix * e, 0.5 * depth * e)
            }).collect();
            let t = PotentialTable::new(grid, vals, [0, 2]).unwrap();
            let (u, sym) = forward_smatrix(&t, k, 30.0).unwrap().unitarity_defect();
            prop_assert!(u < 1e-8 && sym < 1e-8, "{u:e} {sym:e}");
        }
    }
}
