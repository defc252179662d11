use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use super::*;
use crate::marchenko::{jost_closed_form, PotentialTable};
use crate::numerics::{cumulative_scalar, QuadFrom, RMat2, RadialPotential, WaveTable};
use crate::smatrix::modification_matrix;
use crate::verify::{forward_smatrix, match_smatrix};

fn golden() -> &'static Chain {
    static CHAIN: OnceLock<Chain> = OnceLock::new();
    CHAIN.get_or_init(|| {
        let grid = Arc::new(RadialGrid::origin_refined(1e-5, 80.0, 0.02, 20).unwrap());
        Chain::build(&BargmannParams::golden(), &grid, &ChainOptions::default()).unwrap()
    })
}

fn jost(c: &Chain, k: Complex64) -> RMat2 {
    jost_closed_form(&c.marchenko, k).unwrap().value.re()
}

fn at(w: &WaveTable, x: f64) -> ([f64; 2], [f64; 2]) {
    let i = w.grid.nearest(x);
    (w.values[i], w.derivs[i])
}

#[test]
fn free_regular_solution_is_sine() {
    let grid = Arc::new(RadialGrid::uniform(1e-3, 20.0, 2000).unwrap());
    let g = regular_solution(&PotentialTable::zero(Arc::clone(&grid), [0, 0]), 1.0).unwrap();
    for (x, v) in grid.points().iter().zip(&g.values) {
        assert!((*v - RMat2::diag(x.sin(), x.sin())).max_abs() < 1e-8);
    }
}

#[test]
fn growing_regular_solution_carries_jost_matrix() {
    let c = golden();
    let s = c.sigma.as_ref().unwrap().sigma;
    let g = regular_solution(&c.stages[0].potential, -s * s).unwrap();
    let f = jost(c, Complex64::new(0.0, s)).transpose();
    for x in [35.0, 45.0, 55.0] {
        let i = g.grid.nearest(x);
        let x = g.grid.points()[i];
        let ratio = g.values[i].scale(2.0 * s * (-s * x).exp());
        assert!((ratio - f).max_abs() < 1e-4 * f.max_abs(), "x={x} {ratio:?} {f:?}");
    }
}

#[test]
fn zero_energy_regular_solution_slope() {
    let c = golden();
    let g = regular_solution(&c.stages[0].potential, 0.0).unwrap();
    let f0 = jost(c, Complex64::from(0.0)).transpose();
    let slope = *g.derivs.last().unwrap();
    assert!((slope - f0).max_abs() < 1e-3 * f0.max_abs(), "{slope:?} {f0:?}");
}

#[test]
fn stage1_identities() {
    let c = golden();
    let (v0, v1) = (&c.stages[0].potential, &c.stages[1].potential);
    let x0 = v0.grid.x_min();
    // V₁ − V₀ vanishes linearly at the origin.
    assert!((v1.values[0] - v0.values[0]).max_abs() < 5.0 * x0);
    let t = c.stages[1].transform.as_ref().unwrap();
    assert!(t.j.iter().all(|&j| j >= 1.0));
    assert!(t.j.windows(2).all(|w| w[1] >= w[0]));
    assert!((0..v0.grid.len()).all(|i| t.j_matrix(i).m[0][0] == 1.0 && t.j_matrix(i).m[0][1] == 0.0));
    // Y₁ → 2σ s⁻¹ e^{−σx} 𝓒𝓟: decay rate and amplitude.
    let sig = c.sigma.as_ref().unwrap();
    let (a, _) = at(&t.transformed, 40.0);
    let (b, _) = at(&t.transformed, 60.0);
    let (xa, xb) = (v0.grid.points()[v0.grid.nearest(40.0)], v0.grid.points()[v0.grid.nearest(60.0)]);
    let rate = (b[1] / a[1]).ln() / (xb - xa);
    assert!((rate + sig.sigma).abs() < 1e-4 * sig.sigma, "{rate}");
    let m = &sig.modification;
    let amp = 2.0 * sig.sigma / m.s * m.c.m[1][1].re * (-sig.sigma * xb).exp();
    assert!((b[1] - amp).abs() < 1e-4 * amp.abs());
}

#[test]
fn stage1_without_working_functions_is_identity() {
    let c = golden();
    let s0 = Arc::new(StageState::initial(c.stages[0].potential.clone(), None, None));
    let s1 = stage1(&s0).unwrap();
    assert_eq!(s1.potential.values, s0.potential.values);
}

#[test]
fn stage2_origin_structure() {
    let c = golden();
    let (v1, v2) = (&c.stages[1].potential, &c.stages[2].potential);
    assert_eq!(v2.labels, [0, 2]);
    assert!(v2.values[0].m[0][1].abs() < 1e-4, "{:?}", v2.values[0]);
    let nu = v1.values[0].m[0][1] / 6.0;
    let err: Vec<f64> = [0.01, 0.003]
        .iter()
        .map(|&x| {
            let i = v1.grid.nearest(x);
            let x = v1.grid.points()[i];
            let d = (v2.values[i].m[0][0] - v1.values[i].m[0][0]) / (x * x);
            (d + 18.0 * nu * nu).abs() / (18.0 * nu * nu)
        })
        .collect();
    assert!(err[1] < err[0] && err[1] < 0.02, "{err:?}");
    let bounded =
        v2.grid.points().iter().zip(&v2.values).take_while(|(x, _)| **x <= 1.0).all(|(_, v)| v.m[1][1].abs() < 10.0);
    assert!(bounded);
    // Stage-1 potential at the origin sets the regular limit of V₂₂₂.
    let near: Vec<f64> = v2.values.iter().take(5).map(|v| v.m[1][1]).collect();
    assert!(near.windows(2).all(|w| (w[1] - w[0]).abs() < 1e-3), "{near:?}");
}

#[test]
fn stage2_asymptotics() {
    let c = golden();
    let t = c.stages[2].transform.as_ref().unwrap();
    let grid = t.working.grid.clone();
    // 2[Z₂Z̃₁]′ → 6/x²·𝓟. Z₁ ≈ F(x − a) with a ≈ 11 fm, so x²ΔV approaches
    // its limit only like a/x; extrapolate c₀ + c₁/x + c₂/x² from three radii.
    let xs: Vec<f64> = [40.0, 55.0, 70.0].iter().map(|&x| grid.points()[grid.nearest(x)]).collect();
    let f: Vec<RMat2> = xs.iter().map(|&x| t.delta_v(grid.nearest(x)).scale(x * x)).collect();
    let limit = lagrange_at_zero(&xs.iter().map(|x| 1.0 / x).collect::<Vec<_>>(), &f);
    assert!((limit - RMat2::diag(0.0, 6.0)).max_abs() < 0.2, "{limit:?}");
    let far = (f[2] - RMat2::diag(0.0, 6.0)).max_abs();
    assert!(far < (f[0] - RMat2::diag(0.0, 6.0)).max_abs());
    // Z₁ slope → [F(0)T(0)]₂₂.
    let sig = c.sigma.as_ref().unwrap();
    let t0 = modification_matrix(&sig.modification, Complex64::from(0.0)).unwrap();
    let fhat = (jost_closed_form(&c.marchenko, Complex64::from(0.0)).unwrap().value * t0).m[1][1].re;
    let slope = t.working.derivs.last().unwrap()[1];
    assert!((slope - fhat).abs() < 1e-3 * fhat.abs(), "{slope} vs {fhat}");
}

#[test]
fn bound_state_tracking() {
    let c = golden();
    let phis = track_bound_state(&c.stages[3]);
    assert_eq!(phis.len(), 4);
    let n = c.norms.unwrap();
    for x in [25.0, 30.0, 35.0] {
        let (v, _) = at(&phis[0], x);
        assert!((v[1] / v[0] - n.a2 / n.a1).abs() < 1e-4);
    }
    // Φ₂,₂/x³ has a finite nonzero limit.
    let ratio: Vec<f64> =
        phis[2].values.iter().zip(phis[2].grid.points()).take(20).map(|(v, x)| v[1] / x.powi(3)).collect();
    assert!(ratio.iter().all(|r| r.is_finite() && r.abs() > 1e-8));
    assert!((ratio[0] - ratio[19]).abs() < 1e-2 * ratio[0].abs(), "{ratio:?}");
    let o = OriginSeries::from_chain(&c.stages[3], 0.0).unwrap();
    assert_eq!(o.lambda, c.stages[0].potential.values[0].m[0][0] / 6.0);
    assert!(o.v2_prime.is_finite() && o.mu_prime.is_finite() && o.u2_prime.is_finite());
}

fn lagrange_at_zero(u: &[f64], f: &[RMat2]) -> RMat2 {
    let mut out = RMat2::zero();
    for i in 0..u.len() {
        let w: f64 = (0..u.len()).filter(|&j| j != i).map(|j| u[j] / (u[j] - u[i])).product();
        out += f[i].scale(w);
    }
    out
}

/// max over [a, b] of |Φ′(x_{i+w}) − Φ′(x_i) − ∫(V + C/x² − E)Φ| relative to
/// the integral's scale.
fn ode_residual(pot: &PotentialTable, e: f64, w: &WaveTable, a: f64, b: f64) -> f64 {
    let pts = w.grid.points();
    let c = RMat2::centrifugal(pot.labels);
    let mut worst: f64 = 0.0;
    for ch in 0..2 {
        let integrand: Vec<f64> = pts
            .iter()
            .zip(&w.values)
            .map(|(&x, v)| {
                let q = pot.coupling(x) + c.scale(1.0 / (x * x)) - RMat2::diag(e, e);
                q.mul_vec(*v)[ch]
            })
            .collect();
        let cum = cumulative_scalar(&integrand, &w.grid, QuadFrom::Origin).unwrap();
        let (ia, ib) = (w.grid.nearest(a), w.grid.nearest(b));
        let scale = w.derivs[ia..=ib].iter().map(|d| d[ch].abs()).fold(0.0, f64::max).max(1e-300);
        for i in ia..ib {
            let r = (w.derivs[i + 1][ch] - w.derivs[i][ch]) - (cum[i + 1] - cum[i]);
            worst = worst.max(r.abs() / scale);
        }
    }
    worst
}

#[test]
fn transformed_bound_states_solve_their_equations() {
    let c = golden();
    let e = -c.kappa.unwrap().powi(2);
    for s in 1..=3 {
        let st = &c.stages[s];
        let r = ode_residual(&st.potential, e, st.bound.as_ref().unwrap(), 1.0, 20.0);
        assert!(r < 1e-6, "stage {s}: {r}");
    }
}

#[test]
fn regular_solution_transform_consistency() {
    let c = golden();
    let k = 0.7;
    let psi1 = transform_scattering_solution(&c.stages[1], k).unwrap();
    let g1 = regular_solution(&c.stages[1].potential, k * k).unwrap();
    for i in (0..g1.len()).step_by(97) {
        let scale = g1.values[i].max_abs().max(g1.grid.points()[i]);
        assert!((psi1.values[i] - g1.values[i]).max_abs() < 1e-6 * scale, "x={}", g1.grid.points()[i]);
    }
}

#[test]
fn wronskian_against_other_energy_varies() {
    let c = golden();
    let t = c.stages[1].transform.as_ref().unwrap();
    let psi = regular_solution(&c.stages[0].potential, 0.49).unwrap();
    let w = |i: usize| {
        let (y, dy) = (t.working.values[i], t.working.derivs[i]);
        let (p, dp) = (WaveTable::column(&psi, 0).values[i], WaveTable::column(&psi, 0).derivs[i]);
        y[0] * dp[0] + y[1] * dp[1] - dy[0] * p[0] - dy[1] * p[1]
    };
    let (a, b) = (w(psi.grid.nearest(1.0)), w(psi.grid.nearest(5.0)));
    assert!((a - b).abs() > 1e-3 * a.abs().max(b.abs()));
}

#[test]
fn stage3_scattering_solution_matches_forward_solve() {
    let c = golden();
    let k = 0.7;
    let v3 = &c.stages[3].potential;
    let psi3 = transform_scattering_solution(&c.stages[3], k).unwrap();
    let r = v3.grid.r_max();
    let n = psi3.len() - 1;
    let s_psi = match_smatrix(v3.labels, k, r, &psi3.values[n], &psi3.derivs[n]).unwrap();
    let s_fwd = forward_smatrix(v3, k, r).unwrap().s;
    assert!((s_psi - s_fwd).max_abs() < 1e-3, "{s_psi:?} {s_fwd:?}");
    // V₂ and V₃ Wronskian plumbing: Ψ₃ solves the stage-3 equation.
    let col = WaveTable::column(&psi3, 0);
    assert!(ode_residual(v3, k * k, &col, 1.0, 20.0) < 1e-6);
}

#[test]
fn third_stage_factor_is_negative_definite_slot() {
    let c = golden();
    let t = c.stages[3].transform.as_ref().unwrap();
    assert!(t.j.iter().all(|&j| j < 0.0));
    assert!(t.j.windows(2).all(|w| w[1] >= w[0]));
    for s in &c.stages {
        assert!(s.potential.max_asymmetry() < 1e-10);
    }
}

#[test]
fn free_data_give_identity_chain() {
    let grid = Arc::new(RadialGrid::uniform(1e-3, 20.0, 1000).unwrap());
    let chain = Chain::from_kernel(SeparableKernel::empty(), None, &grid, &ChainOptions::default()).unwrap();
    assert!(chain.sigma.is_none());
    for s in &chain.stages {
        assert!(s.potential.values.iter().all(|v| *v == RMat2::zero()));
        assert_eq!(s.potential.labels, [0, 0]);
        if let Some(t) = &s.transform {
            assert!(t.is_identity());
        }
    }
    let psi = transform_scattering_solution(&chain.stages[3], 1.0).unwrap();
    for (x, v) in grid.points().iter().zip(&psi.values) {
        assert!((*v - RMat2::diag(x.sin(), x.sin())).max_abs() < 1e-8);
    }
}
