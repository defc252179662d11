//! Riccati–Hankel functions from their terminating series. Exact for the
//! low ℓ used here, and cheap to evaluate on either real or imaginary
//! argument.

use num_complex::Complex64;

/// Largest channel label supported by the asymptotic basis.
pub const L_MAX: u32 = 4;

fn series_coeff(l: u32, m: u32) -> f64 {
    // (ℓ+m)! / (m! (ℓ−m)!)
    let mut c = 1.0;
    for j in (l - m + 1)..=(l + m) {
        c *= j as f64;
    }
    for j in 1..=m {
        c /= j as f64;
    }
    c
}

/// h⁺_ℓ(ρ) and dh⁺_ℓ/dρ, normalised so that h⁺_ℓ → e^{i(ρ − ℓπ/2)}.
pub fn hankel_plus(l: u32, rho: Complex64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let mut sum = Complex64::from(0.0);
    let mut dsum = Complex64::from(0.0);
    let half_inv = i / (2.0 * rho);
    let mut p = Complex64::from(1.0);
    for m in 0..=l {
        let term = p * series_coeff(l, m);
        sum += term;
        dsum -= term * (m as f64) / rho;
        p *= half_inv;
    }
    let phase = (-i).powu(l) * (i * rho).exp();
    (phase * sum, phase * (i * sum + dsum))
}

/// h⁻_ℓ(ρ) = conj h⁺_ℓ(ρ) for real ρ.
pub fn hankel_minus(l: u32, rho: f64) -> (Complex64, Complex64) {
    let (h, dh) = hankel_plus(l, Complex64::from(rho));
    (h.conj(), dh.conj())
}

/// The solution of u″ = (ℓ(ℓ+1)/z² + 1)u decaying like e^{−z}, normalised
/// to e^{−z}(1 + O(1/z)), and its z-derivative.
pub fn decaying(l: u32, z: f64) -> (f64, f64) {
    let mut sum = 0.0;
    let mut dsum = 0.0;
    let mut p = 1.0;
    for m in 0..=l {
        let term = p * series_coeff(l, m);
        sum += term;
        dsum -= term * (1.0 + m as f64 / z);
        p /= 2.0 * z;
    }
    let e = (-z).exp();
    (e * sum, e * dsum)
}

/// Below this argument Im h⁺ loses ĵ to cancellation; use the power series.
const SERIES_BELOW: f64 = 4.0;

/// ĵ_ℓ(ρ) = ρ^{ℓ+1}/(2ℓ+1)!! Σₙ (−ρ²/2)ⁿ/(n!(2ℓ+3)(2ℓ+5)…(2ℓ+2n+1)) and its
/// derivative.
fn bessel_series(l: u32, rho: f64) -> (f64, f64) {
    let mut lead = 1.0;
    for j in 0..=l {
        lead /= (2 * j + 1) as f64;
    }
    let z = -0.5 * rho * rho;
    let mut term = 1.0;
    let mut sum = 0.0;
    let mut dsum = 0.0;
    for n in 0..60u32 {
        let p = (l + 1 + 2 * n) as f64;
        sum += term;
        dsum += term * p;
        term *= z / ((n + 1) as f64 * (2 * (l + n) + 3) as f64);
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    let base = lead * rho.powi(l as i32);
    (base * rho * sum, base * dsum)
}

/// Riccati pairs and derivatives (with respect to ρ) at one argument.
#[derive(Clone, Debug)]
pub struct AsymptoticBasis {
    pub rho: f64,
    /// h⁺_ℓ, dh⁺_ℓ for ℓ = 0..=L_MAX.
    pub plus: [(Complex64, Complex64); 5],
    pub minus: [(Complex64, Complex64); 5],
    /// Riccati–Bessel ĵ_ℓ = (h⁺ − h⁻)/2i and n̂_ℓ = (h⁺ + h⁻)/2.
    pub bessel: [(f64, f64); 5],
    pub neumann: [(f64, f64); 5],
}

impl AsymptoticBasis {
    pub fn new(rho: f64) -> Self {
        let plus: [(Complex64, Complex64); 5] = std::array::from_fn(|l| hankel_plus(l as u32, Complex64::from(rho)));
        let minus = plus.map(|(h, d)| (h.conj(), d.conj()));
        let bessel: [(f64, f64); 5] = std::array::from_fn(|l| {
            if rho < SERIES_BELOW {
                bessel_series(l as u32, rho)
            } else {
                (plus[l].0.im, plus[l].1.im)
            }
        });
        let neumann = plus.map(|(h, d)| (h.re, d.re));
        Self { rho, plus, minus, bessel, neumann }
    }

    /// Largest departure from W{h⁻, h⁺} = 2i and W{n̂, ĵ} = 1 over ℓ, scaled
    /// by the size of the functions involved.
    pub fn wronskian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for l in 0..5 {
            let (hm, dhm) = self.minus[l];
            let (hp, dhp) = self.plus[l];
            let w = hm * dhp - dhm * hp;
            let scale = hm.norm() * dhp.norm() + dhm.norm() * hp.norm();
            worst = worst.max((w - Complex64::new(0.0, 2.0)).norm() / scale.max(1.0));
            let (n, dn) = self.neumann[l];
            let (j, dj) = self.bessel[l];
            let w2 = n * dj - dn * j;
            let scale2 = (n * dj).abs() + (dn * j).abs();
            worst = worst.max((w2 - 1.0).abs() / scale2.max(1.0));
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_forms() {
        // ĵ₁ = sin ρ/ρ − cos ρ, ĵ₂ = (3/ρ² − 1) sin ρ − 3 cos ρ/ρ.
        for rho in [0.3, 1.7, 12.0] {
            let b = AsymptoticBasis::new(rho);
            let (s, c) = (f64::sin(rho), f64::cos(rho));
            assert!((b.bessel[0].0 - s).abs() < 1e-14);
            assert!((b.neumann[0].0 - c).abs() < 1e-14);
            assert!((b.bessel[1].0 - (s / rho - c)).abs() < 1e-12);
            let j2 = (3.0 / (rho * rho) - 1.0) * s - 3.0 * c / rho;
            assert!((b.bessel[2].0 - j2).abs() < 1e-12 * (1.0 + j2.abs()));
            // The series branch agrees with Im h⁺ where both are accurate.
            for l in 0..=L_MAX {
                let (s, ds) = bessel_series(l, 3.0);
                let (h, dh) = hankel_plus(l, Complex64::from(3.0));
                assert!((s - h.im).abs() < 1e-11 && (ds - dh.im).abs() < 1e-11, "l={l}");
            }
        }
    }

    #[test]
    fn wronskians() {
        for rho in [0.05, 0.4, 1.0, 7.5, 40.0, 300.0] {
            let d = AsymptoticBasis::new(rho).wronskian_defect();
            assert!(d < 1e-12, "rho={rho} defect={d}");
        }
    }

    #[test]
    fn derivative_matches_difference() {
        for l in 0..=L_MAX {
            let rho = 2.3;
            let h = 1e-5;
            let (_, d) = hankel_plus(l, Complex64::from(rho));
            let fd =
                (hankel_plus(l, Complex64::from(rho + h)).0 - hankel_plus(l, Complex64::from(rho - h)).0) / (2.0 * h);
            assert!((d - fd).norm() < 1e-8, "l={l}");
            let (_, dd) = decaying(l, rho);
            let fdd = (decaying(l, rho + h).0 - decaying(l, rho - h).0) / (2.0 * h);
            assert!((dd - fdd).abs() < 1e-8, "l={l}");
        }
    }

    #[test]
    fn decaying_solves_modified_equation() {
        for l in 0..=L_MAX {
            let z = 1.3;
            let h = 1e-4;
            let u = |z| decaying(l, z).0;
            let d2 = (u(z + h) - 2.0 * u(z) + u(z - h)) / (h * h);
            let rhs = ((l * (l + 1)) as f64 / (z * z) + 1.0) * u(z);
            assert!((d2 - rhs).abs() < 1e-6 * rhs.abs().max(1.0), "l={l}");
        }
    }

    proptest! {
        #[test]
        fn riccati_wronskians(rho in 0.05f64..300.0) {
            prop_assert!(AsymptoticBasis::new(rho).wronskian_defect() < 1e-12);
        }

        #[test]
        fn hankel_minus_is_conjugate(l in 0u32..=L_MAX, rho in 0.5f64..100.0) {
            let (p, dp) = hankel_plus(l, Complex64::from(rho));
            let (m, dm) = hankel_minus(l, rho);
            prop_assert!((p.conj() - m).norm() < 1e-12 * p.norm().max(1.0));
            prop_assert!((dp.conj() - dm).norm() < 1e-12 * dp.norm().max(1.0));
        }
    }
}
