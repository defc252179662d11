use super::stages::StageState;
use crate::numerics::WaveTable;

/// Small-x coefficients. λ, μ, ν belong to the regular solution at k²;
/// (u₁x + u₂x³, v₁x + v₂x³) is Φ₀; Φ₂ opens as (u₁x + u₂′x³, v₂′x³) and
/// the second channel of Y₂ as μ′x³. The primed values are fits.
#[derive(Clone, Debug, PartialEq)]
pub struct OriginSeries {
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub u1: f64,
    pub u2: f64,
    pub v1: f64,
    pub v2: f64,
    pub u2_prime: f64,
    pub v2_prime: f64,
    pub mu_prime: f64,
}

/// Mean of f(x)/x^p over the nodes below `x_hi`.
fn power_limit(w: &WaveTable, ch: usize, p: i32, x_hi: f64) -> f64 {
    let pts = w.grid.points();
    let vals: Vec<f64> =
        pts.iter().zip(&w.values).take_while(|(x, _)| **x < x_hi).map(|(x, v)| v[ch] / x.powi(p)).collect();
    if vals.is_empty() {
        return f64::NAN;
    }
    vals.iter().sum::<f64>() / vals.len() as f64
}

impl OriginSeries {
    /// Reads the coefficients off a chain at stage ≥ 2 with a bound state.
    pub fn from_chain(state: &StageState, k_squared: f64) -> Option<Self> {
        let stages = state.lineage();
        let v0 = stages[0].potential.values[0];
        let lambda = (v0.m[0][0] - k_squared) / 6.0;
        let mu = (v0.m[1][1] - k_squared) / 6.0;
        let nu = v0.m[0][1] / 6.0;
        let phi0 = stages[0].bound.as_ref()?;
        let kappa2 = -stages[0].bound_energy?;
        let x0 = phi0.grid.x_min();
        // Slopes at the origin from Φ₀′(x_min) with the cubic correction.
        let (mut u1, mut v1) = (phi0.derivs[0][0], phi0.derivs[0][1]);
        let mut u2 = 0.0;
        let mut v2 = 0.0;
        for _ in 0..3 {
            u2 = ((v0.m[0][0] + kappa2) * u1 + v0.m[0][1] * v1) / 6.0;
            v2 = (v0.m[0][1] * u1 + (v0.m[1][1] + kappa2) * v1) / 6.0;
            u1 = phi0.derivs[0][0] - 3.0 * u2 * x0 * x0;
            v1 = phi0.derivs[0][1] - 3.0 * v2 * x0 * x0;
        }
        let phi2 = stages.get(2)?.bound.as_ref()?;
        let y2 = stages.get(2)?.carry.as_ref()?;
        let x_hi = 10.0 * x0;
        let v2_prime = power_limit(phi2, 1, 3, x_hi);
        let mu_prime = power_limit(y2, 1, 3, x_hi);
        // u₂′ from the deviation of Φ₂,₁/x from u₁ between x_hi and 100 x_hi.
        let pts = phi2.grid.points();
        let fit: Vec<(f64, f64)> = pts
            .iter()
            .zip(&phi2.values)
            .filter(|(x, _)| **x >= x_hi && **x <= (100.0 * x_hi).max(0.05))
            .map(|(x, v)| (*x, (v[0] / x - u1) / (x * x)))
            .collect();
        let u2_prime = if fit.is_empty() { f64::NAN } else { fit.iter().map(|p| p.1).sum::<f64>() / fit.len() as f64 };
        Some(Self { lambda, mu, nu, u1, u2, v1, v2, u2_prime, v2_prime, mu_prime })
    }
}
