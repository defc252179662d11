use std::sync::Arc;

use crate::numerics::{
    cumulative_scalar, interpolate_mat, NumericsError, QuadFrom, RMat2, RadialGrid, RadialPotential,
};

/// Symmetric potential samples. The ℓ(ℓ+1)/x² content named by `labels` is
/// not included in `values`.
#[derive(Clone, Debug)]
pub struct PotentialTable {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<RMat2>,
    pub labels: [u32; 2],
}

impl PotentialTable {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<RMat2>, labels: [u32; 2]) -> Result<Self, NumericsError> {
        if values.len() != grid.len() {
            return Err(NumericsError::InvalidInput(format!(
                "{} potential samples for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite { x: grid.points()[i] });
        }
        Ok(Self { grid, values, labels })
    }

    pub fn zero(grid: Arc<RadialGrid>, labels: [u32; 2]) -> Self {
        let n = grid.len();
        Self { grid, values: vec![RMat2::zero(); n], labels }
    }

    /// Interpolated value; extrapolates a little below x_min.
    pub fn value_at(&self, x: f64) -> RMat2 {
        interpolate_mat(&self.grid, &self.values, x)
    }

    /// Largest |V₁₂ − V₂₁| relative to |V| over the table.
    pub fn max_asymmetry(&self) -> f64 {
        self.values.iter().map(|v| v.asymmetry() / v.max_abs().max(1.0)).fold(0.0, f64::max)
    }

    /// Same samples, different labels.
    pub fn relabeled(&self, labels: [u32; 2]) -> Self {
        Self { labels, ..self.clone() }
    }
}

impl RadialPotential for PotentialTable {
    fn coupling(&self, x: f64) -> RMat2 {
        self.value_at(x)
    }
    fn labels(&self) -> [u32; 2] {
        self.labels
    }
}

/// Entry order (1,1), (1,2), (2,2).
pub const ENTRIES: [(usize, usize); 3] = [(0, 0), (0, 1), (1, 1)];

#[derive(Clone, Debug, PartialEq)]
pub struct EntryIntegrability {
    /// ∫_{x_min}^{R_max} x^{1+θ}|V| dx.
    pub integral: f64,
    /// Log-log slope of the decreasing envelope of |V| over [R_max/2, R_max];
    /// −∞ for an entry that vanishes there.
    pub tail_exponent: f64,
    pub converges: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrabilityReport {
    pub theta: f64,
    pub entries: [EntryIntegrability; 3],
}

impl IntegrabilityReport {
    pub fn passes(&self) -> bool {
        self.entries.iter().all(|e| e.converges && e.integral.is_finite())
    }
}

/// Checks ∫₀^∞ x^{1+θ}|V_αβ| dx < ∞ from the table: the truncated integral
/// plus the fitted power-law decay of the tail. The integral converges iff
/// the tail falls faster than x^{−2−θ}.
pub fn check_integrability(pot: &PotentialTable, theta: f64) -> Result<IntegrabilityReport, NumericsError> {
    if !(theta.abs() < 1.0) {
        return Err(NumericsError::InvalidInput(format!("theta = {theta} must satisfy |θ| < 1")));
    }
    let x = pot.grid.points();
    let r_max = pot.grid.r_max();
    let start = pot.grid.nearest(0.5 * r_max);
    let mut entries = Vec::with_capacity(3);
    for (r, c) in ENTRIES {
        let abs: Vec<f64> = pot.values.iter().map(|v| v.m[r][c].abs()).collect();
        let weighted: Vec<f64> = abs.iter().zip(x).map(|(v, x)| x.powf(1.0 + theta) * v).collect();
        let integral = *cumulative_scalar(&weighted, &pot.grid, QuadFrom::Origin)?.last().unwrap_or(&0.0);
        // Running maximum from the far end removes zero crossings of an
        // oscillating entry from the fit.
        let mut env = abs[start..].to_vec();
        for i in (0..env.len().saturating_sub(1)).rev() {
            env[i] = env[i].max(env[i + 1]);
        }
        let pts: Vec<(f64, f64)> =
            x[start..].iter().zip(&env).filter(|(_, v)| **v > 1e-300).map(|(x, v)| (x.ln(), v.ln())).collect();
        let tail_exponent = if pts.len() < 3 { f64::NEG_INFINITY } else { slope(&pts) };
        entries.push(EntryIntegrability { integral, tail_exponent, converges: tail_exponent < -2.0 - theta });
    }
    let entries: [EntryIntegrability; 3] = entries.try_into().expect("three entries");
    Ok(IntegrabilityReport { theta, entries })
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<RadialGrid> {
        Arc::new(RadialGrid::uniform(1e-3, 40.0, 4000).unwrap())
    }

    #[test]
    fn zero_potential() {
        let r = check_integrability(&PotentialTable::zero(grid(), [0, 0]), 0.5).unwrap();
        assert!(r.passes());
        assert!(r.entries.iter().all(|e| e.integral == 0.0));
    }

    #[test]
    fn inverse_square_tail_is_flagged() {
        let g = grid();
        let vals = g.points().iter().map(|x| RMat2::sym(-1.0 / (1.0 + x * x), 0.0, 0.0)).collect();
        let t = PotentialTable::new(g, vals, [0, 0]).unwrap();
        assert!(!check_integrability(&t, 0.5).unwrap().passes());
        let r = check_integrability(&t, -0.5).unwrap();
        assert!(r.passes(), "{r:?}");
        assert!((r.entries[0].tail_exponent + 2.0).abs() < 0.05);
    }

    #[test]
    fn exponential_tail_passes() {
        let g = grid();
        let vals = g.points().iter().map(|x| RMat2::sym((-0.5 * x).exp() * (3.0 * x).cos(), 0.0, 0.0)).collect();
        let t = PotentialTable::new(g, vals, [0, 0]).unwrap();
        let r = check_integrability(&t, 0.5).unwrap();
        assert!(r.passes());
        assert!(r.entries[0].tail_exponent < -5.0);
    }
}
