use num_complex::Complex64;

use super::{CMat2, NumericsError};

pub const DEFAULT_NODES: usize = 256;

fn trapezoid<F: Fn(Complex64) -> CMat2>(f: &F, pole: Complex64, radius: f64, nodes: usize) -> CMat2 {
    let mut acc = CMat2::zero();
    for j in 0..nodes {
        let th = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
        let e = Complex64::from_polar(1.0, th);
        acc += f(pole + e * radius).scale(e);
    }
    acc.scale(Complex64::from(radius / nodes as f64))
}

/// Residue of `f` at `pole` from the trapezoidal rule on a circle, which
/// converges geometrically for functions analytic in an annulus. The rule
/// is also evaluated with half the nodes; disagreement means something
/// else is singular near the circle.
pub fn contour_residue<F: Fn(Complex64) -> CMat2>(
    f: F,
    pole: Complex64,
    radius: f64,
    nodes: usize,
) -> Result<CMat2, NumericsError> {
    if !(radius > 0.0) || nodes < 8 {
        return Err(NumericsError::InvalidInput(format!("radius {radius}, nodes {nodes}")));
    }
    let full = trapezoid(&f, pole, radius, nodes);
    let half = trapezoid(&f, pole, radius, nodes / 2);
    if !full.is_finite() {
        return Err(NumericsError::NonFinite { x: radius });
    }
    let diff = (full - half).max_abs();
    if diff > 1e-10 * full.max_abs().max(1.0) {
        return Err(NumericsError::NoConvergence(format!(
            "contour at {pole} radius {radius}: node-halving changed the residue by {diff:e}"
        )));
    }
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn simple_pole() {
        let r = contour_residue(
            |k| CMat2::identity().scale(Complex64::from(1.0) / (k - Complex64::i())),
            Complex64::i(),
            0.3,
            DEFAULT_NODES,
        )
        .unwrap();
        assert!((r - CMat2::identity()).max_abs() < 1e-13);
    }

    #[test]
    fn double_pole_has_no_residue() {
        let m = CMat2::new(c(1.0, 0.0), c(2.0, 1.0), c(2.0, 1.0), c(-3.0, 0.0));
        let p = c(0.0, 0.232);
        let r = contour_residue(|k| m.scale(Complex64::from(1.0) / ((k - p) * (k - p))), p, 0.1, 256).unwrap();
        assert!(r.max_abs() < 1e-13);
    }

    #[test]
    fn nearby_pole_is_detected() {
        let p = c(0.0, 1.0);
        let q = c(0.0, 1.05);
        let f = |k: Complex64| CMat2::identity().scale(Complex64::from(1.0) / ((k - p) * (k - q)));
        assert!(contour_residue(f, p, 0.049, 16).is_err());
    }
}
