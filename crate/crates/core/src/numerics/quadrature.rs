use super::{NumericsError, RMat2, RadialGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum From {
    /// ∫₀ˣ, including the piece [0, x_min] from the extrapolated cubic.
    Origin,
    /// ∫ₓ^{R_max}; any tail beyond R_max is the caller's business.
    Infinity,
}

/// ∫_a^b of the cubic interpolating (t_j, ·) as weights on the samples.
/// Works in the shifted variable u = t − a to avoid cancellation when the
/// nodes sit far from zero.
fn cubic_weights(t: [f64; 4], a: f64, b: f64) -> [f64; 4] {
    let d = t.map(|tj| tj - a);
    let len = b - a;
    let mut w = [0.0; 4];
    for j in 0..4 {
        // Coefficients of Π_{m≠j}(u − d_m), lowest degree first.
        let mut c = [1.0, 0.0, 0.0, 0.0];
        let mut deg = 0;
        let mut denom = 1.0;
        for m in 0..4 {
            if m == j {
                continue;
            }
            for k in (0..=deg).rev() {
                c[k + 1] += c[k];
                c[k] *= -d[m];
            }
            deg += 1;
            denom *= d[j] - d[m];
        }
        let mut integral = 0.0;
        let mut p = len;
        for (k, ck) in c.iter().enumerate() {
            integral += ck * p / (k + 1) as f64;
            p *= len;
        }
        w[j] = integral / denom;
    }
    w
}

fn stencil_start(i: usize, n: usize) -> usize {
    i.saturating_sub(1).min(n - 4)
}

/// Cumulative integral of grid samples with a local cubic rule per interval
/// (O(h⁴) on smooth integrands, exact for cubics).
pub fn cumulative_scalar(values: &[f64], grid: &RadialGrid, from: From) -> Result<Vec<f64>, NumericsError> {
    let x = grid.points();
    let n = x.len();
    if values.len() != n {
        return Err(NumericsError::InvalidInput(format!("{} samples for {} nodes", values.len(), n)));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite { x: x[i] });
    }
    let piece = |i: usize| -> f64 {
        let s = stencil_start(i, n);
        let t = [x[s], x[s + 1], x[s + 2], x[s + 3]];
        let w = cubic_weights(t, x[i], x[i + 1]);
        (0..4).map(|j| w[j] * values[s + j]).sum()
    };
    let mut out = vec![0.0; n];
    match from {
        From::Origin => {
            let t = [x[0], x[1], x[2], x[3]];
            let w = cubic_weights(t, 0.0, x[0]);
            out[0] = (0..4).map(|j| w[j] * values[j]).sum();
            for i in 0..n - 1 {
                out[i + 1] = out[i] + piece(i);
            }
        }
        From::Infinity => {
            for i in (0..n - 1).rev() {
                out[i] = out[i + 1] + piece(i);
            }
        }
    }
    Ok(out)
}

/// Entry-wise [`cumulative_scalar`] for matrix samples.
pub fn cumulative_quadrature(values: &[RMat2], grid: &RadialGrid, from: From) -> Result<Vec<RMat2>, NumericsError> {
    let mut out = vec![RMat2::zero(); values.len()];
    for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let col: Vec<f64> = values.iter().map(|m| m.m[r][c]).collect();
        let cum = cumulative_scalar(&col, grid, from)?;
        for (o, v) in out.iter_mut().zip(cum) {
            o.m[r][c] = v;
        }
    }
    Ok(out)
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = -z;
        xs[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

/// Composite Gauss–Legendre rule on [a, b] with `panels` equal panels.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        for (x, w) in xs.iter().zip(&ws) {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_from_origin() {
        let g = RadialGrid::uniform(1e-3, 1.0, 999).unwrap();
        let ones = vec![1.0; g.len()];
        let c = cumulative_scalar(&ones, &g, From::Origin).unwrap();
        for (x, v) in g.points().iter().zip(&c) {
            assert!((v - x).abs() < 1e-13);
        }
    }

    #[test]
    fn square_on_nonuniform_grid() {
        let g = RadialGrid::origin_refined(1e-4, 2.0, 4e-3, 10).unwrap();
        let v: Vec<f64> = g.points().iter().map(|t| t * t).collect();
        let c = cumulative_scalar(&v, &g, From::Origin).unwrap();
        for (x, v) in g.points().iter().zip(&c) {
            assert!((v - x.powi(3) / 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn exponential_from_infinity() {
        let sigma = 0.2053483144;
        let g = RadialGrid::uniform(1e-3, 40.0, 4000).unwrap();
        let v: Vec<RMat2> = g.points().iter().map(|t| RMat2::proj2().scale((-2.0 * sigma * t).exp())).collect();
        let c = cumulative_quadrature(&v, &g, From::Infinity).unwrap();
        let tail = (-2.0 * sigma * 40.0).exp() / (2.0 * sigma);
        for (x, m) in g.points().iter().zip(&c) {
            let exact = (-2.0 * sigma * x).exp() / (2.0 * sigma);
            assert!((m.m[1][1] - exact).abs() <= tail + 1e-10);
            assert_eq!(m.m[0][0], 0.0);
        }
    }

    #[test]
    fn origin_plus_infinity_is_total() {
        let g = RadialGrid::uniform(1e-3, 5.0, 700).unwrap();
        let v: Vec<f64> = g.points().iter().map(|t| (t * 1.7).sin() * (-t).exp()).collect();
        let a = cumulative_scalar(&v, &g, From::Origin).unwrap();
        let b = cumulative_scalar(&v, &g, From::Infinity).unwrap();
        let first = a[0];
        let total = a[a.len() - 1];
        for (p, q) in a.iter().zip(&b) {
            assert!((p - first + q - (total - first)).abs() < 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let q: f64 = composite_gauss(0.0, 3.0, 7, 5).iter().map(|(t, w)| w * t.exp()).sum();
        assert!((q - (3.0f64.exp() - 1.0)).abs() < 1e-12);
    }
}
