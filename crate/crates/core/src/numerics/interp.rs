use super::{RMat2, RadialGrid};

const STENCIL: usize = 6;

/// Lagrange weights for the 6-point stencil around `x`; also used for
/// mild extrapolation just outside the grid.
fn stencil(grid: &RadialGrid, x: f64) -> (usize, [f64; STENCIL]) {
    let p = grid.points();
    let n = p.len();
    let i = grid.interval(x);
    let s = (i + 1).saturating_sub(STENCIL / 2).min(n - STENCIL);
    let mut w = [1.0; STENCIL];
    for j in 0..STENCIL {
        for m in 0..STENCIL {
            if m != j {
                w[j] *= (x - p[s + m]) / (p[s + j] - p[s + m]);
            }
        }
    }
    (s, w)
}

pub fn interpolate_mat(grid: &RadialGrid, values: &[RMat2], x: f64) -> RMat2 {
    let (s, w) = stencil(grid, x);
    let mut acc = RMat2::zero();
    for j in 0..STENCIL {
        acc += values[s + j].scale(w[j]);
    }
    acc
}

pub fn interpolate_scalar(grid: &RadialGrid, values: &[f64], x: f64) -> f64 {
    let (s, w) = stencil(grid, x);
    (0..STENCIL).map(|j| w[j] * values[s + j]).sum()
}
