use super::RMat2;

/// Fixed-step matrix Numerov for ψ″ = Q(x) ψ on x₀ + j h, given ψ at the
/// first two nodes. Independent of the adaptive integrator; used as a
/// cross-check.
pub fn numerov_matrix<Q: Fn(f64) -> RMat2>(
    q: Q,
    x0: f64,
    h: f64,
    steps: usize,
    psi0: RMat2,
    psi1: RMat2,
) -> Vec<RMat2> {
    let c = h * h / 12.0;
    let id = RMat2::identity();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(psi0);
    if steps == 0 {
        return out;
    }
    out.push(psi1);
    let mut q_prev = q(x0);
    let mut q_cur = q(x0 + h);
    for j in 1..steps {
        let q_next = q(x0 + h * (j + 1) as f64);
        let rhs = (id + q_cur.scale(5.0 * c)).scale(2.0) * out[j] - (id - q_prev.scale(c)) * out[j - 1];
        let lhs = id - q_next.scale(c);
        let next = lhs.inverse().expect("Numerov step matrix singular") * rhs;
        out.push(next);
        q_prev = q_cur;
        q_cur = q_next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic() {
        let h = 1e-3;
        let n = 5000;
        let psi = numerov_matrix(
            |_| RMat2::identity().scale(-4.0),
            0.0,
            h,
            n,
            RMat2::zero(),
            RMat2::identity().scale((2.0 * h).sin()),
        );
        let x = h * n as f64;
        assert!((psi[n].m[0][0] - (2.0 * x).sin()).abs() < 1e-8);
    }
}
