//! Dense complex LU for the small per-node systems of the separable solver.

use num_complex::Complex64;

use super::NumericsError;

/// Row-major square complex matrix factorised with partial pivoting.
#[derive(Clone, Debug)]
pub struct ComplexLu {
    n: usize,
    lu: Vec<Complex64>,
    piv: Vec<usize>,
    norm1: f64,
}

impl ComplexLu {
    pub fn new(n: usize, mut a: Vec<Complex64>) -> Result<Self, NumericsError> {
        assert_eq!(a.len(), n * n);
        let norm1 = (0..n).map(|j| (0..n).map(|i| a[i * n + j].norm()).sum::<f64>()).fold(0.0, f64::max);
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm())).unwrap_or(k);
            if a[p * n + k].norm() == 0.0 {
                return Err(NumericsError::Singular { condition: f64::INFINITY });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let inv = Complex64::from(1.0) / a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] * inv;
                a[i * n + k] = l;
                for j in k + 1..n {
                    let u = a[k * n + j];
                    a[i * n + j] -= l * u;
                }
            }
        }
        Ok(Self { n, lu: a, piv, norm1 })
    }

    /// Solves A x = b in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        let mut x: Vec<Complex64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[i * n + j];
                x[i] = x[i] - l * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[i * n + j];
                x[i] = x[i] - u * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    /// 1-norm condition number from the explicit inverse (cheap at n ≤ 20).
    pub fn condition(&self) -> f64 {
        let n = self.n;
        let mut inv_norm: f64 = 0.0;
        let mut e = vec![Complex64::from(0.0); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = Complex64::from(0.0));
            e[j] = Complex64::from(1.0);
            self.solve_in_place(&mut e);
            inv_norm = inv_norm.max(e.iter().map(|v| v.norm()).sum());
        }
        self.norm1 * inv_norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let c = |r: f64, i: f64| Complex64::new(r, i);
        let a = vec![
            c(0.0, 1.0),
            c(2.0, 0.0),
            c(1.0, 0.0),
            c(1.0, -1.0),
            c(0.5, 0.0),
            c(0.0, 0.0),
            c(3.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 1.0),
        ];
        let x = [c(1.0, 2.0), c(-1.0, 0.5), c(0.25, 0.0)];
        let mut b: Vec<Complex64> = (0..3).map(|i| (0..3).map(|j| a[i * 3 + j] * x[j]).sum()).collect();
        let lu = ComplexLu::new(3, a).unwrap();
        lu.solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-14);
        }
        assert!(lu.condition() > 1.0);
    }

    #[test]
    fn singular_is_rejected() {
        let a = vec![Complex64::from(1.0), Complex64::from(2.0), Complex64::from(2.0), Complex64::from(4.0)];
        let r = ComplexLu::new(2, a);
        assert!(r.is_err() || r.unwrap().condition() > 1e15);
    }
}
