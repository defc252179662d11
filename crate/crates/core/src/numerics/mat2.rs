//! Fixed-size 2×2 matrices over real or complex scalars.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use num_traits::{One, Zero};

/// Scalar field usable as a matrix entry.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + std::ops::Div<Output = Self>
{
    fn modulus(self) -> f64;
    fn is_finite_scalar(self) -> bool;
    fn from_real(x: f64) -> Self;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn is_finite_scalar(self) -> bool {
        self.is_finite()
    }
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn is_finite_scalar(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// Row-major 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

pub type RMat2 = Mat2<f64>;
pub type CMat2 = Mat2<Complex64>;

impl<T: Scalar> Mat2<T> {
    pub fn new(a11: T, a12: T, a21: T, a22: T) -> Self {
        Self { m: [[a11, a12], [a21, a22]] }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn identity() -> Self {
        Self::diag(T::one(), T::one())
    }

    /// The projector onto the second channel, diag(0, 1).
    pub fn proj2() -> Self {
        Self::diag(T::zero(), T::one())
    }

    pub fn diag(a: T, b: T) -> Self {
        Self::new(a, T::zero(), T::zero(), b)
    }

    /// Symmetric matrix from its independent entries.
    pub fn sym(a11: T, a12: T, a22: T) -> Self {
        Self::new(a11, a12, a12, a22)
    }

    pub fn from_cols(c0: [T; 2], c1: [T; 2]) -> Self {
        Self::new(c0[0], c1[0], c0[1], c1[1])
    }

    /// Outer product u vᵀ.
    pub fn outer(u: [T; 2], v: [T; 2]) -> Self {
        Self::new(u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1])
    }

    pub fn col(&self, j: usize) -> [T; 2] {
        [self.m[0][j], self.m[1][j]]
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn det(&self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1]
    }

    /// Inverse, or `None` when the determinant is exactly zero or not finite.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == T::zero() || !d.is_finite_scalar() {
            return None;
        }
        let r = T::one() / d;
        Some(Self::new(self.m[1][1] * r, -self.m[0][1] * r, -self.m[1][0] * r, self.m[0][0] * r))
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|a| a * s)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Mat2<U> {
        Mat2::new(f(self.m[0][0]), f(self.m[0][1]), f(self.m[1][0]), f(self.m[1][1]))
    }

    pub fn mul_vec(&self, v: [T; 2]) -> [T; 2] {
        [self.m[0][0] * v[0] + self.m[0][1] * v[1], self.m[1][0] * v[0] + self.m[1][1] * v[1]]
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(|a| a.modulus()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.iter().flatten().map(|a| a.modulus().powi(2)).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|a| a.is_finite_scalar())
    }

    /// Largest modulus of A − Aᵀ.
    pub fn asymmetry(&self) -> f64 {
        (self.m[0][1] - self.m[1][0]).modulus()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.asymmetry() <= tol * self.max_abs().max(1.0)
    }
}

impl RMat2 {
    /// The centrifugal strength matrix diag(ℓ₁(ℓ₁+1), ℓ₂(ℓ₂+1)).
    pub fn centrifugal(labels: [u32; 2]) -> Self {
        let c = |l: u32| (l * (l + 1)) as f64;
        Self::diag(c(labels[0]), c(labels[1]))
    }

    pub fn to_complex(&self) -> CMat2 {
        self.map(Complex64::from)
    }
}

impl CMat2 {
    pub fn re(&self) -> RMat2 {
        Mat2::new(self.m[0][0].re, self.m[0][1].re, self.m[1][0].re, self.m[1][1].re)
    }

    pub fn im(&self) -> RMat2 {
        Mat2::new(self.m[0][0].im, self.m[0][1].im, self.m[1][0].im, self.m[1][1].im)
    }

    pub fn conj(&self) -> Self {
        self.map(|a| a.conj())
    }

    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }
}

impl<T: Scalar> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl<T: Scalar> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(
            self.m[0][0] - o.m[0][0],
            self.m[0][1] - o.m[0][1],
            self.m[1][0] - o.m[1][0],
            self.m[1][1] - o.m[1][1],
        )
    }
}

impl<T: Scalar> AddAssign for Mat2<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> SubAssign for Mat2<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Scalar> Neg for Mat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|a| -a)
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl<T: Scalar> Default for Mat2<T> {
    fn default() -> Self {
        Self::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let a = RMat2::new(2.0, 1.0, -0.5, 3.0);
        let p = a * a.inverse().unwrap();
        assert!((p - RMat2::identity()).max_abs() < 1e-15);
        assert!(RMat2::new(1.0, 2.0, 2.0, 4.0).inverse().is_none());
    }

    #[test]
    fn projector_and_centrifugal() {
        assert_eq!(RMat2::proj2() * RMat2::proj2(), RMat2::proj2());
        assert_eq!(RMat2::centrifugal([0, 2]), RMat2::proj2().scale(6.0));
    }

    #[test]
    fn outer_and_columns() {
        let m = RMat2::outer([1.0, 2.0], [3.0, 4.0]);
        assert_eq!(m.col(1), [4.0, 8.0]);
        assert_eq!(m.det(), 0.0);
        assert_eq!(RMat2::from_cols(m.col(0), m.col(1)), m);
    }

    #[test]
    fn complex_parts() {
        let c =
            CMat2::new(Complex64::new(1.0, 2.0), Complex64::i(), Complex64::new(0.0, -1.0), Complex64::new(3.0, 0.0));
        assert_eq!(c.re(), RMat2::new(1.0, 0.0, 0.0, 3.0));
        assert_eq!(c.adjoint().m[0][1], Complex64::i());
    }
}
