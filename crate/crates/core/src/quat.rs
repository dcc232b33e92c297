//! Quaternion algebra: the Hamilton product, conjugation, the Hadamard
//! product, the three canonical involutions and dense quaternion vectors and
//! matrices.
//!
//! Components are always ordered `(q0, q1, q2, q3)` = `(real, i, j, k)`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::Serialize;

use crate::error::{Error, Result};

/// A quaternion `q0 + q1 i + q2 j + q3 k` over `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Quaternion {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

/// One of the three imaginary axes used by the involutions `q^i`, `q^j`, `q^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    I,
    J,
    K,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::I, Axis::J, Axis::K];

    /// The pure unit quaternion along this axis.
    pub fn unit(self) -> Quaternion {
        match self {
            Axis::I => Quaternion::I,
            Axis::J => Quaternion::J,
            Axis::K => Quaternion::K,
        }
    }
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    /// The basis `1, i, j, k` in component order.
    pub const BASIS: [Quaternion; 4] = [Self::ONE, Self::I, Self::J, Self::K];

    #[inline]
    pub const fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Self {
        Self { q0, q1, q2, q3 }
    }

    #[inline]
    pub const fn from_real(r: f64) -> Self {
        Self::new(r, 0.0, 0.0, 0.0)
    }

    #[inline]
    pub const fn from_array(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    #[inline]
    pub const fn to_array(self) -> [f64; 4] {
        [self.q0, self.q1, self.q2, self.q3]
    }

    /// Component `idx` in `(real, i, j, k)` order.
    ///
    /// # Panics
    /// If `idx > 3`.
    #[inline]
    pub fn component(self, idx: usize) -> f64 {
        self.to_array()[idx]
    }

    /// Returns a copy with component `idx` replaced.
    #[inline]
    pub fn with_component(self, idx: usize, value: f64) -> Self {
        let mut c = self.to_array();
        c[idx] = value;
        Self::from_array(c)
    }

    /// The vector (imaginary) part as a pure quaternion.
    #[inline]
    pub fn imag(self) -> Self {
        Self::new(0.0, self.q1, self.q2, self.q3)
    }

    pub fn is_finite(self) -> bool {
        self.q0.is_finite() && self.q1.is_finite() && self.q2.is_finite() && self.q3.is_finite()
    }

    /// True when all three imaginary components are exactly zero.
    pub fn is_real(self) -> bool {
        self.q1 == 0.0 && self.q2 == 0.0 && self.q3 == 0.0
    }

    #[inline]
    pub fn scale(self, s: f64) -> Self {
        Self::new(self.q0 * s, self.q1 * s, self.q2 * s, self.q3 * s)
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self::new(self.q0, -self.q1, -self.q2, -self.q3)
    }

    /// Componentwise product `(x0 y0, x1 y1, x2 y2, x3 y3)`.
    #[inline]
    pub fn hadamard(self, other: Self) -> Self {
        Self::new(
            self.q0 * other.q0,
            self.q1 * other.q1,
            self.q2 * other.q2,
            self.q3 * other.q3,
        )
    }

    /// `q^η = -η q η`: keeps the real part and the component along `axis`,
    /// negates the two components orthogonal to it.
    #[inline]
    pub fn involution(self, axis: Axis) -> Self {
        match axis {
            Axis::I => Self::new(self.q0, self.q1, -self.q2, -self.q3),
            Axis::J => Self::new(self.q0, -self.q1, self.q2, -self.q3),
            Axis::K => Self::new(self.q0, -self.q1, -self.q2, self.q3),
        }
    }

    /// `q^{η*}`, the conjugate of the involution.
    #[inline]
    pub fn conj_involution(self, axis: Axis) -> Self {
        self.involution(axis).conj()
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.q0 * self.q0 + self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `q* / |q|^2`. Fails on the zero quaternion.
    pub fn inverse(self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 == 0.0 {
            return Err(Error::Singular);
        }
        Ok(self.conj().scale(1.0 / n2))
    }

    /// Largest absolute componentwise difference.
    pub fn max_abs_diff(self, other: Self) -> f64 {
        let d = self - other;
        d.q0.abs().max(d.q1.abs()).max(d.q2.abs()).max(d.q3.abs())
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.q0, self.q1, self.q2, self.q3)
    }
}

impl Add for Quaternion {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.q0 + rhs.q0,
            self.q1 + rhs.q1,
            self.q2 + rhs.q2,
            self.q3 + rhs.q3,
        )
    }
}

impl Sub for Quaternion {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(
            self.q0 - rhs.q0,
            self.q1 - rhs.q1,
            self.q2 - rhs.q2,
            self.q3 - rhs.q3,
        )
    }
}

impl Neg for Quaternion {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.q0, -self.q1, -self.q2, -self.q3)
    }
}

impl AddAssign for Quaternion {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for Quaternion {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

/// Hamilton product. Not commutative: `i * j = k`, `j * i = -k`.
impl Mul for Quaternion {
    type Output = Self;
    #[inline]
    fn mul(self, y: Self) -> Self {
        let x = self;
        Self::new(
            x.q0 * y.q0 - x.q1 * y.q1 - x.q2 * y.q2 - x.q3 * y.q3,
            x.q0 * y.q1 + x.q1 * y.q0 + x.q2 * y.q3 - x.q3 * y.q2,
            x.q0 * y.q2 - x.q1 * y.q3 + x.q2 * y.q0 + x.q3 * y.q1,
            x.q0 * y.q3 + x.q1 * y.q2 - x.q2 * y.q1 + x.q3 * y.q0,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    #[inline]
    fn mul(self, q: Quaternion) -> Quaternion {
        q.scale(self)
    }
}

impl std::iter::Sum for Quaternion {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Quaternion::ZERO, |acc, q| acc + q)
    }
}

/// Fixed-length vector of quaternions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QVector(Vec<Quaternion>);

impl QVector {
    pub fn new(elements: Vec<Quaternion>) -> Self {
        Self(elements)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![Quaternion::ZERO; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Quaternion] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Quaternion> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<Quaternion> {
        self.0
    }

    pub fn map(&self, f: impl Fn(Quaternion) -> Quaternion) -> Self {
        Self(self.0.iter().copied().map(f).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|q| q.is_finite())
    }
}

impl From<Vec<Quaternion>> for QVector {
    fn from(v: Vec<Quaternion>) -> Self {
        Self(v)
    }
}

impl Index<usize> for QVector {
    type Output = Quaternion;
    fn index(&self, i: usize) -> &Quaternion {
        &self.0[i]
    }
}

impl IndexMut<usize> for QVector {
    fn index_mut(&mut self, i: usize) -> &mut Quaternion {
        &mut self.0[i]
    }
}

impl<'a> IntoIterator for &'a QVector {
    type Item = &'a Quaternion;
    type IntoIter = std::slice::Iter<'a, Quaternion>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Dense row-major quaternion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Quaternion>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Quaternion::ZERO; rows * cols],
        }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Quaternion>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(
                "QMatrix::from_row_major",
                rows * cols,
                data.len(),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Quaternion,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Real identity on the diagonal, zero elsewhere.
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Quaternion::ONE
            } else {
                Quaternion::ZERO
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Quaternion] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[Quaternion] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Quaternion] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|q| q.is_finite())
    }

    /// `W a`, with each entry `Σ_j W[i,j] · a[j]` (weight on the left).
    pub fn matvec(&self, a: &QVector) -> Result<QVector> {
        if a.len() != self.cols {
            return Err(Error::dims("QMatrix::matvec", self.cols, a.len()));
        }
        Ok(QVector(
            (0..self.rows)
                .map(|i| {
                    self.row(i)
                        .iter()
                        .zip(a.iter())
                        .fold(Quaternion::ZERO, |acc, (&w, &x)| acc + w * x)
                })
                .collect(),
        ))
    }
}

impl Index<(usize, usize)> for QMatrix {
    type Output = Quaternion;
    fn index(&self, (i, j): (usize, usize)) -> &Quaternion {
        assert!(i < self.rows && j < self.cols, "QMatrix index out of range");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Quaternion {
        assert!(i < self.rows && j < self.cols, "QMatrix index out of range");
        &mut self.data[i * self.cols + j]
    }
}

/// Free-function form of [`QMatrix::matvec`].
pub fn qmatvec(w: &QMatrix, a: &QVector) -> Result<QVector> {
    w.matvec(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: Quaternion = Quaternion::new(1.0, 2.0, 3.0, 4.0);

    /// Left-multiplication matrix: `x * y == L(x) · [y0, y1, y2, y3]^T`.
    fn left_matrix(x: Quaternion) -> [[f64; 4]; 4] {
        let (a, b, c, d) = (x.q0, x.q1, x.q2, x.q3);
        [[a, -b, -c, -d], [b, a, -d, c], [c, d, a, -b], [d, -c, b, a]]
    }

    fn matrix_product(x: Quaternion, y: Quaternion) -> Quaternion {
        let m = left_matrix(x);
        let v = y.to_array();
        let mut out = [0.0; 4];
        for (r, row) in m.iter().enumerate() {
            out[r] = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        }
        Quaternion::from_array(out)
    }

    #[test]
    fn add_examples() {
        assert_eq!(Q + Quaternion::ZERO, Q);
        assert_eq!(Q + (-Q), Quaternion::ZERO);
        assert_eq!(
            Quaternion::new(1.0, 0.0, 1.0, 0.0) + Quaternion::new(0.0, 1.0, 0.0, 1.0),
            Quaternion::new(1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn mul_examples() {
        assert_eq!(Quaternion::I * Quaternion::J, Quaternion::K);
        assert_eq!(Quaternion::ONE * Q, Q);
        let expected = matrix_product(Q, Quaternion::new(5.0, 6.0, 7.0, 8.0));
        assert_eq!(expected, Quaternion::new(-60.0, 12.0, 30.0, 24.0));
        assert_eq!(Q * Quaternion::new(5.0, 6.0, 7.0, 8.0), expected);
    }

    #[test]
    fn unit_products_table() {
        use Quaternion as H;
        let m1 = -H::ONE;
        assert_eq!(H::I * H::I, m1);
        assert_eq!(H::J * H::J, m1);
        assert_eq!(H::K * H::K, m1);
        assert_eq!(H::I * H::J * H::K, m1);
        assert_eq!(H::J * H::K, H::I);
        assert_eq!(H::K * H::I, H::J);
        assert_eq!(H::J * H::I, -H::K);
        assert_eq!(H::K * H::J, -H::I);
        assert_eq!(H::I * H::K, -H::J);
    }

    #[test]
    fn conj_examples() {
        assert_eq!(Q.conj(), Quaternion::new(1.0, -2.0, -3.0, -4.0));
        assert_eq!(Quaternion::ONE.conj(), Quaternion::ONE);
        assert_eq!(Q * Q.conj(), Quaternion::from_real(30.0));
    }

    #[test]
    fn hadamard_examples() {
        let q = Quaternion::new(0.3, -1.2, 5.0, 7.5);
        assert_eq!(Quaternion::new(1.0, 1.0, 1.0, 1.0).hadamard(q), q);
        assert_eq!(
            Q.hadamard(Quaternion::new(4.0, 3.0, 2.0, 1.0)),
            Quaternion::new(4.0, 6.0, 6.0, 4.0)
        );
        assert_eq!(Quaternion::ZERO.hadamard(q), Quaternion::ZERO);
    }

    #[test]
    fn involution_examples() {
        assert_eq!(Q.involution(Axis::I), Quaternion::new(1.0, 2.0, -3.0, -4.0));
        for axis in Axis::ALL {
            let r = Quaternion::from_real(5.0);
            assert_eq!(r.involution(axis), r);
            assert_eq!(Q.involution(axis).involution(axis), Q);
            assert_eq!(Q.conj_involution(axis), Q.conj().involution(axis));
        }
        assert_eq!(
            Q.conj_involution(Axis::I),
            Quaternion::new(1.0, -2.0, 3.0, 4.0)
        );
        assert_eq!(
            Q.conj_involution(Axis::K),
            Quaternion::new(1.0, 2.0, 3.0, -4.0)
        );
    }

    #[test]
    fn involution_matches_sandwich() {
        for axis in Axis::ALL {
            let eta = axis.unit();
            assert_eq!(Q.involution(axis), -eta * Q * eta);
        }
    }

    #[test]
    fn norm_examples() {
        assert_eq!(Quaternion::ZERO.norm(), 0.0);
        assert_eq!(Quaternion::ONE.norm(), 1.0);
        assert_eq!(Q.norm(), 30f64.sqrt());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(Quaternion::ONE.inverse().unwrap(), Quaternion::ONE);
        assert_eq!(Quaternion::I.inverse().unwrap(), -Quaternion::I);
        assert!(matches!(Quaternion::ZERO.inverse(), Err(Error::Singular)));
        let q = Quaternion::new(0.2, -0.7, 1.3, 0.05);
        assert!((q * q.inverse().unwrap()).max_abs_diff(Quaternion::ONE) < 1e-15);
    }

    #[test]
    fn matvec_examples() {
        let w = QMatrix::identity(1);
        let a = QVector::new(vec![Q]);
        assert_eq!(qmatvec(&w, &a).unwrap(), a);

        let z = QMatrix::zeros(2, 1);
        assert_eq!(z.matvec(&a).unwrap(), QVector::zeros(2));

        let w1 = Quaternion::new(0.5, -1.0, 2.0, 0.25);
        let w2 = Quaternion::new(-3.0, 0.0, 1.0, 1.5);
        let a1 = Quaternion::new(1.0, 1.0, -2.0, 0.0);
        let a2 = Quaternion::new(0.0, 4.0, 0.5, -1.0);
        let w = QMatrix::from_row_major(1, 2, vec![w1, w2]).unwrap();
        let out = w.matvec(&QVector::new(vec![a1, a2])).unwrap();
        let by_hand = matrix_product(w1, a1) + matrix_product(w2, a2);
        assert!(out[0].max_abs_diff(by_hand) < 1e-15);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let w = QMatrix::zeros(2, 3);
        let err = w.matvec(&QVector::zeros(2)).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 3,
                actual: 2,
                ..
            }
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn quat() -> impl Strategy<Value = Quaternion> {
            prop::array::uniform4(-2.0f64..2.0).prop_map(Quaternion::from_array)
        }

        proptest! {
            #[test]
            fn product_matches_matrix_representation(x in quat(), y in quat()) {
                prop_assert!((x * y).max_abs_diff(matrix_product(x, y)) <= 1e-12);
            }

            #[test]
            fn associative_and_distributive(x in quat(), y in quat(), z in quat()) {
                prop_assert!(((x * y) * z).max_abs_diff(x * (y * z)) <= 1e-12);
                prop_assert!((x * (y + z)).max_abs_diff(x * y + x * z) <= 1e-12);
                prop_assert!(((x + y) * z).max_abs_diff(x * z + y * z) <= 1e-12);
            }

            #[test]
            fn conj_reverses_products(x in quat(), y in quat()) {
                prop_assert!((x * y).conj().max_abs_diff(y.conj() * x.conj()) <= 1e-12);
                prop_assert_eq!(x.conj().conj(), x);
            }

            #[test]
            fn norm_is_multiplicative(x in quat(), y in quat()) {
                let lhs = (x * y).norm();
                let rhs = x.norm() * y.norm();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
            }
        }

        #[test]
        fn not_commutative() {
            let d = Quaternion::I * Quaternion::J - Quaternion::J * Quaternion::I;
            assert!(d.norm() > 0.1);
        }
    }
}
