//! Small dense vectors and matrices, generic over the scalar type.
//!
//! Everything the model needs is built from 3-vectors, 3x3 blocks and modest
//! stacked matrices (6N x n and friends), so the types here stay deliberately
//! minimal: row-major storage, value semantics, no views.

use crate::Scalar;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vector3<T>(pub [T; 3]);

impl<T: Scalar> Vector3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Vector3([x, y, z])
    }

    pub fn zeros() -> Self {
        Vector3([T::zero(); 3])
    }

    pub fn dot(&self, other: &Self) -> T {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(&self, other: &Self) -> Self {
        let a = &self.0;
        let b = &other.0;
        Vector3([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Vector3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    /// Lift an `f64` vector into the target scalar (constant dual part).
    pub fn lift(v: &Vector3<f64>) -> Self {
        Vector3([
            T::from_f64(v.0[0]).unwrap(),
            T::from_f64(v.0[1]).unwrap(),
            T::from_f64(v.0[2]).unwrap(),
        ])
    }
}

impl Vector3<f64> {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl<T: Scalar> Add for Vector3<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Vector3([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
        ])
    }
}

impl<T: Scalar> Sub for Vector3<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Vector3([
            self.0[0] - rhs.0[0],
            self.0[1] - rhs.0[1],
            self.0[2] - rhs.0[2],
        ])
    }
}

impl<T: Scalar> Neg for Vector3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vector3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl<T> Index<usize> for Vector3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vector3<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

/// 3x3 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix3<T>(pub [[T; 3]; 3]);

impl<T: Scalar> Matrix3<T> {
    pub fn zeros() -> Self {
        Matrix3([[T::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = T::one();
        }
        m
    }

    pub fn from_rows(r0: [T; 3], r1: [T; 3], r2: [T; 3]) -> Self {
        Matrix3([r0, r1, r2])
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn trace(&self) -> T {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn mul_vec(&self, v: &Vector3<T>) -> Vector3<T> {
        let mut out = Vector3::zeros();
        for i in 0..3 {
            out.0[i] = self.0[i][0] * v.0[0] + self.0[i][1] * v.0[1] + self.0[i][2] * v.0[2];
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        let mut m = *self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = m.0[i][j] * s;
            }
        }
        m
    }

    pub fn column(&self, j: usize) -> Vector3<T> {
        Vector3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    pub fn lift(m: &Matrix3<f64>) -> Self {
        let mut out = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = T::from_f64(m.0[i][j]).unwrap();
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for row in &self.0 {
            for x in row {
                m = m.max(x.abs());
            }
        }
        m
    }
}

impl Matrix3<f64> {
    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| (self.0[i][j] - self.0[j][i]).abs() <= tol))
    }

    /// Deviation from orthonormality, max entry of |R^T R - I|.
    pub fn orthonormality_defect(&self) -> f64 {
        let rtr = self.transpose() * *self;
        let mut d = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                d = d.max((rtr.0[i][j] - target).abs());
            }
        }
        d
    }
}

impl<T: Scalar> Mul for Matrix3<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = T::zero();
                for k in 0..3 {
                    acc = acc + self.0[i][k] * rhs.0[k][j];
                }
                out.0[i][j] = acc;
            }
        }
        out
    }
}

impl<T: Scalar> Add for Matrix3<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = out.0[i][j] + rhs.0[i][j];
            }
        }
        out
    }
}

impl<T: Scalar> Sub for Matrix3<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = out.0[i][j] - rhs.0[i][j];
            }
        }
        out
    }
}

impl<T> Index<(usize, usize)> for Matrix3<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.0[i][j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix3<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.0[i][j]
    }
}

/// Dense dynamically sized matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DMatrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        DMatrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matmul");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &DVector<T>) -> DVector<T> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in mul_vec");
        let mut out = DVector::zeros(self.rows);
        for i in 0..self.rows {
            let mut acc = T::zero();
            for j in 0..self.cols {
                acc = acc + self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + rhs[(i, j)])
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - rhs[(i, j)])
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * s)
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn set_mat3(&mut self, r0: usize, c0: usize, block: &Matrix3<T>) {
        for i in 0..3 {
            for j in 0..3 {
                self[(r0 + i, c0 + j)] = block.0[i][j];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Max absolute entry.
    pub fn norm_inf(&self) -> T {
        let mut m = T::zero();
        for x in &self.data {
            m = m.max(x.abs());
        }
        m
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DMatrix<U> {
        DMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn lift(m: &DMatrix<f64>) -> Self {
        m.map(|x| T::from_f64(x).unwrap())
    }
}

impl DMatrix<f64> {
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn symmetry_defect(&self) -> f64 {
        let mut d = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                d = f64::max(d, (self[(i, j)] - self[(j, i)]).abs());
            }
        }
        d
    }
}

impl<T> Index<(usize, usize)> for DMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Dense dynamically sized column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DVector<T> {
    data: Vec<T>,
}

impl<T: Scalar> DVector<T> {
    pub fn zeros(n: usize) -> Self {
        DVector {
            data: vec![T::zero(); n],
        }
    }

    pub fn from_vec(data: Vec<T>) -> Self {
        DVector { data }
    }

    pub fn from_slice(s: &[T]) -> Self {
        DVector { data: s.to_vec() }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dot(&self, other: &Self) -> T {
        assert_eq!(self.len(), other.len());
        let mut acc = T::zero();
        for i in 0..self.len() {
            acc = acc + self.data[i] * other.data[i];
        }
        acc
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.len(), rhs.len());
        DVector {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.len(), rhs.len());
        DVector {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        DVector {
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn norm_inf(&self) -> T {
        let mut m = T::zero();
        for x in &self.data {
            m = m.max(x.abs());
        }
        m
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn set_segment(&mut self, start: usize, seg: &[T]) {
        self.data[start..start + seg.len()].copy_from_slice(seg);
    }

    pub fn segment(&self, start: usize, len: usize) -> Vec<T> {
        self.data[start..start + len].to_vec()
    }

    pub fn set_vec3(&mut self, start: usize, v: &Vector3<T>) {
        self.set_segment(start, &v.0);
    }

    pub fn vec3(&self, start: usize) -> Vector3<T> {
        Vector3([self.data[start], self.data[start + 1], self.data[start + 2]])
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DVector<U> {
        DVector {
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn lift(v: &DVector<f64>) -> Self {
        v.map(|x| T::from_f64(x).unwrap())
    }
}

impl DVector<f64> {
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl<T> Index<usize> for DVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T> IndexMut<usize> for DVector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.data[i]
    }
}

/// Solve `A x = b` for symmetric positive definite `A` by Cholesky.
///
/// Callers are expected to have screened `A` for definiteness; a nonpositive
/// pivot still returns an error rather than NaN.
pub fn cholesky_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> crate::Result<DVector<f64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.len(), n);
    let mut l = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(crate::Error::NumericFailure(format!(
                        "cholesky pivot {sum:.3e} at row {i}"
                    )));
                }
                l[(i, i)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    // forward then backward substitution
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[(i, k)] * y[k];
        }
        y[i] = sum / l[(i, i)];
    }
    let mut x = DVector::zeros(n);
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[(k, i)] * x[k];
        }
        x[i] = sum / l[(i, i)];
    }
    Ok(x)
}
