//! Dense row-major complex matrices.

use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::RealScalar;

/// A dense, row-major complex matrix.
#[derive(Clone, PartialEq, Debug)]
pub struct Matrix<R: RealScalar> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<R>>,
}

impl<R: RealScalar> Matrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Complex::zero(); rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<R>>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has wrong length");
        Matrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<R>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[Complex<R>] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [Complex<R>] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex<R>> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex<R> {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex<R>) {
        self.data[r * self.cols + c] = v;
    }

    /// Matrix product `self · rhs`, summing the inner index in ascending order.
    pub fn matmul(&self, rhs: &Matrix<R>) -> Matrix<R> {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        matmul_into(&self.data, &rhs.data, &mut out.data, self.rows, self.cols, rhs.cols);
        out
    }

    pub fn kron(&self, rhs: &Matrix<R>) -> Matrix<R> {
        let mut out = Matrix::zeros(self.rows * rhs.rows, self.cols * rhs.cols);
        kron_into(&self.data, (self.rows, self.cols), &rhs.data, (rhs.rows, rhs.cols), &mut out.data);
        out
    }

    pub fn dagger(&self) -> Matrix<R> {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn scale(&self, s: Complex<R>) -> Matrix<R> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| *v * s).collect() }
    }

    pub fn add(&self, rhs: &Matrix<R>) -> Matrix<R> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Matrix<R>) -> Matrix<R> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }

    /// Largest element-wise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Matrix<R>) -> R {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(R::zero(), |m, v| if v > m { v } else { m })
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().map(|a| a.norm()).fold(R::zero(), |m, v| if v > m { v } else { m })
    }

    /// `max |U†U - I|`, the unitarity defect.
    pub fn unitarity_error(&self) -> R {
        let prod = self.dagger().matmul(self);
        prod.max_abs_diff(&Matrix::identity(self.cols))
    }

    pub fn has_nan(&self) -> bool {
        self.data.iter().any(|v| v.re.is_nan() || v.im.is_nan())
    }

    pub fn cast<S: RealScalar>(&self) -> Matrix<S> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|v| Complex::new(S::from_f64_lossy(v.re.to_f64_lossy()), S::from_f64_lossy(v.im.to_f64_lossy())))
                .collect(),
        }
    }
}

impl<R: RealScalar> fmt::Display for Matrix<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            write!(f, "[")?;
            for c in 0..self.cols {
                let v = self.get(r, c);
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:+.6}{:+.6}i", v.re, v.im)?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// `out = a · b` for row-major slices of shape `m×k` and `k×n`.
///
/// Each output element accumulates its products in ascending inner-index
/// order starting from zero, the same order symbolic fusion uses.
pub fn matmul_into<R: RealScalar>(a: &[Complex<R>], b: &[Complex<R>], out: &mut [Complex<R>], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    out.iter_mut().for_each(|v| *v = Complex::zero());
    for i in 0..m {
        let out_row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            let b_row = &b[p * n..(p + 1) * n];
            for (o, bv) in out_row.iter_mut().zip(b_row) {
                *o = *o + aip * *bv;
            }
        }
    }
}

/// `out = a ⊗ b`.
pub fn kron_into<R: RealScalar>(
    a: &[Complex<R>],
    (ar, ac): (usize, usize),
    b: &[Complex<R>],
    (br, bc): (usize, usize),
    out: &mut [Complex<R>],
) {
    debug_assert_eq!(out.len(), ar * ac * br * bc);
    let oc = ac * bc;
    for i1 in 0..ar {
        for j1 in 0..ac {
            let av = a[i1 * ac + j1];
            for i2 in 0..br {
                let row = (i1 * br + i2) * oc + j1 * bc;
                for j2 in 0..bc {
                    out[row + j2] = av * b[i2 * bc + j2];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn matmul_small() {
        let a = Matrix::from_vec(2, 2, vec![c(1., 0.), c(2., 0.), c(3., 0.), c(4., 0.)]);
        let b = Matrix::from_vec(2, 2, vec![c(0., 1.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let p = a.matmul(&b);
        assert_eq!(p.data(), &[c(2., 1.), c(1., 0.), c(4., 3.), c(3., 0.)]);
    }

    #[test]
    fn kron_layout() {
        let x = Matrix::from_vec(2, 2, vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let i = Matrix::<f64>::identity(2);
        let k = x.kron(&i);
        // X ⊗ I has identity blocks off the diagonal
        assert_eq!(k.get(0, 2), c(1., 0.));
        assert_eq!(k.get(1, 3), c(1., 0.));
        assert_eq!(k.get(0, 0), c(0., 0.));
        assert_eq!(k.get(2, 0), c(1., 0.));
    }

    #[test]
    fn identity_is_unitary() {
        assert_eq!(Matrix::<f64>::identity(4).unitarity_error(), 0.0);
    }
}
