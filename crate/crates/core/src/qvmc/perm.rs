use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::RealScalar;

/// A fused reshape-permute-reshape: view an `in_shape` matrix as a tensor
/// with axes `dims`, permute the axes so that output axis `i` is input axis
/// `perm[i]`, and read the result back as an `out_shape` matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PermSpec {
    pub in_shape: (usize, usize),
    pub dims: Vec<usize>,
    pub perm: Vec<usize>,
    pub out_shape: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PermError {
    #[error("permutation {0:?} is not a bijection")]
    NotBijection(Vec<usize>),
    #[error("shape {shape:?} does not hold {elements} elements")]
    Shape { shape: (usize, usize), elements: usize },
    #[error("buffer of {found} elements, expected {expected}")]
    Buffer { expected: usize, found: usize },
}

impl PermSpec {
    pub fn new(
        in_shape: (usize, usize),
        dims: Vec<usize>,
        perm: Vec<usize>,
        out_shape: (usize, usize),
    ) -> Result<Self, PermError> {
        let s = PermSpec { in_shape, dims, perm, out_shape };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), PermError> {
        let mut seen = vec![false; self.perm.len()];
        if self.perm.len() != self.dims.len() {
            return Err(PermError::NotBijection(self.perm.clone()));
        }
        for &p in &self.perm {
            if p >= seen.len() || std::mem::replace(&mut seen[p], true) {
                return Err(PermError::NotBijection(self.perm.clone()));
            }
        }
        let n = self.len();
        for shape in [self.in_shape, self.out_shape] {
            if shape.0 * shape.1 != n {
                return Err(PermError::Shape { shape, elements: n });
            }
        }
        Ok(())
    }

    /// Number of elements moved.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether the permutation leaves memory order unchanged, making this a
    /// pure reshape.
    pub fn is_identity(&self) -> bool {
        // Axes of extent one can move freely without changing the layout.
        let moved: Vec<usize> = self.perm.iter().copied().filter(|&p| self.dims[p] != 1).collect();
        moved.windows(2).all(|w| w[0] < w[1])
    }

    /// Axis extents after permuting.
    pub fn out_dims(&self) -> Vec<usize> {
        self.perm.iter().map(|&p| self.dims[p]).collect()
    }

    /// `self` followed by `next`, as a single spec.
    pub fn then(&self, next: &PermSpec) -> PermSpec {
        assert_eq!(self.out_dims(), next.dims, "specs do not chain");
        PermSpec {
            in_shape: self.in_shape,
            dims: self.dims.clone(),
            perm: next.perm.iter().map(|&i| self.perm[i]).collect(),
            out_shape: next.out_shape,
        }
    }

    /// Permute `src` into `dst`.
    pub fn apply<R: RealScalar>(&self, src: &[Complex<R>], dst: &mut [Complex<R>]) -> Result<(), PermError> {
        let n = self.len();
        for len in [src.len(), dst.len()] {
            if len != n {
                return Err(PermError::Buffer { expected: n, found: len });
            }
        }
        self.apply_unchecked(src, dst);
        Ok(())
    }

    pub(crate) fn apply_unchecked<R: RealScalar>(&self, src: &[Complex<R>], dst: &mut [Complex<R>]) {
        let k = self.dims.len();
        if k == 0 {
            dst.copy_from_slice(src);
            return;
        }
        let mut in_strides = vec![1; k];
        for a in (0..k - 1).rev() {
            in_strides[a] = in_strides[a + 1] * self.dims[a + 1];
        }
        let od = self.out_dims();
        let os: Vec<usize> = self.perm.iter().map(|&p| in_strides[p]).collect();
        // Innermost output axis is copied with a strided loop.
        let inner = od[k - 1];
        let inner_stride = os[k - 1];
        let mut idx = vec![0; k - 1];
        let mut offset = 0;
        let mut out = 0;
        loop {
            let mut o = offset;
            for d in &mut dst[out..out + inner] {
                *d = src[o];
                o += inner_stride;
            }
            out += inner;
            // Advance the outer axes like an odometer.
            let mut a = k - 1;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                idx[a] += 1;
                offset += os[a];
                if idx[a] < od[a] {
                    break;
                }
                offset -= os[a] * od[a];
                idx[a] = 0;
            }
        }
    }
}
