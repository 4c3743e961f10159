//! Floating-point precision abstraction.
//!
//! Kernels, buffers and the virtual machine are generic over the real
//! scalar so the same compiled program can run at 32 or 64 bits.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating-point type usable for numeric evaluation.
pub trait RealScalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Width in bits, reported in benchmarks and dumps.
    const BITS: u32;

    fn from_f64_lossy(v: f64) -> Self;

    fn to_f64_lossy(self) -> f64;
}

impl RealScalar for f32 {
    const BITS: u32 = 32;

    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl RealScalar for f64 {
    const BITS: u32 = 64;

    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        v
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

/// Complex number over a [`RealScalar`].
pub type ComplexScalar<R> = Complex<R>;

pub type C32 = Complex<f32>;
pub type C64 = Complex<f64>;

/// Numeric precision selector used where the scalar type is chosen at runtime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    pub fn bits(self) -> u32 {
        match self {
            Precision::Single => 32,
            Precision::Double => 64,
        }
    }

    pub fn from_bits(bits: u32) -> Option<Self> {
        match bits {
            32 => Some(Precision::Single),
            64 => Some(Precision::Double),
            _ => None,
        }
    }
}
