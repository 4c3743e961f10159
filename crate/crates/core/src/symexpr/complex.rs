use std::collections::HashMap;
use std::fmt;

use super::scalar::ScalarExpr;
use super::SymError;

/// A complex expression held as separate real and imaginary parts.
///
/// Arithmetic mirrors the textbook formulas used by `num_complex`, so a
/// composed expression evaluates with the same floating-point operations as
/// the numeric product of its parts.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ComplexExpr {
    pub re: ScalarExpr,
    pub im: ScalarExpr,
}

impl ComplexExpr {
    pub fn new(re: ScalarExpr, im: ScalarExpr) -> Self {
        ComplexExpr { re, im }
    }

    pub fn real(re: ScalarExpr) -> Self {
        ComplexExpr { re, im: ScalarExpr::zero() }
    }

    pub fn zero() -> Self {
        Self::real(ScalarExpr::zero())
    }

    pub fn one() -> Self {
        Self::real(ScalarExpr::one())
    }

    pub fn i() -> Self {
        ComplexExpr { re: ScalarExpr::zero(), im: ScalarExpr::one() }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn neg(&self) -> Self {
        ComplexExpr { re: self.re.neg(), im: self.im.neg() }
    }

    pub fn conj(&self) -> Self {
        ComplexExpr { re: self.re.clone(), im: self.im.neg() }
    }

    pub fn add(&self, rhs: &ComplexExpr) -> Self {
        ComplexExpr { re: self.re.add(&rhs.re), im: self.im.add(&rhs.im) }
    }

    pub fn sub(&self, rhs: &ComplexExpr) -> Self {
        ComplexExpr { re: self.re.sub(&rhs.re), im: self.im.sub(&rhs.im) }
    }

    pub fn mul(&self, rhs: &ComplexExpr) -> Self {
        let re = self.re.mul(&rhs.re).sub(&self.im.mul(&rhs.im));
        let im = self.re.mul(&rhs.im).add(&self.im.mul(&rhs.re));
        ComplexExpr { re, im }
    }

    pub fn scale(&self, s: &ScalarExpr) -> Self {
        ComplexExpr { re: self.re.mul(s), im: self.im.mul(s) }
    }

    pub fn div(&self, rhs: &ComplexExpr) -> Self {
        if rhs.is_real() {
            return ComplexExpr { re: self.re.div(&rhs.re), im: self.im.div(&rhs.re) };
        }
        let num = self.mul(&rhs.conj());
        let den = rhs.re.mul(&rhs.re).add(&rhs.im.mul(&rhs.im));
        ComplexExpr { re: num.re.div(&den), im: num.im.div(&den) }
    }

    /// `e^self`, as `e^re (cos im + i sin im)`.
    pub fn exp(&self) -> Self {
        if self.im.is_zero() {
            return Self::real(self.re.exp());
        }
        if self.re.is_zero() {
            return ComplexExpr { re: self.im.cos(), im: self.im.sin() };
        }
        let m = self.re.exp();
        ComplexExpr { re: m.mul(&self.im.cos()), im: m.mul(&self.im.sin()) }
    }

    /// Integer power by repeated multiplication.
    pub fn powi(&self, k: i64) -> Self {
        let mut acc = ComplexExpr::one();
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul(self);
        }
        if k < 0 {
            ComplexExpr::one().div(&acc)
        } else {
            acc
        }
    }

    /// General power.
    ///
    /// Constant integer exponents expand to products. A real base with a
    /// non-integer exponent becomes `x^y` (constant `y`) or `exp(y ln x)`.
    /// A non-real base needs an integer exponent.
    pub fn pow(&self, rhs: &ComplexExpr) -> Result<Self, SymError> {
        if rhs.is_real() {
            if let Some(c) = rhs.re.as_const() {
                if c.is_integer() && self.is_real() {
                    return Ok(Self::real(self.re.pow(&rhs.re)));
                }
                if c.is_integer() {
                    let k = i64::try_from(*c.numer())
                        .map_err(|_| SymError::Unsupported("exponent out of range".into()))?;
                    return Ok(self.powi(k));
                }
            }
        }
        if !self.is_real() {
            return Err(SymError::Unsupported("complex base raised to a non-integer power".into()));
        }
        if rhs.is_real() {
            if rhs.re.as_const().is_some() {
                return Ok(Self::real(self.re.pow(&rhs.re)));
            }
            return Ok(Self::real(rhs.re.mul(&self.re.ln()).exp()));
        }
        Ok(rhs.scale(&self.re.ln()).exp())
    }

    pub fn substitute(&self, map: &HashMap<String, ScalarExpr>) -> Self {
        ComplexExpr { re: self.re.substitute(map), im: self.im.substitute(map) }
    }

    pub fn map(&self, mut f: impl FnMut(&ScalarExpr) -> ScalarExpr) -> Self {
        ComplexExpr { re: f(&self.re), im: f(&self.im) }
    }
}

impl fmt::Display for ComplexExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", self.re);
        }
        if self.re.is_zero() {
            return write!(f, "i*({})", self.im);
        }
        write!(f, "{} + i*({})", self.re, self.im)
    }
}

impl fmt::Debug for ComplexExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
