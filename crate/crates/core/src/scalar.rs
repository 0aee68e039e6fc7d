//! Coefficient fields for monomial densities.
//!
//! Two fields are supported: exact Gaussian rationals (`ExactComplex`) and
//! double-precision complex numbers. A density is generic over its field, so
//! the representation mode is fixed by the type and cannot silently degrade.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{DbarError, Result};

/// Gaussian rational `a + bi` with `a, b` exact rationals.
pub type ExactComplex = Complex<BigRational>;

pub trait Scalar:
    Clone
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
    + 'static
{
    const EXACT: bool;

    /// The real rational `num / den`.
    fn ratio(num: i64, den: i64) -> Self;

    fn conj(&self) -> Self;

    fn to_c64(&self) -> Result<Complex64>;

    /// Lossless for `Complex64`; exact modes accept only values that are
    /// representable, which every finite double is.
    fn from_c64(z: Complex64) -> Result<Self>;

    fn mode_name() -> &'static str {
        if Self::EXACT {
            "exact"
        } else {
            "float"
        }
    }

    /// Magnitude as a double, used for residual reporting.
    fn norm_f64(&self) -> Result<f64> {
        Ok(self.to_c64()?.norm())
    }
}

impl Scalar for Complex64 {
    const EXACT: bool = false;

    fn ratio(num: i64, den: i64) -> Self {
        Complex64::new(num as f64 / den as f64, 0.0)
    }

    fn conj(&self) -> Self {
        Complex::conj(self)
    }

    fn to_c64(&self) -> Result<Complex64> {
        Ok(*self)
    }

    fn from_c64(z: Complex64) -> Result<Self> {
        Ok(z)
    }
}

fn rational_to_f64(q: &BigRational) -> Result<f64> {
    let v = q
        .to_f64()
        .filter(|v| v.is_finite())
        .ok_or_else(|| DbarError::ArithmeticOverflow(format!("rational {q} has no finite f64 value")))?;
    Ok(v)
}

fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x)
        .ok_or_else(|| DbarError::ArithmeticOverflow(format!("{x} is not a finite rational")))
}

impl Scalar for ExactComplex {
    const EXACT: bool = true;

    fn ratio(num: i64, den: i64) -> Self {
        Complex::new(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            BigRational::zero(),
        )
    }

    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }

    fn to_c64(&self) -> Result<Complex64> {
        Ok(Complex64::new(rational_to_f64(&self.re)?, rational_to_f64(&self.im)?))
    }

    fn from_c64(z: Complex64) -> Result<Self> {
        Ok(Complex::new(rational_from_f64(z.re)?, rational_from_f64(z.im)?))
    }

    fn norm_f64(&self) -> Result<f64> {
        // Exact zero must report exactly zero.
        if self.is_zero() {
            return Ok(0.0);
        }
        let re = rational_to_f64(&self.re.abs())?;
        let im = rational_to_f64(&self.im.abs())?;
        Ok(re.hypot(im))
    }
}

/// Exact Gaussian rational `(re_num + i im_num) / den`.
pub fn gauss(re_num: i64, im_num: i64, den: i64) -> ExactComplex {
    Complex::new(
        BigRational::new(BigInt::from(re_num), BigInt::from(den)),
        BigRational::new(BigInt::from(im_num), BigInt::from(den)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_roundtrip_through_f64() {
        let z = gauss(3, -5, 1024);
        let back = ExactComplex::from_c64(z.to_c64().unwrap()).unwrap();
        assert_eq!(z, back);
    }

    #[test]
    fn huge_rational_reports_overflow() {
        let big = BigInt::from(10).pow(400);
        let z = Complex::new(BigRational::from_integer(big), BigRational::zero());
        assert!(matches!(z.to_c64(), Err(DbarError::ArithmeticOverflow(_))));
    }

    #[test]
    fn exact_zero_has_zero_norm() {
        assert_eq!(ExactComplex::zero().norm_f64().unwrap(), 0.0);
        assert_eq!(<ExactComplex as Scalar>::mode_name(), "exact");
        assert_eq!(<Complex64 as Scalar>::mode_name(), "float");
    }
}
