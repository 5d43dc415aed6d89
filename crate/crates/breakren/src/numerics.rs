//! Extended-precision reals and circle arithmetic.
//!
//! [`Real`] is a thin value type over an MPFR float. Every value carries its
//! own precision; binary operations round to the larger of the two operand
//! precisions, so a computation never silently drops below the precision of
//! its inputs.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

use crate::error::{domain, validation, Result};

/// A real number at an explicit binary precision.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Real(Float);

impl Real {
    pub fn from_f64(bits: u32, v: f64) -> Real {
        Real(Float::with_val(bits, v))
    }

    pub fn from_i64(bits: u32, v: i64) -> Real {
        Real(Float::with_val(bits, v))
    }

    /// Parses a decimal string, correctly rounded to `bits`.
    pub fn parse(bits: u32, s: &str) -> Result<Real> {
        let p = Float::parse(s.trim()).map_err(|e| validation(format!("bad number {s:?}: {e}")))?;
        Ok(Real(Float::with_val(bits, p)))
    }

    pub fn zero(bits: u32) -> Real {
        Real(Float::new(bits))
    }

    pub fn one(bits: u32) -> Real {
        Real::from_i64(bits, 1)
    }

    pub fn pi(bits: u32) -> Real {
        Real(Float::with_val(bits, Constant::Pi))
    }

    pub fn prec(&self) -> u32 {
        self.0.prec()
    }

    /// Same value rounded to `bits` (exact when `bits` grows).
    pub fn with_prec(&self, bits: u32) -> Real {
        Real(Float::with_val(bits, &self.0))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// -1, 0 or 1. NaN maps to 0.
    pub fn signum_i(&self) -> i32 {
        match self.0.cmp0() {
            Some(Ordering::Less) => -1,
            Some(Ordering::Greater) => 1,
            _ => 0,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum_i() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.signum_i() < 0
    }

    pub fn abs(&self) -> Real {
        Real(Float::with_val(self.prec(), self.0.abs_ref()))
    }

    pub fn floor(&self) -> Real {
        Real(Float::with_val(self.prec(), self.0.floor_ref()))
    }

    pub fn ln(&self) -> Real {
        Real(Float::with_val(self.prec(), self.0.ln_ref()))
    }

    pub fn exp(&self) -> Real {
        Real(Float::with_val(self.prec(), self.0.exp_ref()))
    }

    pub fn sqrt(&self) -> Real {
        Real(Float::with_val(self.prec(), self.0.sqrt_ref()))
    }

    pub fn sin(&self) -> Real {
        Real(Float::with_val(self.prec(), self.0.sin_ref()))
    }

    pub fn cos(&self) -> Real {
        Real(Float::with_val(self.prec(), self.0.cos_ref()))
    }

    pub fn recip(&self) -> Real {
        Real(Float::with_val(self.prec(), self.0.recip_ref()))
    }

    pub fn square(&self) -> Real {
        Real(Float::with_val(self.prec(), self.0.square_ref()))
    }

    pub fn powr(&self, e: &Real) -> Real {
        let p = self.prec().max(e.prec());
        Real(Float::with_val(p, (&self.0).pow(&e.0)))
    }

    pub fn powf(&self, e: f64) -> Real {
        Real(Float::with_val(self.prec(), (&self.0).pow(e)))
    }

    pub fn max(&self, o: &Real) -> Real {
        if o > self {
            o.clone()
        } else {
            self.clone()
        }
    }

    pub fn min(&self, o: &Real) -> Real {
        if o < self {
            o.clone()
        } else {
            self.clone()
        }
    }

    /// Integer value of a number that is already integral and small.
    pub fn to_i64_exact(&self) -> Option<i64> {
        if !self.0.is_integer() {
            return None;
        }
        let v = self.0.to_f64();
        (v.abs() < 9.0e15).then_some(v as i64)
    }

    /// Base-2 exponent `e` with `2^(e-1) <= |x| < 2^e`; `None` for zero.
    pub fn exponent(&self) -> Option<i32> {
        self.0.get_exp()
    }

    /// Decimal string carrying every significant bit.
    pub fn to_decimal(&self) -> String {
        let digits = (self.prec() as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2;
        if self.0.is_zero() {
            return "0".to_string();
        }
        format!("{:.*e}", digits.saturating_sub(1), self.0)
    }

    pub fn inner(&self) -> &Float {
        &self.0
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.0.to_f64())
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal())
    }
}

impl PartialEq<f64> for Real {
    fn eq(&self, o: &f64) -> bool {
        self.0 == *o
    }
}

impl PartialOrd<f64> for Real {
    fn partial_cmp(&self, o: &f64) -> Option<Ordering> {
        self.0.partial_cmp(o)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $atr:ident, $am:ident) => {
        impl $tr<&Real> for &Real {
            type Output = Real;
            fn $m(self, o: &Real) -> Real {
                let p = self.prec().max(o.prec());
                Real(Float::with_val(p, (&self.0).$m(&o.0)))
            }
        }
        impl $tr<Real> for Real {
            type Output = Real;
            fn $m(self, o: Real) -> Real {
                (&self).$m(&o)
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $m(self, o: &Real) -> Real {
                (&self).$m(o)
            }
        }
        impl $tr<Real> for &Real {
            type Output = Real;
            fn $m(self, o: Real) -> Real {
                self.$m(&o)
            }
        }
        impl $tr<f64> for &Real {
            type Output = Real;
            fn $m(self, o: f64) -> Real {
                Real(Float::with_val(self.prec(), (&self.0).$m(o)))
            }
        }
        impl $tr<f64> for Real {
            type Output = Real;
            fn $m(self, o: f64) -> Real {
                (&self).$m(o)
            }
        }
        impl $tr<i64> for &Real {
            type Output = Real;
            fn $m(self, o: i64) -> Real {
                Real(Float::with_val(self.prec(), (&self.0).$m(o)))
            }
        }
        impl $tr<i64> for Real {
            type Output = Real;
            fn $m(self, o: i64) -> Real {
                (&self).$m(o)
            }
        }
        impl $tr<&Real> for f64 {
            type Output = Real;
            fn $m(self, o: &Real) -> Real {
                Real(Float::with_val(o.prec(), self.$m(&o.0)))
            }
        }
        impl $tr<Real> for f64 {
            type Output = Real;
            fn $m(self, o: Real) -> Real {
                self.$m(&o)
            }
        }
        impl $tr<&Real> for i64 {
            type Output = Real;
            fn $m(self, o: &Real) -> Real {
                Real(Float::with_val(o.prec(), self.$m(&o.0)))
            }
        }
        impl $tr<Real> for i64 {
            type Output = Real;
            fn $m(self, o: Real) -> Real {
                self.$m(&o)
            }
        }
        impl $atr<&Real> for Real {
            fn $am(&mut self, o: &Real) {
                self.0.$am(&o.0);
            }
        }
        impl $atr<Real> for Real {
            fn $am(&mut self, o: Real) {
                self.0.$am(o.0);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign);
binop!(Sub, sub, SubAssign, sub_assign);
binop!(Mul, mul, MulAssign, mul_assign);
binop!(Div, div, DivAssign, div_assign);

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(Float::with_val(self.prec(), -&self.0))
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(-self.0)
    }
}

/// Working precision as a function of renormalization level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecisionPolicy {
    pub base_bits: u32,
    pub per_level_bits: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { base_bits: 128, per_level_bits: 16 }
    }
}

impl PrecisionPolicy {
    pub fn new(base_bits: u32, per_level_bits: u32) -> Result<Self> {
        if base_bits < 53 {
            return Err(validation(format!("base_bits must be >= 53, got {base_bits}")));
        }
        Ok(PrecisionPolicy { base_bits, per_level_bits })
    }

    pub fn bits(&self, n: usize) -> u32 {
        self.base_bits + self.per_level_bits * n as u32
    }
}

/// `x - floor(x)`, in `[0, 1)`.
pub fn wrap_unit(x: &Real) -> Result<Real> {
    if !x.is_finite() {
        return Err(domain("wrap_unit of a non-finite value"));
    }
    let w = x - &x.floor();
    // floor rounding can leave exactly 1 for tiny negative inputs
    if w >= 1.0 {
        Ok(Real::zero(x.prec()))
    } else {
        Ok(w)
    }
}

/// `sum log(factor_j)`; the product itself may under- or overflow.
pub fn log_sum_derivative(factors: &[Real]) -> Result<Real> {
    let bits = factors.iter().map(Real::prec).max().unwrap_or(53);
    let mut acc = Real::zero(bits);
    for (j, f) in factors.iter().enumerate() {
        if !f.is_positive() || !f.is_finite() {
            return Err(domain(format!("factor {j} is not a positive finite number")));
        }
        acc += f.ln();
    }
    Ok(acc)
}

/// A point on the circle stored as a winding count plus a fractional part.
///
/// Lifts of long orbits grow linearly; keeping the integer part separate
/// keeps every bit of the fractional part.
#[derive(Clone, Debug, PartialEq)]
pub struct CirclePoint {
    pub wind: i64,
    pub frac: Real,
}

impl CirclePoint {
    pub fn origin(bits: u32) -> CirclePoint {
        CirclePoint { wind: 0, frac: Real::zero(bits) }
    }

    pub fn from_lift(x: &Real) -> Result<CirclePoint> {
        if !x.is_finite() {
            return Err(domain("non-finite lift"));
        }
        let fl = x.floor();
        let mut wind = fl.to_i64_exact().ok_or_else(|| domain("lift out of range"))?;
        let mut frac = x - &fl;
        if frac >= 1.0 {
            wind += 1;
            frac = Real::zero(x.prec());
        }
        Ok(CirclePoint { wind, frac })
    }

    pub fn lift(&self) -> Real {
        &self.frac + self.wind
    }

    /// `lift - k` without forming the large intermediate.
    pub fn offset(&self, k: i64) -> Real {
        &self.frac + (self.wind - k)
    }

    pub fn shifted(&self, k: i64) -> CirclePoint {
        CirclePoint { wind: self.wind + k, frac: self.frac.clone() }
    }

    pub fn is_break(&self) -> bool {
        self.frac.is_zero()
    }

    /// Lift difference `self − other`, rounded once at `bits`.
    pub fn minus(&self, other: &CirclePoint, bits: u32) -> Real {
        let f = self.frac.with_prec(bits) - &other.frac;
        let w = self.wind - other.wind;
        if w == 0 {
            f
        } else {
            Real(Float::with_val(bits, &f.0 + w))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: f64) -> Real {
        Real::from_f64(128, v)
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_unit(&r(1.25)).unwrap(), 0.25);
        assert_eq!(wrap_unit(&r(-0.25)).unwrap(), 0.75);
        assert_eq!(wrap_unit(&r(0.0)).unwrap(), 0.0);
        let nan = Real(Float::with_val(64, rug::float::Special::Nan));
        assert!(wrap_unit(&nan).is_err());
    }

    #[test]
    fn log_sum_examples() {
        assert!(log_sum_derivative(&[r(1.0), r(1.0), r(1.0)]).unwrap().is_zero());
        let e = r(1.0).exp();
        let two = log_sum_derivative(&[e.clone(), e]).unwrap();
        assert!((two - 2.0).abs() < 1e-35);
        assert!(log_sum_derivative(&[r(2.0), r(0.5)]).unwrap().abs() < 1e-36);
        assert!(log_sum_derivative(&[r(2.0), r(0.0)]).is_err());
    }

    #[test]
    fn precision_mixing_keeps_the_larger() {
        let a = Real::from_f64(64, 1.0);
        let b = Real::from_f64(256, 3.0);
        assert_eq!((&a / &b).prec(), 256);
        assert_eq!((&a * 2.0).prec(), 64);
    }

    #[test]
    fn policy() {
        let p = PrecisionPolicy::default();
        assert_eq!(p.bits(0), 128);
        assert_eq!(p.bits(14), 352);
        assert!(PrecisionPolicy::new(52, 0).is_err());
    }

    #[test]
    fn circle_point_offsets_are_exact() {
        let x = Real::parse(200, "-0.001").unwrap();
        let p = CirclePoint::from_lift(&x).unwrap();
        assert_eq!(p.wind, -1);
        let back = p.shifted(5).offset(5);
        assert!((back - &x).abs() < 1e-58);
    }

    #[test]
    fn decimal_round_trip() {
        let third = Real::one(200) / 3.0;
        let s = third.to_decimal();
        let back = Real::parse(200, &s).unwrap();
        assert_eq!(back, third);
    }
}
