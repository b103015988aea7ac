use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::Float;

use super::ball::Ball;
use super::precision::MIN_BITS;
use crate::error::Result;

/// A real number carried at a fixed binary precision.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct BigReal(Float);

impl BigReal {
    pub fn new(x: Float) -> Self {
        assert!(x.prec() >= MIN_BITS, "precision below {MIN_BITS} bits");
        BigReal(x)
    }

    pub fn from_f64(prec: u32, x: f64) -> Self {
        BigReal::new(Float::with_val(prec.max(MIN_BITS), x))
    }

    pub fn from_i64(prec: u32, x: i64) -> Self {
        BigReal::new(Float::with_val(prec.max(MIN_BITS), x))
    }

    /// Parses a decimal literal, rounding to nearest.
    pub fn parse(prec: u32, s: &str) -> Result<Self> {
        Ok(BigReal(Ball::parse(prec.max(MIN_BITS), s)?.mid().clone()))
    }

    pub fn precision_bits(&self) -> u32 {
        self.0.prec()
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    /// Exact point ball at the same precision.
    pub fn to_ball(&self) -> Ball {
        Ball::exact_float(self.0.clone())
    }

    pub fn to_decimal(&self, digits: usize) -> String {
        self.0.to_string_radix(10, Some(digits))
    }

    pub fn abs(&self) -> BigReal {
        BigReal(self.0.clone().abs())
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(f.precision().unwrap_or(20)))
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr for &BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &BigReal) -> BigReal {
                let prec = self.0.prec().max(rhs.0.prec());
                BigReal(Float::with_val(prec, &self.0 $op &rhs.0))
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for &BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal(Float::with_val(self.0.prec(), -&self.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_keeps_widest_precision() {
        let a = BigReal::from_f64(64, 1.5);
        let b = BigReal::from_f64(200, 2.0);
        let c = &a * &b;
        assert_eq!(c.precision_bits(), 200);
        assert_eq!(c.to_f64(), 3.0);
        assert_eq!((&c - &a).to_f64(), 1.5);
        assert_eq!((&c / &b).to_f64(), 1.5);
        assert_eq!((-&a).to_f64(), -1.5);
    }

    #[test]
    #[should_panic]
    fn rejects_low_precision() {
        BigReal::new(Float::with_val(32, 1));
    }
}
