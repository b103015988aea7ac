//! Midpoint-radius arithmetic over MPFR floats.
//!
//! A [`Ball`] stores a midpoint at working precision and an absolute radius
//! at [`RAD_PREC`] bits. Every operation returns a ball that contains the
//! exact image of every point of its inputs: the midpoint is computed with
//! round-to-nearest and the rounding error (at most one ulp of the result)
//! is folded into the radius, which is itself always rounded upward.

use std::cmp::Ordering;
use std::fmt;

use rug::float::Round;
use rug::Float;

use super::constants::pi;
use crate::error::{Error, Result};

/// Precision of the radius field.
pub const RAD_PREC: u32 = 64;

#[derive(Clone, PartialEq)]
pub struct Ball {
    mid: Float,
    rad: Float,
}

/// Upper bound on the error committed when rounding to `x`.
fn rounding_error(x: &Float, ord: Ordering) -> Float {
    if ord == Ordering::Equal || x.is_zero() {
        return Float::new(RAD_PREC);
    }
    let exp = x.get_exp().expect("finite nonzero float");
    let mut r = Float::with_val(RAD_PREC, 1);
    r <<= exp - x.prec() as i32;
    r
}

pub(crate) fn up<T>(val: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(RAD_PREC, val, Round::Up).0
}

pub(crate) fn down<T>(val: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(RAD_PREC, val, Round::Down).0
}

fn rounded<T>(prec: u32, val: T) -> (Float, Float)
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    let (x, ord) = Float::with_val_round(prec, val, Round::Nearest);
    let err = rounding_error(&x, ord);
    (x, err)
}

fn sum_up(parts: &[&Float]) -> Float {
    let mut acc = Float::new(RAD_PREC);
    for p in parts {
        acc.add_assign_round(*p, Round::Up);
    }
    acc
}

use rug::ops::{AddAssignRound, DivAssignRound, MulAssignRound};

fn mul_up(a: &Float, b: &Float) -> Float {
    let mut r = Float::with_val(RAD_PREC, a);
    r.mul_assign_round(b, Round::Up);
    r
}

impl Ball {
    /// Wraps an exactly known float (radius zero).
    pub fn exact_float(x: Float) -> Self {
        Ball { mid: x, rad: Float::new(RAD_PREC) }
    }

    pub fn from_int(prec: u32, n: i64) -> Self {
        let (mid, err) = rounded(prec, n);
        Ball { mid, rad: err }
    }

    pub fn from_integer(prec: u32, n: &rug::Integer) -> Self {
        let (mid, err) = rounded(prec, n);
        Ball { mid, rad: err }
    }

    pub fn from_f64(prec: u32, x: f64) -> Self {
        let (mid, err) = rounded(prec, x);
        Ball { mid, rad: err }
    }

    /// Ball enclosing `num / den`.
    pub fn from_ratio(prec: u32, num: i64, den: i64) -> Self {
        Ball::from_int(prec, num).div(&Ball::from_int(prec, den)).expect("nonzero denominator")
    }

    /// Parses a decimal literal; the radius covers the conversion error.
    pub fn parse(prec: u32, s: &str) -> Result<Self> {
        let parsed = Float::parse(s.trim()).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
        let (mid, err) = rounded(prec, parsed);
        Ok(Ball { mid, rad: err })
    }

    pub fn with_radius(mid: Float, rad: Float) -> Self {
        assert!(rad >= 0 && rad.is_finite(), "radius must be finite and nonnegative");
        let rad = up(&rad);
        Ball { mid, rad }
    }

    /// Smallest ball (up to rounding) containing `[lo, hi]`.
    pub fn from_endpoints(lo: &Float, hi: &Float) -> Self {
        debug_assert!(lo <= hi);
        let prec = lo.prec().max(hi.prec());
        let (mid, _) = rounded(prec, lo + hi);
        let mut mid = mid;
        mid >>= 1;
        let a = up(&mid - lo);
        let b = up(hi - &mid);
        let rad = if a > b { a } else { b };
        Ball { mid, rad }
    }

    pub fn hull(&self, other: &Ball) -> Ball {
        let lo = if self.lo() < other.lo() { self.lo() } else { other.lo() };
        let hi = if self.hi() > other.hi() { self.hi() } else { other.hi() };
        let prec = self.prec().max(other.prec());
        Ball::from_endpoints(&Float::with_val(prec, &lo), &Float::with_val(prec, &hi))
    }

    /// Intersection of two enclosures of the same quantity.
    pub fn intersect(&self, other: &Ball) -> Option<Ball> {
        let lo = if self.lo() > other.lo() { self.lo() } else { other.lo() };
        let hi = if self.hi() < other.hi() { self.hi() } else { other.hi() };
        if lo > hi {
            return None;
        }
        if self.rad <= other.rad {
            // keep the more precise midpoint when it is already the tighter ball
            if self.rad <= up(&hi - &lo) {
                return Some(self.clone());
            }
        }
        let prec = self.prec().max(other.prec());
        Some(Ball::from_endpoints(&Float::with_val(prec, &lo), &Float::with_val(prec, &hi)))
    }

    pub fn mid(&self) -> &Float {
        &self.mid
    }

    pub fn rad(&self) -> &Float {
        &self.rad
    }

    pub fn prec(&self) -> u32 {
        self.mid.prec()
    }

    /// Lower endpoint, rounded downward at the working precision.
    pub fn lo(&self) -> Float {
        Float::with_val_round(self.prec(), &self.mid - &self.rad, Round::Down).0
    }

    /// Upper endpoint, rounded upward at the working precision.
    pub fn hi(&self) -> Float {
        Float::with_val_round(self.prec(), &self.mid + &self.rad, Round::Up).0
    }

    /// Upper bound on `|x|` over the ball.
    pub fn mag(&self) -> Float {
        let mut m = up(self.mid.abs_ref());
        m.add_assign_round(&self.rad, Round::Up);
        m
    }

    /// Lower bound on `|x|` over the ball (zero if the ball contains zero).
    pub fn mig(&self) -> Float {
        let a = down(self.mid.abs_ref());
        let r = down(&a - &self.rad);
        if r.is_sign_negative() {
            Float::new(RAD_PREC)
        } else {
            r
        }
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    pub fn contains(&self, x: &Float) -> bool {
        self.lo() <= *x && *x <= self.hi()
    }

    pub fn contains_zero(&self) -> bool {
        Float::with_val(self.prec(), self.mid.abs_ref()) <= self.rad
    }

    /// Certified sign: `Some(Greater)` if every point is positive, etc.
    pub fn sign(&self) -> Option<Ordering> {
        if self.lo() > 0 {
            Some(Ordering::Greater)
        } else if self.hi() < 0 {
            Some(Ordering::Less)
        } else if self.mid.is_zero() && self.rad.is_zero() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn is_positive(&self) -> bool {
        self.sign() == Some(Ordering::Greater)
    }

    pub fn is_negative(&self) -> bool {
        self.sign() == Some(Ordering::Less)
    }

    /// `true` if every point of `self` is strictly below every point of `other`.
    pub fn certainly_lt(&self, other: &Ball) -> bool {
        self.hi() < other.lo()
    }

    /// `true` if `self` is contained in `other`.
    pub fn subset_of(&self, other: &Ball) -> bool {
        other.lo() <= self.lo() && self.hi() <= other.hi()
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64()
    }

    /// Midpoint rounded to `prec` bits with the rounding error moved into the radius.
    pub fn set_prec(&self, prec: u32) -> Ball {
        let (mid, err) = rounded(prec, &self.mid);
        Ball { mid, rad: sum_up(&[&self.rad, &err]) }
    }

    /// Midpoint as an exact point ball.
    pub fn center(&self) -> Ball {
        Ball::exact_float(self.mid.clone())
    }

    /// log2 of the radius, or `None` for an exact ball.
    pub fn rad_log2(&self) -> Option<i64> {
        if self.rad.is_zero() {
            None
        } else {
            Some(self.rad.get_exp().expect("finite") as i64 - 1)
        }
    }

    pub fn add(&self, other: &Ball) -> Ball {
        let prec = self.prec().max(other.prec());
        let (mid, err) = rounded(prec, &self.mid + &other.mid);
        Ball { mid, rad: sum_up(&[&self.rad, &other.rad, &err]) }
    }

    pub fn sub(&self, other: &Ball) -> Ball {
        let prec = self.prec().max(other.prec());
        let (mid, err) = rounded(prec, &self.mid - &other.mid);
        Ball { mid, rad: sum_up(&[&self.rad, &other.rad, &err]) }
    }

    pub fn neg(&self) -> Ball {
        Ball { mid: Float::with_val(self.prec(), -&self.mid), rad: self.rad.clone() }
    }

    pub fn mul(&self, other: &Ball) -> Ball {
        let prec = self.prec().max(other.prec());
        let (mid, err) = rounded(prec, &self.mid * &other.mid);
        let a = mul_up(&up(self.mid.abs_ref()), &other.rad);
        let b = mul_up(&up(other.mid.abs_ref()), &self.rad);
        let c = mul_up(&self.rad, &other.rad);
        Ball { mid, rad: sum_up(&[&a, &b, &c, &err]) }
    }

    pub fn mul_i(&self, k: i64) -> Ball {
        let (mid, err) = rounded(self.prec(), &self.mid * k);
        let r = mul_up(&self.rad, &up(k.unsigned_abs()));
        Ball { mid, rad: sum_up(&[&r, &err]) }
    }

    /// Exact scaling by `2^k`.
    pub fn mul_2si(&self, k: i32) -> Ball {
        let mut mid = self.mid.clone();
        let mut rad = self.rad.clone();
        mid <<= k;
        rad <<= k;
        Ball { mid, rad }
    }

    pub fn square(&self) -> Ball {
        self.mul(self)
    }

    pub fn div(&self, other: &Ball) -> Result<Ball> {
        let den_lo = other.mig();
        if den_lo.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let prec = self.prec().max(other.prec());
        let (mid, err) = rounded(prec, &self.mid / &other.mid);
        // |a/b - a0/b0| <= (ra |b0| + |a0| rb) / (|b0| (|b0| - rb))
        let num = sum_up(&[
            &mul_up(&self.rad, &up(other.mid.abs_ref())),
            &mul_up(&up(self.mid.abs_ref()), &other.rad),
        ]);
        let den = down(&down(other.mid.abs_ref()) * &den_lo);
        let mut r = num;
        r.div_assign_round(&den, Round::Up);
        Ok(Ball { mid, rad: sum_up(&[&r, &err]) })
    }

    pub fn recip(&self) -> Result<Ball> {
        Ball::from_int(self.prec(), 1).div(self)
    }

    pub fn sqrt(&self) -> Result<Ball> {
        let lo = self.lo();
        if lo <= 0 {
            return Err(Error::Domain("sqrt of a ball reaching nonpositive values".into()));
        }
        let (mid, err) = rounded(self.prec(), self.mid.sqrt_ref());
        // Lipschitz constant 1 / (2 sqrt(lo))
        let mut s = down(&lo);
        s.sqrt_round(Round::Down);
        let mut l = Float::with_val(RAD_PREC, 1);
        l.div_assign_round(&down(&s * 2u32), Round::Up);
        Ok(Ball { mid, rad: sum_up(&[&mul_up(&l, &self.rad), &err]) })
    }

    pub fn exp(&self) -> Ball {
        let (mid, err) = rounded(self.prec(), self.mid.exp_ref());
        let mut l = up(&self.hi());
        l.exp_round(Round::Up);
        Ball { mid, rad: sum_up(&[&mul_up(&l, &self.rad), &err]) }
    }

    pub fn ln(&self) -> Result<Ball> {
        let lo = self.lo();
        if lo <= 0 {
            return Err(Error::Domain("logarithm of a ball reaching nonpositive values".into()));
        }
        let (mid, err) = rounded(self.prec(), self.mid.ln_ref());
        let mut l = Float::with_val(RAD_PREC, 1);
        l.div_assign_round(&down(&lo), Round::Up);
        Ok(Ball { mid, rad: sum_up(&[&mul_up(&l, &self.rad), &err]) })
    }

    pub fn cos(&self) -> Ball {
        let (mid, err) = rounded(self.prec(), self.mid.cos_ref());
        clamp_unit(Ball { mid, rad: sum_up(&[&self.rad, &err]) })
    }

    pub fn sin(&self) -> Ball {
        let (mid, err) = rounded(self.prec(), self.mid.sin_ref());
        clamp_unit(Ball { mid, rad: sum_up(&[&self.rad, &err]) })
    }

    pub fn sin_cos(&self) -> (Ball, Ball) {
        let prec = self.prec();
        let mut s = Float::with_val(prec, &self.mid);
        let mut c = Float::new(prec);
        let (os, oc) = s.sin_cos_round(&mut c, Round::Nearest);
        let es = rounding_error(&s, os);
        let ec = rounding_error(&c, oc);
        (
            clamp_unit(Ball { mid: s, rad: sum_up(&[&self.rad, &es]) }),
            clamp_unit(Ball { mid: c, rad: sum_up(&[&self.rad, &ec]) }),
        )
    }

    /// `cos(pi x)`, reducing the argument modulo 2 before multiplying by pi.
    pub fn cospi(&self) -> Ball {
        self.sincospi().1
    }

    /// `sin(pi x)`.
    pub fn sinpi(&self) -> Ball {
        self.sincospi().0
    }

    /// `(sin(pi x), cos(pi x))`.
    pub fn sincospi(&self) -> (Ball, Ball) {
        let prec = self.prec();
        if self.rad >= 1 {
            return (unit_ball(prec), unit_ball(prec));
        }
        let r = reduce_mod2_symmetric(&self.mid);
        if self.is_exact() {
            if let Some(sc) = exact_sincospi(&r) {
                return sc;
            }
        }
        let pi_ball = Ball::pi(prec);
        let arg = Ball::exact_float(r).mul(&pi_ball);
        let extra = mul_up(&self.rad, &up(&pi_ball.hi()));
        let arg = Ball { rad: sum_up(&[&arg.rad, &extra]), mid: arg.mid };
        arg.sin_cos()
    }

    pub fn pi(prec: u32) -> Ball {
        let p = pi(prec);
        let mut rad = Float::with_val(RAD_PREC, 1);
        rad <<= 2 - prec as i32;
        Ball { mid: (*p).clone(), rad }
    }

    /// Power with a nonnegative integer exponent by repeated squaring.
    pub fn powi(&self, mut e: u32) -> Ball {
        let mut base = self.clone();
        let mut acc = Ball::from_int(self.prec(), 1);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.square();
            e >>= 1;
        }
        acc
    }

    /// Decimal rendering of the midpoint with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        self.mid.to_string_radix(10, Some(digits))
    }
}

fn unit_ball(prec: u32) -> Ball {
    Ball { mid: Float::new(prec), rad: Float::with_val(RAD_PREC, 1) }
}

fn clamp_unit(b: Ball) -> Ball {
    if b.rad >= 1 {
        unit_ball(b.prec())
    } else {
        b
    }
}

/// `x - 2 round(x / 2)`, exact for every finite float, in `[-1, 1]`.
pub(crate) fn reduce_mod2_symmetric(x: &Float) -> Float {
    let prec = x.prec();
    let mut k = Float::with_val(prec, x);
    k >>= 1;
    k.round_mut();
    k <<= 1;
    Float::with_val(prec, x - &k)
}

fn exact_sincospi(r: &Float) -> Option<(Ball, Ball)> {
    let prec = r.prec();
    let quarter_turns = Float::with_val(prec, r * 2u32);
    if !quarter_turns.is_integer() {
        return None;
    }
    let q = quarter_turns.to_i32_saturating().unwrap_or(0).rem_euclid(4);
    let (s, c) = match q {
        0 => (0, 1),
        1 => (1, 0),
        2 => (0, -1),
        _ => (-1, 0),
    };
    Some((Ball::from_int(prec, s), Ball::from_int(prec, c)))
}

impl fmt::Debug for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} +/- {:.3e}]", self.mid.to_string_radix(10, Some(20)), self.rad.to_f64())
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        write!(f, "{} +/- {:.2e}", self.to_decimal(digits), self.rad.to_f64())
    }
}

impl std::ops::Add for &Ball {
    type Output = Ball;
    fn add(self, rhs: &Ball) -> Ball {
        Ball::add(self, rhs)
    }
}

impl std::ops::Sub for &Ball {
    type Output = Ball;
    fn sub(self, rhs: &Ball) -> Ball {
        Ball::sub(self, rhs)
    }
}

impl std::ops::Mul for &Ball {
    type Output = Ball;
    fn mul(self, rhs: &Ball) -> Ball {
        Ball::mul(self, rhs)
    }
}

impl std::ops::Neg for &Ball {
    type Output = Ball;
    fn neg(self) -> Ball {
        Ball::neg(self)
    }
}
