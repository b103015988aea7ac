//! Certified critical points `c_n` of `f` near each nonzero integer, the fixed
//! points of `f`, and the repulsive period-two point near 1.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{escalate_until_certified, pi, Attempt, Ball, PrecisionPolicy};
use crate::maps::{f, f_iter, f_prime, f_second};

/// Bits of radius matching `digits` decimal digits.
pub fn digits_to_bits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32
}

pub(crate) enum RootOutcome {
    Root(Ball),
    Retry,
    NoSignChange,
}

fn exact(x: &Float) -> Ball {
    Ball::exact_float(x.clone())
}

fn midpoint(a: &Float, b: &Float, prec: u32) -> Float {
    let mut m = Float::with_val(prec, a + b);
    m >>= 1;
    m
}

/// Encloses the unique simple root of `g` in `(lo, hi)` to radius
/// `2^-target_bits`: a few bisection steps, then Newton with the bracket
/// kept as a safeguard, then a ball check of both end signs and of `dg` on
/// the final interval.
pub(crate) fn refine_root(
    g: &dyn Fn(&Ball) -> Ball,
    dg: &dyn Fn(&Ball) -> Ball,
    lo: &Float,
    hi: &Float,
    target_bits: u32,
    prec: u32,
) -> RootOutcome {
    let mut a = Float::with_val(prec, lo);
    let mut b = Float::with_val(prec, hi);
    let (sa, sb) = match (g(&exact(&a)).sign(), g(&exact(&b)).sign()) {
        (Some(x), Some(y)) => (x, y),
        _ => return RootOutcome::Retry,
    };
    if sa == sb || sa == Ordering::Equal || sb == Ordering::Equal {
        return RootOutcome::NoSignChange;
    }
    for _ in 0..10 {
        let m = midpoint(&a, &b, prec);
        match g(&exact(&m)).sign() {
            Some(s) if s == sa => a = m,
            Some(_) => b = m,
            None => break,
        }
    }
    let tol = Float::with_val(prec, Float::i_exp(1, -(target_bits as i32) - 4));
    let mut x = midpoint(&a, &b, prec);
    for _ in 0..4 * prec {
        let gx = g(&exact(&x));
        match gx.sign() {
            Some(s) if s == sa => a = x.clone(),
            Some(s) if s == sb => b = x.clone(),
            _ => {}
        }
        let slope = dg(&exact(&x));
        let step = Float::with_val(prec, gx.mid() / slope.mid());
        let next = Float::with_val(prec, &x - &step);
        let small = Float::with_val(prec, step.abs_ref()) < tol;
        x = if next > a && next < b && step.is_finite() { next } else { midpoint(&a, &b, prec) };
        if small || Float::with_val(prec, &b - &a) < tol {
            break;
        }
    }
    let delta = Float::with_val(prec, Float::i_exp(1, -(target_bits as i32) - 1));
    let mut l = Float::with_val(prec, &x - &delta);
    let mut r = Float::with_val(prec, &x + &delta);
    if l < *lo {
        l = Float::with_val(prec, lo);
    }
    if r > *hi {
        r = Float::with_val(prec, hi);
    }
    if g(&exact(&l)).sign() != Some(sa) || g(&exact(&r)).sign() != Some(sb) {
        return RootOutcome::Retry;
    }
    let enclosure = Ball::from_endpoints(&l, &r);
    if dg(&enclosure).contains_zero() {
        return RootOutcome::Retry;
    }
    RootOutcome::Root(enclosure)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Extremum {
    Maximum,
    Minimum,
}

#[derive(Clone, Debug)]
pub struct CriticalPoint {
    pub n: i64,
    pub enclosure: Ball,
    pub kind: Extremum,
    /// Working precision that certified the enclosure.
    pub bits: u32,
    /// `true` for negative indices, whose bracket comes from our own sign
    /// analysis rather than a known bound.
    pub derived_bracket: bool,
}

/// Bracket known to contain `c_n` with a sign change of `f'`.
///
/// For `n > 0`: `(n - 1/(pi^2 n), n)` if even, `(n, n + 3/(pi^2 n))` if odd.
/// For `n < 0`: `(n, n + 1/2)` if even, `(n - 1/2, n)` if odd.
pub fn critical_bracket(n: i64, prec: u32) -> Result<(Float, Float, bool)> {
    if n == 0 {
        return Err(Error::InvalidArgument("critical points are indexed by nonzero integers".into()));
    }
    let nf = Float::with_val(prec, n);
    let pi2 = Float::with_val(prec, &*pi(prec) * &*pi(prec));
    let even = n % 2 == 0;
    Ok(match (n > 0, even) {
        (true, true) => {
            let w = Float::with_val(prec, &pi2 * n).recip();
            (Float::with_val(prec, &nf - w), nf, false)
        }
        (true, false) => {
            let w = Float::with_val(prec, Float::with_val(prec, &pi2 * n).recip() * 3u32);
            let hi = Float::with_val(prec, &nf + w);
            (nf, hi, false)
        }
        (false, true) => {
            let hi = Float::with_val(prec, &nf + 0.5f64);
            (nf, hi, true)
        }
        (false, false) => (Float::with_val(prec, &nf - 0.5f64), nf, true),
    })
}

fn attempt_critical(n: i64, target_bits: u32, bits: u32) -> Result<Attempt<CriticalPoint>> {
    let prec = bits.max(target_bits + 64);
    let (lo, hi, derived) = critical_bracket(n, prec)?;
    let g = |x: &Ball| f_prime(x);
    let dg = |x: &Ball| f_second(x);
    match refine_root(&g, &dg, &lo, &hi, target_bits, prec) {
        RootOutcome::Root(enclosure) => {
            let kind = if f_second(&enclosure).is_negative() { Extremum::Maximum } else { Extremum::Minimum };
            Ok(Attempt::Done(CriticalPoint { n, enclosure, kind, bits: prec, derived_bracket: derived }))
        }
        RootOutcome::Retry => Ok(Attempt::Retry),
        RootOutcome::NoSignChange => Err(Error::BracketFailure { n }),
    }
}

/// `c_n` enclosed to `2^-bits(policy.agreement_digits)`.
pub fn critical_point(n: i64, policy: &PrecisionPolicy) -> Result<CriticalPoint> {
    critical_point_to_bits(n, digits_to_bits(policy.agreement_digits), policy)
}

/// `c_n` enclosed to radius `2^-target_bits`.
pub fn critical_point_to_bits(n: i64, target_bits: u32, policy: &PrecisionPolicy) -> Result<CriticalPoint> {
    if n == 0 {
        return Err(Error::InvalidArgument("critical points are indexed by nonzero integers".into()));
    }
    let start = policy.start_bits.max(target_bits + 64);
    let policy = policy.with_start(start);
    Ok(escalate_until_certified(&policy, |bits| attempt_critical(n, target_bits, bits))?.value)
}

pub fn critical_points(ns: &[i64], policy: &PrecisionPolicy) -> Result<Vec<CriticalPoint>> {
    ns.par_iter().map(|&n| critical_point(n, policy)).collect()
}

/// Writes `n,midpoint,radius_exponent,bits,derived_bracket` rows.
pub fn write_critical_csv<W: Write>(points: &[CriticalPoint], digits: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "midpoint", "radius_exponent", "bits", "derived_bracket"])?;
    for c in points {
        let exp = c.enclosure.rad_log2().map(|e| e.to_string()).unwrap_or_else(|| "exact".into());
        w.write_record([
            c.n.to_string(),
            c.enclosure.to_decimal(digits),
            exp,
            c.bits.to_string(),
            c.derived_bracket.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum FixedLabel {
    /// Nonnegative fixed point `mu_i`.
    Mu(u32),
    /// Reflected point `nu_i = -1 - mu_i`.
    Nu(u32),
    /// Repulsive fixed point of `f^2` near 1.
    X1,
}

impl fmt::Display for FixedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FixedLabel::Mu(i) => write!(f, "mu{i}"),
            FixedLabel::Nu(i) => write!(f, "nu{i}"),
            FixedLabel::X1 => write!(f, "x1"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attractive,
    Repulsive,
}

#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub label: FixedLabel,
    pub enclosure: Ball,
    /// Derivative of `f` (of `f^2` for `X1`) over the enclosure.
    pub multiplier: Ball,
    pub stability: Stability,
}

fn stability_of(multiplier: &Ball) -> Result<Stability> {
    let m = multiplier.mag();
    let one = Float::with_val(m.prec(), 1);
    if m < one {
        Ok(Stability::Attractive)
    } else if multiplier.mig() > one {
        Ok(Stability::Repulsive)
    } else {
        Err(Error::PreconditionViolated("multiplier too close to 1 to classify".into()))
    }
}

/// `f(x) - x = 1/4 - (x/2 + 1/4) cos(pi x)`.
fn displacement(x: &Ball) -> Ball {
    f(x).sub(x)
}

fn displacement_slope(x: &Ball) -> Ball {
    f_prime(x).sub(&Ball::from_int(x.prec(), 1))
}

fn mu_bracket(i: u32, prec: u32) -> (Float, Float) {
    let k = (i / 2) as i64;
    if i == 1 {
        (Float::with_val(prec, 0.125f64), Float::with_val(prec, 0.5f64))
    } else if i.is_multiple_of(2) {
        (Float::with_val(prec, 2 * k) - 0.5f64, Float::with_val(prec, 2 * k))
    } else {
        (Float::with_val(prec, 2 * k), Float::with_val(prec, 2 * k) + 0.5f64)
    }
}

fn certified_root(
    g: &dyn Fn(&Ball) -> Ball,
    dg: &dyn Fn(&Ball) -> Ball,
    bracket: impl Fn(u32) -> (Float, Float),
    what: &str,
    policy: &PrecisionPolicy,
) -> Result<Ball> {
    let target = digits_to_bits(policy.agreement_digits);
    let policy = policy.with_start(policy.start_bits.max(target + 64));
    let found = escalate_until_certified(&policy, |bits| {
        let (lo, hi) = bracket(bits);
        Ok(match refine_root(g, dg, &lo, &hi, target, bits) {
            RootOutcome::Root(b) => Attempt::Done(b),
            RootOutcome::Retry => Attempt::Retry,
            RootOutcome::NoSignChange => {
                return Err(Error::PreconditionViolated(format!("no sign change bracketing {what}")))
            }
        })
    })?;
    Ok(found.value)
}

fn fixed_point(label: FixedLabel, enclosure: Ball) -> Result<FixedPoint> {
    let multiplier = f_prime(&enclosure);
    let stability = stability_of(&multiplier)?;
    Ok(FixedPoint { label, enclosure, multiplier, stability })
}

/// `mu_i` for `i >= 1`: the roots of `(x/2 + 1/4) cos(pi x) = 1/4`, one in
/// `(2k - 1/2, 2k)` and one in `(2k, 2k + 1/2)` for each `k`.
pub fn mu(i: u32, policy: &PrecisionPolicy) -> Result<FixedPoint> {
    if i == 0 {
        return fixed_point(FixedLabel::Mu(0), Ball::from_int(policy.start_bits, 0));
    }
    let enclosure = certified_root(&displacement, &displacement_slope, |b| mu_bracket(i, b), "mu", policy)?;
    fixed_point(FixedLabel::Mu(i), enclosure)
}

/// `nu_i = -1 - mu_i`, itself a fixed point of `f`.
pub fn nu_from_mu(mu: &FixedPoint) -> Result<FixedPoint> {
    let FixedLabel::Mu(i) = mu.label else {
        return Err(Error::InvalidArgument(format!("{} is not a mu point", mu.label)));
    };
    let e = Ball::from_int(mu.enclosure.prec(), -1).sub(&mu.enclosure);
    fixed_point(FixedLabel::Nu(i), e)
}

/// All `mu_i` in `[0, x_max]` followed by the matching `nu_i`.
pub fn fixed_points(x_max: f64) -> Result<Vec<FixedPoint>> {
    fixed_points_with(x_max, &PrecisionPolicy::default())
}

pub fn fixed_points_with(x_max: f64, policy: &PrecisionPolicy) -> Result<Vec<FixedPoint>> {
    if !(x_max >= 1.0) || !x_max.is_finite() {
        return Err(Error::InvalidArgument(format!("x_max {x_max} must be a finite value >= 1")));
    }
    let mut count = 1u32;
    while mu_bracket(count, 64).0 < x_max {
        count += 1;
    }
    let mus: Vec<FixedPoint> = (0..count).into_par_iter().map(|i| mu(i, policy)).collect::<Result<_>>()?;
    let mus: Vec<FixedPoint> = mus.into_iter().filter(|m| m.enclosure.hi() <= x_max).collect();
    let nus = mus.iter().map(nu_from_mu).collect::<Result<Vec<_>>>()?;
    Ok(mus.into_iter().chain(nus).collect())
}

/// The unique fixed point of `f^2` in `(1, c_1)`; repulsive.
pub fn x1_fixed_point() -> Result<FixedPoint> {
    x1_fixed_point_with(&PrecisionPolicy::default())
}

pub fn x1_fixed_point_with(policy: &PrecisionPolicy) -> Result<FixedPoint> {
    let c1 = critical_point(1, policy)?;
    let g = |x: &Ball| f_iter(x, 2).sub(x);
    let dg = |x: &Ball| f_prime(&f(x)).mul(&f_prime(x)).sub(&Ball::from_int(x.prec(), 1));
    // f^2 - x vanishes at 1, so start strictly to its right
    let bracket = |bits: u32| (Float::with_val(bits, 1.001f64), Float::with_val(bits, c1.enclosure.lo()));
    let enclosure = certified_root(&g, &dg, bracket, "x1", policy)?;
    let multiplier = f_prime(&f(&enclosure)).mul(&f_prime(&enclosure));
    if !(multiplier.mig() > 1) {
        return Err(Error::PreconditionViolated("x1 not certified repulsive".into()));
    }
    Ok(FixedPoint { label: FixedLabel::X1, enclosure, multiplier, stability: Stability::Repulsive })
}
