//! The integer maps `T`, `U` and the real extension
//! `f(x) = x + 1/4 - (x/2 + 1/4) cos(pi x)`.
//!
//! `f` agrees with `T` on the positive integers and satisfies
//! `f(-n) = -U(n)`. All real-valued functions here take and return
//! [`Ball`]s; a point evaluation is a ball of radius zero. For balls of
//! positive radius the image is enclosed with a second-order centred form
//! `f(m) +/- (|f'(m)| r + sup|f''| r^2 / 2)`, intersected with the naive
//! interval extension when the ball is wide.

use std::cmp::Ordering;

use rug::{Float, Integer};

use crate::error::{Error, Result};
use crate::kernel::ball::{down, up};
use crate::kernel::{Ball, BigReal, RAD_PREC};

/// `(3n+1)/2` for odd `n`, `n/2` otherwise.
pub fn t_map(n: &Integer) -> Integer {
    if n.is_odd() {
        (Integer::from(n * 3u32) + 1u32) >> 1
    } else {
        Integer::from(n >> 1)
    }
}

/// `(3n-1)/2` for odd `n`, `n/2` otherwise.
pub fn u_map(n: &Integer) -> Integer {
    if n.is_odd() {
        (Integer::from(n * 3u32) - 1u32) >> 1
    } else {
        Integer::from(n >> 1)
    }
}

/// `T` on machine integers; `None` on overflow.
#[inline]
pub fn t_map_u64(n: u64) -> Option<u64> {
    if n & 1 == 1 {
        n.checked_mul(3)?.checked_add(1).map(|v| v >> 1)
    } else {
        Some(n >> 1)
    }
}

#[inline]
pub fn u_map_u64(n: u64) -> Option<u64> {
    if n & 1 == 1 {
        n.checked_mul(3).map(|v| (v - 1) >> 1)
    } else {
        Some(n >> 1)
    }
}

struct Parts {
    /// x/2 + 1/4
    w: Ball,
    s: Ball,
    c: Ball,
}

fn parts(x: &Ball) -> Parts {
    let prec = x.prec();
    let w = x.mul_2si(-1).add(&Ball::from_ratio(prec, 1, 4));
    let (s, c) = x.sincospi();
    Parts { w, s, c }
}

fn f_naive(x: &Ball, p: &Parts) -> Ball {
    let quarter = Ball::from_ratio(x.prec(), 1, 4);
    x.add(&quarter).sub(&p.w.mul(&p.c))
}

fn d1_naive(x: &Ball, p: &Parts) -> Ball {
    let one = Ball::from_int(x.prec(), 1);
    let pi = Ball::pi(x.prec());
    one.sub(&p.c.mul_2si(-1)).add(&pi.mul(&p.w).mul(&p.s))
}

fn d2_naive(x: &Ball, p: &Parts) -> Ball {
    let pi = Ball::pi(x.prec());
    pi.mul(&p.s).add(&pi.square().mul(&p.w).mul(&p.c))
}

fn d3_naive(x: &Ball, p: &Parts) -> Ball {
    let pi = Ball::pi(x.prec());
    let pi2 = pi.square();
    pi2.mul_i(3).mul_2si(-1).mul(&p.c).sub(&pi2.mul(&pi).mul(&p.w).mul(&p.s))
}

/// Precision used for derivative bounds: enough to keep absolute accuracy
/// of the argument below one.
fn bound_prec(x: &Ball) -> u32 {
    let e = x.mid().get_exp().unwrap_or(0).max(0) as u32;
    (RAD_PREC + e).min(x.prec().max(RAD_PREC))
}

fn low(x: &Ball) -> Ball {
    x.set_prec(bound_prec(x))
}

fn naive(x: &Ball, order: u8) -> Ball {
    let p = parts(x);
    match order {
        0 => f_naive(x, &p),
        1 => d1_naive(x, &p),
        2 => d2_naive(x, &p),
        _ => d3_naive(x, &p),
    }
}

const WIDE_LOG2: i64 = -30;

/// Encloses `f^(order)` over `x` for `order` in `0..=3`.
fn eval(x: &Ball, order: u8) -> Ball {
    if x.is_exact() || order == 3 {
        return naive(x, order);
    }
    let centre = naive(&x.center(), order);
    let xl = low(x);
    let r = x.rad();
    let rad = if order == 0 {
        let d1 = naive(&low(&x.center()), 1).mag();
        let k2 = naive(&xl, 2).mag();
        let mut a = up(&d1 * r);
        let r2 = up(r * r);
        let b = up(up(&k2 * &r2) >> 1);
        a = up(&a + &b);
        a
    } else {
        let k = naive(&xl, order + 1).mag();
        up(&k * r)
    };
    let rad = up(&rad + centre.rad());
    let centred = Ball::with_radius(centre.mid().clone(), rad);
    if x.rad_log2().is_some_and(|e| e > WIDE_LOG2) {
        let wide = naive(x, order);
        centred.intersect(&wide).unwrap_or(centred)
    } else {
        centred
    }
}

/// `f(x)`, outward-rounded.
pub fn f(x: &Ball) -> Ball {
    eval(x, 0)
}

/// `f` on a plain arbitrary-precision value.
pub fn f_real(x: &BigReal) -> BigReal {
    BigReal::new(f(&x.to_ball()).mid().clone())
}

/// `f^k(x)` by repeated ball evaluation.
pub fn f_iter(x: &Ball, k: usize) -> Ball {
    let mut y = x.clone();
    for _ in 0..k {
        y = f(&y);
    }
    y
}

/// `f'(x) = 1 - cos(pi x)/2 + pi (x/2 + 1/4) sin(pi x)`.
pub fn f_prime(x: &Ball) -> Ball {
    eval(x, 1)
}

/// `f''(x) = pi sin(pi x) + pi^2 (x/2 + 1/4) cos(pi x)`.
pub fn f_second(x: &Ball) -> Ball {
    eval(x, 2)
}

/// `f'''(x) = (3/2) pi^2 cos(pi x) - pi^3 (x/2 + 1/4) sin(pi x)`.
pub fn f_third(x: &Ball) -> Ball {
    eval(x, 3)
}

pub fn f_derivative(x: &Ball, order: u8) -> Result<Ball> {
    match order {
        1..=3 => Ok(eval(x, order)),
        _ => Err(Error::InvalidArgument(format!("derivative order {order} not in 1..=3"))),
    }
}

/// `(f^k)'(x)` as the product of `f'` along the orbit.
pub fn f_iter_derivative(x: &Ball, k: usize) -> Ball {
    let mut y = x.clone();
    let mut d = Ball::from_int(x.prec(), 1);
    for _ in 0..k {
        d = d.mul(&f_prime(&y));
        y = f(&y);
    }
    d
}

/// Schwarzian derivative `f'''/f' - (3/2)(f''/f')^2`.
pub fn schwarzian(x: &Ball) -> Result<Ball> {
    let d1 = f_prime(x);
    if d1.contains_zero() {
        return Err(Error::DerivativeVanishes);
    }
    let d2 = f_second(x);
    let d3 = f_third(x);
    let q = d2.div(&d1)?;
    Ok(d3.div(&d1)?.sub(&q.square().mul_i(3).mul_2si(-1)))
}

/// Sinusoidal asymptote `g(x) = 1 - cos(pi x)/2` of `f(x)/x`.
pub fn g_asym(x: &Ball) -> Ball {
    Ball::from_int(x.prec(), 1).sub(&x.cospi().mul_2si(-1))
}

/// Periodic correction `h(x) = (1 - cos pi x)/(4 - 2 cos pi x)`, so that
/// `f(x) = g(x) (x + h(x))`.
pub fn h_period(x: &Ball) -> Ball {
    let prec = x.prec();
    let c = x.cospi();
    let num = Ball::from_int(prec, 1).sub(&c);
    let den = Ball::from_int(prec, 4).sub(&c.mul_2si(1));
    num.div(&den).expect("4 - 2cos is at least 2")
}

/// `x mod 2 = x - 2 floor(x/2)` for an exactly known value.
pub fn mod2_exact(x: &Float) -> Float {
    let mut k = Float::with_val(x.prec(), x);
    k >>= 1;
    k.floor_mut();
    k <<= 1;
    Float::with_val(x.prec(), x - &k)
}

/// Residue of `x` modulo 2 in `[0, 2)`, with the error of `x` carried along.
pub fn mod2(x: &Ball) -> Result<Ball> {
    if *x.rad() >= 1 {
        return Err(Error::AmbiguousFloor);
    }
    let floor_half = |v: Float| {
        let mut k = v;
        k >>= 1;
        k.floor_mut();
        k
    };
    let k_lo = floor_half(x.lo());
    let k_hi = floor_half(x.hi());
    if k_lo != k_hi {
        return Err(Error::AmbiguousFloor);
    }
    let mut two_k = k_lo;
    two_k <<= 1;
    let shift = Ball::exact_float(Float::with_val(x.prec(), &two_k));
    Ok(x.sub(&shift))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Positive,
    Negative,
    Zero,
}

/// A point of the real line tagged with its (invariant) side.
#[derive(Clone, Debug)]
pub struct MapPoint {
    pub x: Ball,
    pub side: Side,
}

impl MapPoint {
    pub fn new(x: Ball) -> Result<Self> {
        let side = match x.sign() {
            Some(Ordering::Greater) => Side::Positive,
            Some(Ordering::Less) => Side::Negative,
            Some(Ordering::Equal) => Side::Zero,
            None => return Err(Error::Domain("sign of the point is not certified".into())),
        };
        Ok(MapPoint { x, side })
    }

    /// Applies `f`; the side never changes.
    pub fn step(&self) -> MapPoint {
        MapPoint { x: f(&self.x), side: self.side }
    }
}

/// Lower bound of a ball as a radius-precision float (used for reporting).
pub fn lower_f64(x: &Ball) -> f64 {
    down(&x.lo()).to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn b(x: f64) -> Ball {
        Ball::from_f64(128, x)
    }

    fn int(n: i64) -> Integer {
        Integer::from(n)
    }

    #[test]
    fn t_and_u_examples() {
        assert_eq!(t_map(&int(1)), 2);
        assert_eq!(t_map(&int(2)), 1);
        assert_eq!(t_map(&int(27)), 41);
        assert_eq!(u_map(&int(5)), 7);
        assert_eq!(u_map(&int(7)), 10);
        assert_eq!(u_map(&int(10)), 5);
        assert_eq!(u_map(&int(1)), 1);
        assert_eq!(u_map(&int(17)), 25);
        let big = Integer::from(Integer::u_pow_u(2, 200)) - 1u32;
        assert_eq!(t_map(&big), (big.clone() * 3u32 + 1u32) / 2u32);
        assert_eq!(t_map_u64(u64::MAX), None);
        assert_eq!(u_map_u64(5), Some(7));
    }

    #[test]
    fn f_on_anchor_points() {
        assert_eq!(f(&b(0.0)).to_f64(), 0.0);
        assert!(f(&b(0.0)).is_exact());
        assert_eq!(f(&b(2.0)).to_f64(), 1.0);
        assert_eq!(f(&b(1.0)).to_f64(), 2.0);
        assert_eq!(f(&b(-1.0)).to_f64(), -1.0);
        assert!(f(&b(-1.0)).is_exact());
        // f(1 + 7/(2 pi^2)) = 2.013...
        let pi2 = Ball::pi(128).square();
        let x = Ball::from_int(128, 1).add(&Ball::from_int(128, 7).div(&pi2.mul_i(2)).unwrap());
        let y = f(&x).to_f64();
        assert!((2.013..2.014).contains(&y), "{y}");
    }

    #[test]
    fn integer_agreement_with_t_and_u() {
        for n in 1..=10_000i64 {
            let y = f(&Ball::from_int(128, n));
            assert!(y.is_exact());
            assert_eq!(Integer::from_f64(y.to_f64()).unwrap(), t_map(&int(n)), "n = {n}");
            let z = f(&Ball::from_int(128, -n));
            assert!(z.is_exact());
            assert_eq!(Integer::from_f64(-z.to_f64()).unwrap(), u_map(&int(n)), "n = -{n}");
        }
    }

    #[test]
    fn derivative_values_at_integers() {
        assert_eq!(f_prime(&b(1.0)).to_f64(), 1.5);
        assert_eq!(f_prime(&b(2.0)).to_f64(), 0.5);
        assert_eq!(f_prime(&b(0.0)).to_f64(), 0.5);
        for n in 1..=100 {
            assert!(f_prime(&b(n as f64)).is_positive());
        }
        assert!(f_derivative(&b(1.0), 4).is_err());
    }

    #[test]
    fn schwarzian_examples() {
        let s = schwarzian(&Ball::parse(128, "-0.2").unwrap()).unwrap().to_f64();
        assert!((s - 39.961).abs() < 1e-3, "{s}");
        assert!(schwarzian(&b(0.5)).unwrap().is_negative());
        // 1000 sample points in (0, 100), avoiding the critical points
        let mut hits = 0;
        for i in 0..1000 {
            let x = Ball::from_f64(128, 0.05 + i as f64 * 0.0999);
            match schwarzian(&x) {
                Ok(s) => {
                    assert!(s.is_negative(), "Sf({}) = {:?}", x.to_f64(), s);
                    hits += 1;
                }
                Err(Error::DerivativeVanishes) => {}
                Err(e) => panic!("{e}"),
            }
        }
        assert!(hits > 990);
    }

    #[test]
    fn g_and_h_values() {
        assert_eq!(g_asym(&b(0.0)).to_f64(), 0.5);
        assert_eq!(g_asym(&b(1.0)).to_f64(), 1.5);
        let h1 = h_period(&b(1.0));
        assert!(h1.contains(&Float::with_val(128, Float::with_val(128, 1) / 3u32)));
        assert!((h1.to_f64() - 1.0 / 3.0).abs() < 1e-30);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let h = h_period(&b(rng.gen_range(-50.0..50.0)));
            assert!(h.lo() >= -1e-30 && h.hi() <= 1.0 / 3.0 + 1e-30);
        }
    }

    #[test]
    fn decomposition_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = b(rng.gen_range(-1000.0..1000.0));
            let lhs = f(&x);
            let rhs = g_asym(&x).mul(&x.add(&h_period(&x)));
            assert!(lhs.sub(&rhs).contains_zero());
        }
    }

    #[test]
    fn functional_equation_and_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let x = b(rng.gen_range(-500.0..500.0));
            let mirror = Ball::from_int(128, -1).sub(&x);
            let d = f(&x).sub(&f(&mirror)).sub(&x.mul_i(2).add(&Ball::from_int(128, 1)));
            assert!(d.contains_zero());
            let y = f(&x);
            assert_eq!(y.sign(), x.sign(), "x = {}", x.to_f64());
        }
    }

    #[test]
    fn derivative_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = Float::with_val(256, Float::u_exp(1, -40));
        for _ in 0..100 {
            let x0 = rng.gen_range(-30.0..30.0);
            let x = Ball::from_f64(256, x0);
            let xp = Ball::exact_float(Float::with_val(256, x.mid() + &h));
            let xm = Ball::exact_float(Float::with_val(256, x.mid() - &h));
            let fd = f(&xp).sub(&f(&xm)).div(&Ball::exact_float(Float::with_val(256, &h * 2u32))).unwrap();
            let exact = f_prime(&x);
            // truncation error is h^2 f'''/6
            let bound = 1e-20 * (1.0 + x0.abs()) * 40.0;
            assert!((fd.to_f64() - exact.to_f64()).abs() < bound, "x = {x0}");
        }
    }

    #[test]
    fn ball_image_contains_sampled_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..300 {
            let m = rng.gen_range(-40.0..40.0);
            let r = 10f64.powf(rng.gen_range(-12.0..-0.5));
            let ball = Ball::with_radius(Float::with_val(128, m), Float::with_val(64, r));
            let images = [f(&ball), f_prime(&ball), f_second(&ball), f_third(&ball)];
            // grid of 33 points in [m - r, m + r], endpoints included, exact at 512 bits
            for k in -16..=16i32 {
                let t = Float::with_val(512, m) + Float::with_val(512, r) * k / 16u32;
                let p = Ball::exact_float(Float::with_val(512, &t));
                assert!(ball.contains(&t));
                for (order, img) in images.iter().enumerate() {
                    let v = naive(&p, order as u8);
                    assert!(img.contains(v.mid()), "order {order} at {t}");
                }
            }
        }
    }

    #[test]
    fn mod2_examples() {
        assert_eq!(mod2(&b(5.25)).unwrap().to_f64(), 1.25);
        assert_eq!(mod2(&b(-0.5)).unwrap().to_f64(), 1.5);
        let x = Ball::with_radius(Ball::parse(128, "1000000.3").unwrap().mid().clone(), Float::with_val(64, Float::u_exp(1, -64)));
        let r = mod2(&x).unwrap();
        assert!((r.to_f64() - 0.3).abs() < 1e-15);
        let straddle = Ball::with_radius(Float::with_val(64, 2.0), Float::with_val(64, 1e-3));
        assert!(matches!(mod2(&straddle), Err(Error::AmbiguousFloor)));
        assert_eq!(mod2_exact(&Float::with_val(64, -3.5)).to_f64(), 0.5);
    }

    #[test]
    fn map_point_keeps_side() {
        let p = MapPoint::new(b(-3.7)).unwrap();
        assert_eq!(p.side, Side::Negative);
        let q = p.step().step();
        assert_eq!(q.side, Side::Negative);
        assert!(q.x.is_negative());
        assert!(MapPoint::new(Ball::with_radius(Float::with_val(64, 0.0), Float::with_val(64, 0.1))).is_err());
    }
}
