//! Star discrepancy, the geometric mean `tau` of `1 - cos(pi x)/2`, the
//! Crandall product and growth-rate experiments on orbit segments.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{escalate_until_certified, Attempt, Ball, PrecisionPolicy};
use crate::maps::{f, g_asym, mod2};
use crate::rigor::check_growth_bound;

/// Star discrepancy of `points` in `[a, b]`: the supremum over `c` of
/// `|#{x_i in [a, c)}/n - (c - a)/(b - a)|`.
pub fn star_discrepancy(points: &[f64], a: f64, b: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptySequence);
    }
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("empty interval [{a}, {b}]")));
    }
    let mut u: Vec<f64> = points
        .iter()
        .map(|&x| {
            if x < a || x > b || x.is_nan() {
                Err(Error::InvalidArgument(format!("point {x} outside [{a}, {b}]")))
            } else {
                Ok((x - a) / (b - a))
            }
        })
        .collect::<Result<_>>()?;
    u.sort_by(|x, y| x.total_cmp(y));
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &ui)| {
            let i = i as f64 + 1.0;
            (i / n - ui).max(ui - (i - 1.0) / n)
        })
        .fold(0.0, f64::max);
    Ok(d.min(1.0))
}

/// `tau = (2 + sqrt 3)/4` from the closed form, and the same constant from a
/// periodic trapezoid rule for `exp((1/2) int_0^2 ln(1 - cos(pi t)/2) dt)`.
#[derive(Clone, Debug)]
pub struct TauConstant {
    pub tau: Ball,
    pub alpha: Ball,
    pub quadrature: Float,
    pub quadrature_points: usize,
}

impl TauConstant {
    pub fn ln_tau(&self) -> f64 {
        self.tau.to_f64().ln()
    }
}

const MAX_QUADRATURE_POINTS: usize = 1 << 20;

/// Trapezoid rule with `n` nodes for the mean of `ln g` over one period.
fn mean_log_g(n: usize, prec: u32) -> Float {
    let mut acc = Float::with_val(prec, 0);
    for k in 0..n {
        let t = Ball::from_int(prec, 2 * k as i64).div(&Ball::from_int(prec, n as i64)).expect("n > 0");
        acc += g_asym(&t).ln().expect("g >= 1/2").mid();
    }
    acc / n as u32
}

pub fn tau_constant(prec: u32) -> Result<TauConstant> {
    let alpha = Ball::from_int(prec, 3).sqrt()?.add(&Ball::from_int(prec, 2));
    let tau = alpha.mul_2si(-2);
    let tol = Float::with_val(prec, Float::i_exp(1, -(prec as i32) + 8));
    let mut n = 8;
    let mut prev = mean_log_g(n, prec);
    while n < MAX_QUADRATURE_POINTS {
        n *= 2;
        let cur = mean_log_g(n, prec);
        if Float::with_val(prec, &cur - &prev).abs() <= tol {
            return Ok(TauConstant { tau, alpha, quadrature: cur.exp(), quadrature_points: n });
        }
        prev = cur;
    }
    Err(Error::QuadratureDivergence { points: n })
}

/// `prod_{i=1}^{k} (3 / 2^i)^(1/2^i)`, which tends to 3/4.
pub fn crandall_product(k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("the product needs k >= 1".into()));
    }
    let prec = 128;
    let mut log_sum = Float::with_val(prec, 0);
    for i in 1..=k {
        let term = Float::with_val(prec, 3) >> i;
        let weight = Float::with_val(prec, Float::i_exp(1, -(i as i32)));
        log_sum += term.ln() * weight;
    }
    Ok(log_sum.exp().to_f64())
}

/// Koksma check for `ln g`: returns `(|mean - ln tau|, 2 ln 3 * D*)` for
/// points in `[0, 2]`.
pub fn koksma_check(points: &[f64]) -> Result<(f64, f64)> {
    let d = star_discrepancy(points, 0.0, 2.0)?;
    let mean = points.iter().map(|&x| (1.0 - (std::f64::consts::PI * x).cos() / 2.0).ln()).sum::<f64>()
        / points.len() as f64;
    let ln_tau = ((2.0 + 3f64.sqrt()) / 4.0).ln();
    Ok(((mean - ln_tau).abs(), 2.0 * 3f64.ln() * d))
}

/// The first `n + 1` points of an orbit with certified residues mod 2.
#[derive(Clone, Debug)]
pub struct OrbitSegment {
    pub start: Ball,
    /// `f^0(x), ..., f^n(x)`.
    pub values: Vec<Ball>,
    /// `f^i(x) mod 2` for `i < n`.
    pub residues: Vec<Ball>,
    /// Lower bound on `min |f^i(x)|` over `i < n`.
    pub min_abs: f64,
    /// `(1/n) ln(f^n(x)/x)`.
    pub growth: Ball,
    pub bits: u32,
}

impl OrbitSegment {
    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn residue_points(&self) -> Vec<f64> {
        self.residues.iter().map(|r| r.to_f64().clamp(0.0, 2.0)).collect()
    }

    pub fn discrepancy(&self) -> Result<f64> {
        star_discrepancy(&self.residue_points(), 0.0, 2.0)
    }

    /// Largest residue radius, i.e. the certified absolute error.
    pub fn residue_error(&self) -> f64 {
        self.residues.iter().map(|r| r.rad().to_f64()).fold(0.0, f64::max)
    }
}

/// Residues must be known to this many bits.
const RESIDUE_BITS: i64 = 30;

fn try_segment(x: &Ball, n: usize, bits: u32) -> Result<Attempt<OrbitSegment>> {
    let start = x.set_prec(bits.max(x.prec()));
    let mut values = vec![start.clone()];
    let mut residues = Vec::with_capacity(n);
    let mut min_abs = f64::INFINITY;
    for _ in 0..n {
        let v = values.last().expect("nonempty");
        let r = match mod2(v) {
            Ok(r) => r,
            Err(Error::AmbiguousFloor) => return Ok(Attempt::Retry),
            Err(e) => return Err(e),
        };
        if r.rad_log2().is_some_and(|e| e > -RESIDUE_BITS) {
            return Ok(Attempt::Retry);
        }
        residues.push(r);
        min_abs = min_abs.min(v.mig().to_f64_round(rug::float::Round::Down));
        let next = f(v);
        values.push(next);
    }
    let ratio = values[n].div(&start)?;
    let growth = ratio.ln()?.div(&Ball::from_int(bits, n as i64))?;
    Ok(Attempt::Done(OrbitSegment { start, values, residues, min_abs, growth, bits }))
}

/// Orbit segment of length `n >= 1`, escalating precision until every
/// residue is known to 2^-30.
pub fn orbit_segment(x: &Ball, n: usize, policy: &PrecisionPolicy) -> Result<OrbitSegment> {
    if n == 0 {
        return Err(Error::InvalidArgument("segment length must be at least 1".into()));
    }
    if x.contains_zero() {
        return Err(Error::InvalidArgument("segment start must be nonzero".into()));
    }
    match escalate_until_certified(policy, |bits| try_segment(x, n, bits)) {
        Ok(e) => Ok(e.value),
        Err(Error::EscalationExhausted { .. }) => Err(Error::AmbiguousFloor),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SampleSpec {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_steps: usize,
    pub count: usize,
    pub seed: u64,
    /// Draw integer starts instead of real ones.
    pub integer_starts: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthRow {
    pub x: f64,
    pub n: usize,
    pub discrepancy: f64,
    pub growth: f64,
    pub m: f64,
    pub bound_lhs: f64,
    pub bound_rhs: f64,
    pub holds: bool,
    pub ud: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthSummary {
    pub count: usize,
    pub skipped: usize,
    pub violations: usize,
    pub mean_growth: f64,
    pub mean_discrepancy: f64,
    /// Fraction of segments whose discrepancy is below `ud_threshold`.
    pub ud_fraction: f64,
    pub ud_threshold: f64,
}

#[derive(Clone, Debug)]
pub struct GrowthReport {
    pub rows: Vec<GrowthRow>,
    pub summary: GrowthSummary,
}

/// Default discrepancy threshold below which a segment counts as
/// equidistributed mod 2.
pub const UD_THRESHOLD: f64 = 0.05;

/// Shortens a segment so that every value before the last has `|v| > 1/3`.
fn truncate_to_bound(seg: OrbitSegment) -> Option<OrbitSegment> {
    let third = Float::with_val(64, 1) / 3u32;
    let keep = seg.values.iter().take(seg.residues.len()).take_while(|v| v.mig() > third).count();
    if keep == 0 {
        return None;
    }
    if keep == seg.residues.len() {
        return Some(seg);
    }
    let values: Vec<Ball> = seg.values[..=keep].to_vec();
    let residues = seg.residues[..keep].to_vec();
    let min_abs = values[..keep].iter().map(|v| v.mig().to_f64_round(rug::float::Round::Down)).fold(f64::INFINITY, f64::min);
    let bits = seg.bits;
    let growth = values[keep].div(&seg.start).ok()?.ln().ok()?.div(&Ball::from_int(bits, keep as i64)).ok()?;
    Some(OrbitSegment { start: seg.start, values, residues, min_abs, growth, bits })
}

pub fn growth_experiment(spec: &SampleSpec, policy: &PrecisionPolicy, ud_threshold: f64) -> Result<GrowthReport> {
    if !(spec.x_lo < spec.x_hi) || spec.x_lo <= 0.0 && spec.x_hi >= 0.0 {
        return Err(Error::InvalidArgument("x range must be nonempty and exclude 0".into()));
    }
    if spec.n_steps == 0 || spec.count == 0 {
        return Err(Error::InvalidArgument("n_steps and count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let starts: Vec<f64> = (0..spec.count)
        .map(|_| {
            let x = rng.gen_range(spec.x_lo..spec.x_hi);
            if spec.integer_starts {
                x.round()
            } else {
                x
            }
        })
        .collect();
    let rows: Vec<Option<GrowthRow>> = starts
        .par_iter()
        .map(|&x| {
            let seg = orbit_segment(&Ball::from_f64(policy.start_bits, x), spec.n_steps, policy).ok()?;
            let seg = truncate_to_bound(seg)?;
            let check = check_growth_bound(&seg).ok()?;
            let discrepancy = seg.discrepancy().ok()?;
            Some(GrowthRow {
                x,
                n: seg.len(),
                discrepancy,
                growth: seg.growth.to_f64(),
                m: seg.min_abs,
                bound_lhs: check.lhs,
                bound_rhs: check.rhs,
                holds: check.holds,
                ud: discrepancy < ud_threshold,
            })
        })
        .collect();
    let skipped = rows.iter().filter(|r| r.is_none()).count();
    let rows: Vec<GrowthRow> = rows.into_iter().flatten().collect();
    let count = rows.len();
    let mean = |g: fn(&GrowthRow) -> f64| if count == 0 { f64::NAN } else { rows.iter().map(g).sum::<f64>() / count as f64 };
    let summary = GrowthSummary {
        count,
        skipped,
        violations: rows.iter().filter(|r| !r.holds).count(),
        mean_growth: mean(|r| r.growth),
        mean_discrepancy: mean(|r| r.discrepancy),
        ud_fraction: mean(|r| if r.ud { 1.0 } else { 0.0 }),
        ud_threshold,
    };
    Ok(GrowthReport { rows, summary })
}

/// Writes `x,n,discrepancy,growth,m,bound_lhs,bound_rhs` rows.
pub fn write_growth_csv<W: Write>(rows: &[GrowthRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "n", "discrepancy", "growth", "m", "bound_lhs", "bound_rhs"])?;
    for r in rows {
        w.write_record([
            r.x.to_string(),
            r.n.to_string(),
            r.discrepancy.to_string(),
            r.growth.to_string(),
            r.m.to_string(),
            r.bound_lhs.to_string(),
            r.bound_rhs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Supremum over a uniform grid of `c`, evaluated on both sides of each
    /// grid point: an approximation from below of the exact supremum.
    fn grid_oracle(points: &[f64], a: f64, b: f64, grid: usize) -> f64 {
        let n = points.len() as f64;
        let mut best: f64 = 0.0;
        for k in 0..=grid {
            let c = a + (b - a) * k as f64 / grid as f64;
            let below = points.iter().filter(|&&x| x < c).count() as f64;
            let upto = points.iter().filter(|&&x| x <= c).count() as f64;
            let frac = (c - a) / (b - a);
            best = best.max((below / n - frac).abs()).max((upto / n - frac).abs());
        }
        best
    }

    fn van_der_corput(i: u32) -> f64 {
        let (mut x, mut denom, mut k) = (0.0, 1.0, i);
        while k > 0 {
            denom *= 2.0;
            x += (k & 1) as f64 / denom;
            k >>= 1;
        }
        x
    }

    #[test]
    fn discrepancy_examples() {
        assert_eq!(star_discrepancy(&[0.0], 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(star_discrepancy(&[0.5, 1.5], 0.0, 2.0).unwrap(), 0.25);
        assert!((grid_oracle(&[0.5, 1.5], 0.0, 2.0, 10_000) - 0.25).abs() < 1e-12);
        let vdc: Vec<f64> = (0..64).map(van_der_corput).collect();
        let d = star_discrepancy(&vdc, 0.0, 1.0).unwrap();
        assert!((d - grid_oracle(&vdc, 0.0, 1.0, 1 << 16)).abs() < 1e-6, "{d}");
        assert!(matches!(star_discrepancy(&[], 0.0, 1.0), Err(Error::EmptySequence)));
        assert!(star_discrepancy(&[3.0], 0.0, 2.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn discrepancy_matches_grid(points in prop::collection::vec(0.0f64..2.0, 1..40)) {
            let d = star_discrepancy(&points, 0.0, 2.0).unwrap();
            let n = points.len() as f64;
            prop_assert!(d >= 1.0 / (2.0 * n) - 1e-15 && d <= 1.0);
            let grid = grid_oracle(&points, 0.0, 2.0, 100_000);
            prop_assert!((d - grid).abs() <= 1e-5 + 1.0 / 100_000.0, "{} vs {}", d, grid);
        }

        #[test]
        fn koksma_inequality(points in prop::collection::vec(0.0f64..2.0, 1..200)) {
            let (lhs, bound) = koksma_check(&points).unwrap();
            prop_assert!(lhs <= bound + 1e-12);
        }
    }

    #[test]
    fn tau_values() {
        let t = tau_constant(128).unwrap();
        assert!((t.tau.to_f64() - 0.93301270189).abs() < 1e-11);
        let q = Float::with_val(128, &t.quadrature - t.tau.mid()).abs();
        assert!(q < 1e-30, "{q}");
        assert!((t.ln_tau() + 0.0693364642).abs() < 1e-9);
        let a = &t.alpha;
        let poly = a.square().sub(&a.mul_i(4)).add(&Ball::from_int(128, 1));
        assert!(poly.contains_zero());
    }

    #[test]
    fn crandall_values() {
        assert!((crandall_product(1).unwrap() - 1.5f64.sqrt()).abs() < 1e-12);
        assert!((crandall_product(30).unwrap() - 0.75).abs() < 1e-6);
        for k in 2..40 {
            assert!(crandall_product(k + 1).unwrap() <= crandall_product(k).unwrap());
        }
        assert!(crandall_product(0).is_err());
    }

    #[test]
    fn segments() {
        let p = PrecisionPolicy::default();
        let seg = orbit_segment(&Ball::from_f64(128, 1234.5678), 50, &p).unwrap();
        assert_eq!(seg.len(), 50);
        assert_eq!(seg.values.len(), 51);
        assert!(seg.residue_error() < 1e-9);
        for (v, r) in seg.values.iter().zip(&seg.residues) {
            let back = r.sub(v);
            let k = back.mid().to_f64() / 2.0;
            assert!((k - k.round()).abs() < 1e-9);
        }
        assert!(orbit_segment(&Ball::from_f64(128, 5.5), 0, &p).is_err());
    }

    #[test]
    fn integer_starts_are_not_equidistributed() {
        let spec = SampleSpec { x_lo: 1e6, x_hi: 1e6 + 100.0, n_steps: 40, count: 50, seed: 7, integer_starts: true };
        let report = growth_experiment(&spec, &PrecisionPolicy::default(), UD_THRESHOLD).unwrap();
        assert_eq!(report.summary.violations, 0);
        assert!(report.summary.mean_discrepancy > 0.2);
        assert!((report.summary.mean_growth - (3f64.sqrt() / 2.0).ln()).abs() < 0.1, "{:?}", report.summary);
    }

    #[test]
    fn csv_rows() {
        let spec = SampleSpec { x_lo: 1e3, x_hi: 1e4, n_steps: 20, count: 3, seed: 1, integer_starts: false };
        let report = growth_experiment(&spec, &PrecisionPolicy::default(), UD_THRESHOLD).unwrap();
        let mut buf = Vec::new();
        write_growth_csv(&report.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), report.rows.len() + 1);
        assert!(text.starts_with("x,n,discrepancy,growth,m,bound_lhs,bound_rhs\n"));
    }
}
