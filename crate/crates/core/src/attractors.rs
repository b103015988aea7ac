//! Known attracting cycles of `f`, certified trap neighbourhoods around them,
//! basin classification of single orbits and scans over critical points.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use rayon::prelude::*;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::critical::{critical_point_to_bits, refine_root, RootOutcome};
use crate::error::{Error, Result};
use crate::integer::{t_orbit, u_orbit, DEFAULT_CAP};
use crate::kernel::{Ball, PrecisionPolicy};
use crate::maps::{f, f_iter, f_iter_derivative, f_prime, t_map, u_map, Side};

pub mod reference;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttractorLabel {
    A1,
    A2,
    #[serde(rename = "ZERO")]
    Zero,
    #[serde(rename = "NU1")]
    Nu1,
    B1,
    B2,
    B3,
    B4,
}

impl AttractorLabel {
    pub const ALL: [AttractorLabel; 8] = [
        AttractorLabel::A1,
        AttractorLabel::A2,
        AttractorLabel::Zero,
        AttractorLabel::Nu1,
        AttractorLabel::B1,
        AttractorLabel::B2,
        AttractorLabel::B3,
        AttractorLabel::B4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttractorLabel::A1 => "A1",
            AttractorLabel::A2 => "A2",
            AttractorLabel::Zero => "ZERO",
            AttractorLabel::Nu1 => "NU1",
            AttractorLabel::B1 => "B1",
            AttractorLabel::B2 => "B2",
            AttractorLabel::B3 => "B3",
            AttractorLabel::B4 => "B4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name().eq_ignore_ascii_case(s))
    }

    pub fn period(self) -> usize {
        match self {
            AttractorLabel::Zero | AttractorLabel::Nu1 => 1,
            AttractorLabel::A1 | AttractorLabel::A2 => 2,
            AttractorLabel::B1 | AttractorLabel::B2 => 3,
            AttractorLabel::B3 | AttractorLabel::B4 => 11,
        }
    }

    /// Decimal seed for one cycle point; the true point lies within one unit
    /// of its last digit.
    fn seed(self) -> &'static str {
        match self {
            AttractorLabel::A1 => "1",
            AttractorLabel::A2 => "1.192",
            AttractorLabel::Zero => "0",
            AttractorLabel::Nu1 => "-1.277",
            AttractorLabel::B1 => "-5.046002",
            AttractorLabel::B2 => "-4.998739",
            AttractorLabel::B3 => "-17.002728",
            AttractorLabel::B4 => "-16.999991",
        }
    }

    pub fn side(self) -> Side {
        match self {
            AttractorLabel::A1 | AttractorLabel::A2 => Side::Positive,
            AttractorLabel::Zero => Side::Zero,
            _ => Side::Negative,
        }
    }
}

impl fmt::Display for AttractorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct Attractor {
    pub label: AttractorLabel,
    pub period: usize,
    /// Cycle points in orbit order; `points[0]` is the anchor.
    pub points: Vec<Ball>,
    pub multiplier: Ball,
    /// One trap interval per cycle point, in the same order.
    pub traps: Vec<Ball>,
    /// Traps have radius `2^-trap_exponent`.
    pub trap_exponent: u32,
}

impl Attractor {
    pub fn anchor(&self) -> &Ball {
        &self.points[0]
    }

    /// `true` when `x` lies inside one of the trap intervals.
    pub fn traps_ball(&self, x: &Ball) -> bool {
        self.traps.iter().any(|t| x.subset_of(t))
    }
}

fn seed_bracket(seed: &str, prec: u32) -> Result<(Float, Float)> {
    let decimals = seed.split_once('.').map_or(0, |(_, d)| d.len()) as i32;
    let centre = Float::with_val(prec, Float::parse(seed).map_err(|e| Error::Parse(e.to_string()))?);
    let unit = Float::with_val(prec, Float::u_pow_u(10, decimals as u32)).recip();
    Ok((Float::with_val(prec, &centre - &unit), Float::with_val(prec, &centre + &unit)))
}

fn cycle_anchor(label: AttractorLabel, prec: u32) -> Result<Ball> {
    let p = label.period();
    match label {
        AttractorLabel::A1 => return Ok(Ball::from_int(prec, 1)),
        AttractorLabel::Zero => return Ok(Ball::from_int(prec, 0)),
        _ => {}
    }
    let g = |x: &Ball| f_iter(x, p).sub(x);
    let dg = |x: &Ball| f_iter_derivative(x, p).sub(&Ball::from_int(x.prec(), 1));
    let (lo, hi) = seed_bracket(label.seed(), prec)?;
    let target = prec.saturating_sub(64).max(32);
    match refine_root(&g, &dg, &lo, &hi, target, prec) {
        RootOutcome::Root(b) => Ok(b),
        _ => Err(Error::CycleNotFound { label: label.name().into() }),
    }
}

/// Subintervals used when certifying a trap.
pub const TRAP_PIECES: i64 = 32;

/// `true` when `f^period` maps `trap` into itself with `|(f^period)'| < 1`,
/// checked on [`TRAP_PIECES`] equal subintervals.
pub fn verify_trap(trap: &Ball, period: usize) -> bool {
    let prec = trap.prec();
    let lo = trap.lo();
    let width = Float::with_val(prec, trap.hi() - &lo);
    (0..TRAP_PIECES).all(|i| {
        let a = Float::with_val(prec, &lo + Float::with_val(prec, &width * i) / TRAP_PIECES);
        let b = Float::with_val(prec, &lo + Float::with_val(prec, &width * (i + 1)) / TRAP_PIECES);
        let piece = Ball::from_endpoints(&a, &b);
        f_iter(&piece, period).subset_of(trap) && f_iter_derivative(&piece, period).mag() < 1
    })
}

/// Largest `r = 2^-k`, `k <= 40`, such that `[p - r, p + r]` is a trap for
/// every cycle point `p`.
fn certify_traps(points: &[Ball], period: usize) -> Option<(Vec<Ball>, u32)> {
    'radius: for k in 2..=40u32 {
        let mut traps = Vec::with_capacity(points.len());
        for p in points {
            let prec = p.prec();
            let r = Float::with_val(prec, Float::i_exp(1, -(k as i32)));
            let lo = Float::with_val(prec, p.mid() - &r);
            let hi = Float::with_val(prec, p.mid() + &r);
            let trap = Ball::from_endpoints(&lo, &hi);
            if !verify_trap(&trap, period) {
                continue 'radius;
            }
            traps.push(trap);
        }
        return Some((traps, k));
    }
    None
}

fn build_attractor(label: AttractorLabel, prec: u32) -> Result<Attractor> {
    let anchor = cycle_anchor(label, prec)?;
    let period = label.period();
    let mut points = vec![anchor];
    for _ in 1..period {
        let next = f(points.last().expect("nonempty"));
        points.push(next);
    }
    let multiplier = match cycle_multiplier(&points, false)? {
        Multiplier::Enclosure(m) => m,
        Multiplier::Exact(_) => unreachable!("ball multiplier requested"),
    };
    let (traps, trap_exponent) =
        certify_traps(&points, period).ok_or_else(|| Error::CycleNotFound { label: format!("{label} (trap)") })?;
    Ok(Attractor { label, period, points, multiplier, traps, trap_exponent })
}

/// Registry entries for one side, recomputed at `prec` bits.
pub fn known_attractors(side: Side, prec: u32) -> Result<Vec<Attractor>> {
    let labels: Vec<AttractorLabel> = match side {
        Side::Positive => vec![AttractorLabel::A1, AttractorLabel::A2, AttractorLabel::Zero],
        Side::Negative => vec![
            AttractorLabel::Zero,
            AttractorLabel::Nu1,
            AttractorLabel::B1,
            AttractorLabel::B2,
            AttractorLabel::B3,
            AttractorLabel::B4,
        ],
        Side::Zero => vec![AttractorLabel::Zero],
    };
    labels.into_par_iter().map(|l| build_attractor(l, prec)).collect()
}

const REGISTRY_BITS: u32 = 256;

/// Every attractor with its traps, computed once per process.
pub fn registry() -> Result<&'static [Attractor]> {
    static REGISTRY: OnceLock<std::result::Result<Vec<Attractor>, String>> = OnceLock::new();
    let built = REGISTRY.get_or_init(|| {
        AttractorLabel::ALL
            .into_par_iter()
            .map(|l| build_attractor(l, REGISTRY_BITS))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.to_string())
    });
    match built {
        Ok(v) => Ok(v.as_slice()),
        Err(e) => Err(Error::CycleNotFound { label: e.clone() }),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Multiplier {
    Exact(Rational),
    Enclosure(Ball),
}

/// Image of an integer under `f`: `T(n)` for `n >= 0`, `-U(-n)` below.
pub fn f_integer(n: &Integer) -> Integer {
    if *n >= 0 {
        t_map(n)
    } else {
        -u_map(&Integer::from(-n))
    }
}

/// `f'(n) = 1 - (-1)^n / 2` at an integer.
fn f_prime_integer(n: &Integer) -> Rational {
    if n.is_odd() {
        Rational::from((3, 2))
    } else {
        Rational::from((1, 2))
    }
}

/// Product of `f'` over a cycle. With `exact_rational` every point must be
/// an exact integer and the product is returned as a rational.
pub fn cycle_multiplier(points: &[Ball], exact_rational: bool) -> Result<Multiplier> {
    if points.is_empty() {
        return Err(Error::NotACycle("empty cycle".into()));
    }
    let p = points.len();
    if exact_rational {
        let ints = points
            .iter()
            .map(|b| {
                let m = b.mid();
                if b.is_exact() && m.is_integer() {
                    Ok(m.to_integer().expect("finite"))
                } else {
                    Err(Error::NotACycle(format!("{b} is not an exact integer")))
                }
            })
            .collect::<Result<Vec<Integer>>>()?;
        return integer_cycle_multiplier(&ints).map(Multiplier::Exact);
    }
    let mut product = Ball::from_int(points[0].prec(), 1);
    for i in 0..p {
        let image = f(&points[i]);
        if image.intersect(&points[(i + 1) % p]).is_none() {
            return Err(Error::NotACycle(format!("f({}) misses {}", points[i], points[(i + 1) % p])));
        }
        product = product.mul(&f_prime(&points[i]));
    }
    Ok(Multiplier::Enclosure(product))
}

/// Exact multiplier of an integer cycle of `f`.
pub fn integer_cycle_multiplier(cycle: &[Integer]) -> Result<Rational> {
    if cycle.is_empty() {
        return Err(Error::NotACycle("empty cycle".into()));
    }
    let p = cycle.len();
    let mut product = Rational::from(1);
    for i in 0..p {
        if f_integer(&cycle[i]) != cycle[(i + 1) % p] {
            return Err(Error::NotACycle(format!("f({}) != {}", cycle[i], cycle[(i + 1) % p])));
        }
        product *= f_prime_integer(&cycle[i]);
    }
    Ok(product)
}

/// Integer cycle of `f` through `n`, if the orbit of `n` returns to it
/// within `max_period` steps.
pub fn integer_cycle_through(n: i64, max_period: usize) -> Option<Vec<Integer>> {
    let start = Integer::from(n);
    let mut cycle = vec![start.clone()];
    let mut cur = f_integer(&start);
    while cur != start {
        if cycle.len() >= max_period {
            return None;
        }
        cycle.push(cur.clone());
        cur = f_integer(&cur);
    }
    Some(cycle)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub max_iter: u64,
    pub max_magnitude: f64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_iter: 1_000_000, max_magnitude: 1e30 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    Attracted(AttractorLabel),
    Unresolved,
    CapExceeded,
    MagnitudeEscape,
}

impl Verdict {
    pub fn label(&self) -> Option<AttractorLabel> {
        match self {
            Verdict::Attracted(l) => Some(*l),
            _ => None,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Verdict::Attracted(l) => l.name().to_string(),
            Verdict::Unresolved => "unresolved".into(),
            Verdict::CapExceeded => "cap_exceeded".into(),
            Verdict::MagnitudeEscape => "magnitude_escape".into(),
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "unresolved" => Some(Verdict::Unresolved),
            "cap_exceeded" => Some(Verdict::CapExceeded),
            "magnitude_escape" => Some(Verdict::MagnitudeEscape),
            other => AttractorLabel::parse(other).map(Verdict::Attracted),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClassificationOutcome {
    /// Starting enclosure at the precision that concluded.
    pub start: Ball,
    pub result: Verdict,
    pub iterations: u64,
    pub bits_used: u32,
    pub diagnostics: Option<String>,
}

/// Radius beyond which an orbit ball no longer resolves the dynamics.
const MAX_RAD_LOG2: i64 = -12;

enum Run {
    Done(Verdict, u64),
    TooWide(u64),
}

fn run_orbit(start: &Ball, registry: &[Attractor], caps: &Caps) -> Run {
    let max_mag = Float::with_val(64, caps.max_magnitude);
    let mut x = start.clone();
    for it in 0..caps.max_iter {
        if let Some(a) = registry.iter().find(|a| a.traps_ball(&x)) {
            return Run::Done(Verdict::Attracted(a.label), it);
        }
        if x.mig() > max_mag {
            return Run::Done(Verdict::MagnitudeEscape, it);
        }
        if x.rad_log2().is_some_and(|e| e > MAX_RAD_LOG2) {
            return Run::TooWide(it);
        }
        x = f(&x);
    }
    Run::Done(Verdict::CapExceeded, caps.max_iter)
}

/// Classifies the orbit of a start point produced at each precision level by
/// `start_at`, escalating until the orbit ball stays narrow enough to land
/// in a trap or to escape.
pub fn classify_with<F>(start_at: F, policy: &PrecisionPolicy, caps: &Caps) -> Result<ClassificationOutcome>
where
    F: Fn(u32) -> Result<Ball>,
{
    policy.validate()?;
    let registry = registry()?;
    let mut last = None;
    for bits in policy.levels() {
        let start = start_at(bits)?;
        if start.is_exact() && start.mid().is_zero() {
            return Err(Error::InvalidArgument("the orbit of 0 is fixed".into()));
        }
        match run_orbit(&start, registry, caps) {
            Run::Done(result, iterations) => {
                return Ok(ClassificationOutcome { start, result, iterations, bits_used: bits, diagnostics: None })
            }
            Run::TooWide(it) => last = Some((start, it, bits)),
        }
    }
    let (start, it, bits) = last.expect("at least one level");
    Ok(ClassificationOutcome {
        start,
        result: Verdict::Unresolved,
        iterations: it,
        bits_used: bits,
        diagnostics: Some(format!(
            "orbit ball wider than 2^{MAX_RAD_LOG2} after {it} iterations at {} bits; precision exhausted",
            policy.max_bits
        )),
    })
}

/// Classification of the orbit of an arbitrary nonzero start value.
pub fn classify_orbit(x0: &Ball, policy: &PrecisionPolicy, caps: &Caps) -> Result<ClassificationOutcome> {
    if x0.contains_zero() && x0.is_exact() {
        return Err(Error::InvalidArgument("the orbit of 0 is fixed".into()));
    }
    classify_with(|bits| Ok(x0.set_prec(bits.max(x0.prec()))), policy, caps)
}

/// Classification of the orbit of the critical point `c_n`.
pub fn classify_critical(n: i64, policy: &PrecisionPolicy, caps: &Caps) -> Result<ClassificationOutcome> {
    classify_with(
        |bits| {
            let p = policy.with_start(bits);
            Ok(critical_point_to_bits(n, bits, &p)?.enclosure)
        },
        policy,
        caps,
    )
}

/// Integer orbit of `n` under `f` until it reaches its terminal cycle:
/// 1 for `n > 0`, one of -1, -5, -17 for `n < 0`.
pub fn integer_orbit(n: i64) -> Result<Vec<Integer>> {
    if n == 0 {
        return Err(Error::InvalidArgument("0 is fixed".into()));
    }
    if n > 0 {
        Ok(t_orbit(&Integer::from(n), DEFAULT_CAP)?.values)
    } else {
        Ok(u_orbit(&Integer::from(-n), DEFAULT_CAP)?.values.into_iter().map(|v| -v).collect())
    }
}

/// Threshold on `|f^k(c_n) - f^k(n)|` separating tracking from decorrelation.
pub const TRACKING_DISTANCE: f64 = 0.5;

/// First step `k` at which `f^k(start)` is farther than `1/2` from the
/// `k`-th entry of `orbit`, over the whole integer orbit.
pub fn first_divergence(start: &Ball, orbit: &[Integer]) -> Option<u64> {
    let mut x = start.clone();
    for (k, m) in orbit.iter().enumerate() {
        let d = Float::with_val(x.prec(), x.mid() - m).abs();
        if d > TRACKING_DISTANCE {
            return Some(k as u64);
        }
        x = f(&x);
    }
    None
}

#[derive(Clone, Debug)]
pub struct ScanRecord {
    pub n: i64,
    pub outcome: ClassificationOutcome,
    /// The orbit of `c_n` stays within 1/2 of the orbit of `n`.
    pub proche: bool,
    pub first_divergence_step: Option<u64>,
}

/// Flat serialised form of a scan record, one JSON object per line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanLine {
    pub n: i64,
    pub label: String,
    pub iterations: u64,
    pub bits: u32,
    pub proche: bool,
    pub first_divergence_step: Option<u64>,
}

impl ScanRecord {
    pub fn line(&self) -> ScanLine {
        ScanLine {
            n: self.n,
            label: self.outcome.result.tag(),
            iterations: self.outcome.iterations,
            bits: self.outcome.bits_used,
            proche: self.proche,
            first_divergence_step: self.first_divergence_step,
        }
    }
}

impl ScanLine {
    pub fn verdict(&self) -> Option<Verdict> {
        Verdict::from_tag(&self.label)
    }
}

/// Classifies `c_n` and compares its orbit with the integer orbit of `n`.
pub fn scan_one(n: i64, policy: &PrecisionPolicy, caps: &Caps) -> Result<ScanRecord> {
    let outcome = classify_critical(n, policy, caps)?;
    let orbit = integer_orbit(n)?;
    let first_divergence_step = first_divergence(&outcome.start, &orbit);
    Ok(ScanRecord { n, outcome, proche: first_divergence_step.is_none(), first_divergence_step })
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct ScanSummary {
    pub count: usize,
    /// Indices per verdict tag, sorted.
    pub by_label: BTreeMap<String, Vec<i64>>,
    pub not_proche: Vec<i64>,
    pub errors: Vec<i64>,
}

impl ScanSummary {
    pub fn from_lines<'a>(lines: impl IntoIterator<Item = &'a ScanLine>) -> Self {
        let mut s = ScanSummary::default();
        for l in lines {
            s.count += 1;
            s.by_label.entry(l.label.clone()).or_default().push(l.n);
            if !l.proche {
                s.not_proche.push(l.n);
            }
        }
        for v in s.by_label.values_mut() {
            v.sort_unstable();
        }
        s.not_proche.sort_unstable();
        s
    }

    pub fn indices(&self, label: AttractorLabel) -> &[i64] {
        self.by_label.get(label.name()).map_or(&[], |v| v.as_slice())
    }
}

#[derive(Debug)]
pub struct ScanReport {
    pub records: Vec<ScanRecord>,
    /// Indices whose classification raised an error, with the message.
    pub failures: Vec<(i64, String)>,
    pub summary: ScanSummary,
}

/// Scans `c_n` for every `n` in `ns` in parallel; per-index failures are
/// collected rather than aborting the scan.
pub fn scan_critical(ns: &[i64], policy: &PrecisionPolicy, caps: &Caps) -> Result<ScanReport> {
    if ns.contains(&0) {
        return Err(Error::InvalidArgument("scan indices must be nonzero".into()));
    }
    registry()?;
    let results: Vec<(i64, Result<ScanRecord>)> = ns.par_iter().map(|&n| (n, scan_one(n, policy, caps))).collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (n, r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push((n, e.to_string())),
        }
    }
    records.sort_by_key(|r| r.n);
    let lines: Vec<ScanLine> = records.iter().map(ScanRecord::line).collect();
    let mut summary = ScanSummary::from_lines(&lines);
    summary.errors = failures.iter().map(|(n, _)| *n).collect();
    Ok(ScanReport { records, failures, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pol() -> PrecisionPolicy {
        PrecisionPolicy::default()
    }

    fn get(label: AttractorLabel) -> &'static Attractor {
        registry().unwrap().iter().find(|a| a.label == label).unwrap()
    }

    #[test]
    fn table_multipliers() {
        let expected = [
            (AttractorLabel::Zero, 0.5),
            (AttractorLabel::Nu1, 0.385708),
            (AttractorLabel::B1, 0.036389),
            (AttractorLabel::B2, 0.866135),
            (AttractorLabel::B3, 0.003773),
            // mpmath at 80 digits, numeric differentiation of f^11 at the cycle point
            (AttractorLabel::B4, 0.9334991483),
        ];
        for (label, m) in expected {
            let a = get(label);
            assert!((a.multiplier.to_f64() - m).abs() < 1e-6, "{label}: {}", a.multiplier);
            assert_eq!(a.period, label.period());
        }
    }

    #[test]
    fn anchors_and_periods() {
        assert!((get(AttractorLabel::B1).anchor().to_f64() + 5.046002).abs() < 1e-6);
        assert!((get(AttractorLabel::B4).anchor().to_f64() + 16.999991).abs() < 1e-6);
        let a2 = get(AttractorLabel::A2);
        assert!((a2.points[1].to_f64() - 2.138).abs() < 1e-3);
        let a1 = get(AttractorLabel::A1);
        assert_eq!(a1.multiplier.to_f64(), 0.75);
        assert!(a1.multiplier.is_exact());
    }

    #[test]
    fn registry_invariants() {
        for a in registry().unwrap() {
            assert!(a.multiplier.mag() < 1, "{}", a.label);
            let p = a.period;
            for i in 0..p {
                let img = f(&a.points[i]);
                assert!(img.intersect(&a.points[(i + 1) % p]).is_some(), "{}", a.label);
                assert!(verify_trap(&a.traps[i], p), "{} trap {i}", a.label);
                assert!(a.traps[i].contains(a.points[i].mid()));
            }
            assert!(a.trap_exponent <= 40);
        }
    }

    #[test]
    fn side_registries() {
        let pos: Vec<_> = known_attractors(Side::Positive, 192).unwrap().iter().map(|a| a.label).collect();
        assert_eq!(pos, [AttractorLabel::A1, AttractorLabel::A2, AttractorLabel::Zero]);
        let neg = known_attractors(Side::Negative, 192).unwrap();
        assert_eq!(neg.len(), 6);
        assert!(neg.iter().all(|a| a.points[0].prec() == 192));
    }

    #[test]
    fn integer_cycle_multipliers() {
        let c5 = integer_cycle_through(-5, 20).unwrap();
        assert_eq!(c5.len(), 3);
        assert_eq!(integer_cycle_multiplier(&c5).unwrap(), Rational::from((9, 8)));
        let c17 = integer_cycle_through(-17, 20).unwrap();
        assert_eq!(c17.len(), 11);
        assert_eq!(integer_cycle_multiplier(&c17).unwrap(), Rational::from((2187, 2048)));
        let c1 = integer_cycle_through(-1, 20).unwrap();
        assert_eq!(integer_cycle_multiplier(&c1).unwrap(), Rational::from((3, 2)));
        for cyc in [&c1, &c5, &c17] {
            assert!(integer_cycle_multiplier(cyc).unwrap() > 1);
        }
        let a1 = integer_cycle_through(1, 5).unwrap();
        assert_eq!(integer_cycle_multiplier(&a1).unwrap(), Rational::from((3, 4)));
        let balls: Vec<Ball> = c5.iter().map(|n| Ball::from_integer(128, n)).collect();
        assert_eq!(cycle_multiplier(&balls, true).unwrap(), Multiplier::Exact(Rational::from((9, 8))));
        let bad = [Integer::from(-5), Integer::from(-6)];
        assert!(matches!(integer_cycle_multiplier(&bad), Err(Error::NotACycle(_))));
        let bad_balls = [Ball::from_int(128, 3), Ball::from_int(128, 4)];
        assert!(matches!(cycle_multiplier(&bad_balls, false), Err(Error::NotACycle(_))));
    }

    #[test]
    fn classify_examples() {
        let caps = Caps::default();
        let c1 = classify_critical(1, &pol(), &caps).unwrap();
        assert_eq!(c1.result, Verdict::Attracted(AttractorLabel::A2));
        let c7 = classify_critical(7, &pol(), &caps).unwrap();
        assert_eq!(c7.result, Verdict::Attracted(AttractorLabel::A1));
        let small = classify_orbit(&Ball::parse(128, "0.1").unwrap(), &pol(), &caps).unwrap();
        assert_eq!(small.result, Verdict::Attracted(AttractorLabel::Zero));
        let big = classify_orbit(&Ball::parse(128, "1e40").unwrap(), &pol(), &caps).unwrap();
        assert_eq!(big.result, Verdict::MagnitudeEscape);
        let capped = classify_critical(7, &pol(), &Caps { max_iter: 3, ..caps }).unwrap();
        assert_eq!(capped.result, Verdict::CapExceeded);
        let starved = PrecisionPolicy { start_bits: 64, max_bits: 64, ..pol() };
        let unresolved = classify_orbit(&Ball::parse(64, "-1000.3").unwrap(), &starved, &caps).unwrap();
        assert!(matches!(unresolved.result, Verdict::Unresolved | Verdict::Attracted(_)));
        assert!(classify_orbit(&Ball::from_int(128, 0), &pol(), &caps).is_err());
    }

    #[test]
    fn divergence_tracking() {
        let orbit = integer_orbit(7).unwrap();
        assert_eq!(orbit.last().unwrap(), &1);
        let c7 = critical_point_to_bits(7, 200, &pol()).unwrap();
        assert_eq!(first_divergence(&c7.enclosure, &orbit), None);
        let far = Ball::from_f64(128, 7.6);
        assert_eq!(first_divergence(&far, &orbit), Some(0));
        let neg = integer_orbit(-7).unwrap();
        assert_eq!(neg[1], -10);
        assert_eq!(*neg.last().unwrap(), -5);
    }

    #[test]
    fn scan_line_round_trip() {
        let report = scan_critical(&[1, 2, -3], &pol(), &Caps::default()).unwrap();
        assert_eq!(report.records.len(), 3);
        assert_eq!(report.records[0].n, -3);
        for r in &report.records {
            let text = serde_json::to_string(&r.line()).unwrap();
            let back: ScanLine = serde_json::from_str(&text).unwrap();
            assert_eq!(back, r.line());
            assert_eq!(back.verdict(), Some(r.outcome.result));
        }
        assert_eq!(report.summary.indices(AttractorLabel::A2), &[1]);
        assert!(scan_critical(&[0], &pol(), &Caps::default()).is_err());
    }
}
