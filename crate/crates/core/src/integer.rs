//! Orbits, flight times and the inverse tree of the integer maps `T` and `U`.

use std::collections::HashSet;
use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;
use rug::{Float, Integer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{t_map, t_map_u64, u_map};

/// Default iteration cap for flight-time computations.
pub const DEFAULT_CAP: u64 = 100_000;

/// Stop set of the 3x-1 map: minima of its three known cycles.
pub const U_STOP_SET: [u64; 3] = [1, 5, 17];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    StopSet,
    Cap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegerOrbit {
    pub start: Integer,
    /// `values[0] == start`; the last value is the stop-set element reached.
    pub values: Vec<Integer>,
    pub terminated: Termination,
}

impl IntegerOrbit {
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn last(&self) -> &Integer {
        self.values.last().expect("orbit holds its start")
    }
}

fn orbit_until(
    start: &Integer,
    cap: u64,
    map: fn(&Integer) -> Integer,
    stop: impl Fn(&Integer) -> bool,
) -> Result<IntegerOrbit> {
    if *start < 1 {
        return Err(Error::InvalidArgument(format!("orbit start {start} must be positive")));
    }
    let mut values = vec![start.clone()];
    let mut cur = start.clone();
    let mut steps = 0u64;
    while !stop(&cur) {
        if steps == cap {
            return Err(Error::CapExceeded { cap, partial: values });
        }
        cur = map(&cur);
        values.push(cur.clone());
        steps += 1;
    }
    Ok(IntegerOrbit { start: start.clone(), values, terminated: Termination::StopSet })
}

/// `T`-orbit of `n` up to its first visit to 1.
pub fn t_orbit(n: &Integer, cap: u64) -> Result<IntegerOrbit> {
    orbit_until(n, cap, t_map, |v| *v == 1)
}

/// `U`-orbit of `n` up to its first visit to {1, 5, 17}.
pub fn u_orbit(n: &Integer, cap: u64) -> Result<IntegerOrbit> {
    orbit_until(n, cap, u_map, |v| U_STOP_SET.iter().any(|s| *v == *s))
}

/// Smallest `k` with `T^k(n) = 1`.
pub fn flight_time(n: &Integer, cap: u64) -> Result<u64> {
    if *n < 1 {
        return Err(Error::InvalidArgument(format!("flight time of {n} is undefined")));
    }
    if let Some(mut v) = n.to_u64() {
        let mut k = 0u64;
        while v != 1 {
            if k == cap {
                return Err(Error::CapExceeded { cap, partial: t_orbit_prefix(n, cap) });
            }
            match t_map_u64(v) {
                Some(next) => v = next,
                None => {
                    let rest = flight_time(&t_map(&Integer::from(v)), cap - k - 1)?;
                    return Ok(k + 1 + rest);
                }
            }
            k += 1;
        }
        return Ok(k);
    }
    Ok(t_orbit(n, cap)?.steps() as u64)
}

fn t_orbit_prefix(n: &Integer, cap: u64) -> Vec<Integer> {
    let mut values = vec![n.clone()];
    let mut cur = n.clone();
    for _ in 0..cap {
        cur = t_map(&cur);
        values.push(cur.clone());
    }
    values
}

pub fn flight_time_u64(n: u64, cap: u64) -> Result<u64> {
    flight_time(&Integer::from(n), cap)
}

/// `(T^k(n)/n)^(1/k)` for an orbit of length `k >= 1`.
pub fn mean_speed(orbit: &IntegerOrbit) -> Result<f64> {
    let k = orbit.steps();
    if k == 0 {
        return Err(Error::InvalidArgument("mean speed needs at least one step".into()));
    }
    let prec = 128;
    let ratio = Float::with_val(prec, orbit.last()) / Float::with_val(prec, &orbit.start);
    Ok((ratio.ln() / k as u32).exp().to_f64())
}

/// Heuristic mean flight time `2 ln n / ln(4/3)`.
pub fn predicted_flight_time(n: f64) -> f64 {
    2.0 * n.ln() / (4.0f64 / 3.0).ln()
}

#[derive(Clone, Debug, Serialize)]
pub struct RangeReport {
    /// Every `1 <= n <= verified_max` reaches 1.
    pub verified_max: u64,
    pub worst_flight_time: u64,
    pub worst_n: u64,
    /// Number of `n` resolved directly by the residue sieve.
    pub sieved: u64,
}

const SIEVE_BITS: u32 = 16;

/// One residue class `n = 2^K t + r` whose orbit provably drops below `n`
/// after `steps` steps, landing on `coef * t + offset`.
#[derive(Clone, Copy, Debug)]
struct SieveEntry {
    steps: u16,
    coef: u64,
    offset: u64,
}

fn build_sieve() -> Vec<Option<SieveEntry>> {
    let modulus = 1u64 << SIEVE_BITS;
    (0..modulus)
        .map(|r| {
            // value after j steps is a t + b with a = 3^o 2^(K - j)
            let (mut a, mut b) = (modulus, r);
            for j in 1..=SIEVE_BITS as u16 {
                if b & 1 == 1 {
                    a *= 3;
                    b = 3 * b + 1;
                }
                a >>= 1;
                b >>= 1;
                // a t + b < 2^K t + r for every t >= 1
                if a < modulus && modulus - a + r > b {
                    return Some(SieveEntry { steps: j, coef: a, offset: b });
                }
                if a & 1 == 1 {
                    break;
                }
            }
            None
        })
        .collect()
}

/// Confirms that every `1 <= n < limit` reaches 1 and records the longest
/// flight time, by induction on `n`: an orbit that drops below its start
/// inherits the flight time already tabulated for the smaller value.
pub fn range_verify(limit: u64) -> Result<RangeReport> {
    range_verify_with_cap(limit, DEFAULT_CAP)
}

pub fn range_verify_with_cap(limit: u64, cap: u64) -> Result<RangeReport> {
    if limit < 2 {
        return Err(Error::InvalidArgument(format!("range limit {limit} must be at least 2")));
    }
    let sieve = build_sieve();
    let mut table = vec![0u32; limit as usize];
    let mut report = RangeReport { verified_max: limit - 1, worst_flight_time: 0, worst_n: 1, sieved: 0 };
    let modulus = 1u64 << SIEVE_BITS;
    for n in 2..limit {
        let entry = if n >= modulus { sieve[(n & (modulus - 1)) as usize] } else { None };
        let ft = match entry {
            Some(e) => {
                report.sieved += 1;
                let m = e.coef * (n >> SIEVE_BITS) + e.offset;
                e.steps as u32 + table[m as usize]
            }
            None => {
                let mut v = n;
                let mut k = 0u64;
                while v >= n {
                    if k == cap {
                        return Err(Error::CapExceeded { cap, partial: t_orbit_prefix(&Integer::from(n), cap) });
                    }
                    v = match t_map_u64(v) {
                        Some(next) => next,
                        None => {
                            // orbit leaves u64; finish with arbitrary precision
                            let ft = flight_time(&Integer::from(n), cap)?;
                            v = 0;
                            k = ft;
                            break;
                        }
                    };
                    k += 1;
                }
                if v == 0 {
                    k as u32
                } else {
                    k as u32 + table[v as usize]
                }
            }
        };
        table[n as usize] = ft;
        if ft as u64 > report.worst_flight_time {
            report.worst_flight_time = ft as u64;
            report.worst_n = n;
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct FlightStats {
    pub count: u64,
    pub mean_flight_time: f64,
    /// Mean of `2 ln n / ln(4/3)` over the range.
    pub predicted: f64,
    /// Mean of the full-flight speed `(1/n)^(1/k)` over `n > 1`.
    pub mean_speed: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlightRow {
    pub n: u64,
    pub flight_time: u64,
    pub mean_speed: f64,
}

fn flight_row(n: u64, cap: u64) -> Result<FlightRow> {
    let k = flight_time_u64(n, cap)?;
    let speed = if k == 0 { f64::NAN } else { (-(n as f64).ln() / k as f64).exp() };
    Ok(FlightRow { n, flight_time: k, mean_speed: speed })
}

/// Per-`n` rows for a range, in increasing `n`.
pub fn flight_rows(range: Range<u64>, cap: u64) -> Result<Vec<FlightRow>> {
    if range.start < 1 || range.is_empty() {
        return Err(Error::InvalidArgument(format!("invalid range {range:?}")));
    }
    range.into_par_iter().map(|n| flight_row(n, cap)).collect()
}

pub fn flight_time_stats(range: Range<u64>, cap: u64) -> Result<FlightStats> {
    let rows = flight_rows(range, cap)?;
    let count = rows.len() as u64;
    let mean_flight_time = rows.iter().map(|r| r.flight_time as f64).sum::<f64>() / count as f64;
    let predicted = rows.iter().map(|r| predicted_flight_time(r.n as f64)).sum::<f64>() / count as f64;
    let speeds: Vec<f64> = rows.iter().filter(|r| r.flight_time > 0).map(|r| r.mean_speed).collect();
    let mean_speed = if speeds.is_empty() { f64::NAN } else { speeds.iter().sum::<f64>() / speeds.len() as f64 };
    Ok(FlightStats { count, mean_flight_time, predicted, mean_speed })
}

/// Writes `n,flight_time,mean_speed` rows.
pub fn write_flight_csv<W: Write>(rows: &[FlightRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeNode {
    pub node: u64,
    pub parent: Option<u64>,
    pub depth: u32,
}

/// All `n` with `T^k(n) = 1` for some `k <= depth`, with `parent = T(child)`.
#[derive(Clone, Debug, Serialize)]
pub struct InverseTree {
    pub root: u64,
    pub depth: u32,
    pub nodes: Vec<TreeNode>,
}

/// Maximum supported tree depth: node values stay below `2^depth`.
pub const MAX_TREE_DEPTH: u32 = 63;

/// Preimages of `m` under `T`: `2m`, and `(2m-1)/3` when `m = 2 (mod 3)`.
pub fn t_preimages(m: u64) -> Vec<u64> {
    let mut out = vec![2 * m];
    if m % 3 == 2 {
        out.push((2 * m - 1) / 3);
    }
    out
}

pub fn inverse_tree(depth: u32) -> Result<InverseTree> {
    if depth > MAX_TREE_DEPTH {
        return Err(Error::InvalidArgument(format!("tree depth {depth} exceeds {MAX_TREE_DEPTH}")));
    }
    let mut nodes = vec![TreeNode { node: 1, parent: None, depth: 0 }];
    let mut seen: HashSet<u64> = HashSet::from([1]);
    let mut frontier = vec![1u64];
    for d in 1..=depth {
        let mut next = Vec::new();
        for &m in &frontier {
            for c in t_preimages(m) {
                if seen.insert(c) {
                    nodes.push(TreeNode { node: c, parent: Some(m), depth: d });
                    next.push(c);
                }
            }
        }
        frontier = next;
    }
    Ok(InverseTree { root: 1, depth, nodes })
}

impl InverseTree {
    pub fn contains(&self, n: u64) -> bool {
        self.nodes.iter().any(|t| t.node == n)
    }

    pub fn children(&self, m: u64) -> Vec<u64> {
        self.nodes.iter().filter(|t| t.parent == Some(m)).map(|t| t.node).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph inverse_tree {\n  rankdir=BT;\n");
        for t in &self.nodes {
            s.push_str(&format!("  n{} [label=\"{}\"];\n", t.node, t.node));
        }
        for t in &self.nodes {
            if let Some(p) = t.parent {
                s.push_str(&format!("  n{} -> n{};\n", t.node, p));
            }
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(n: u64) -> Integer {
        Integer::from(n)
    }

    /// Straightforward iteration, independent of the sieve and memo table.
    fn flight_oracle(mut n: u64) -> u64 {
        let mut k = 0;
        while n != 1 {
            n = if n % 2 == 1 { (3 * n + 1) / 2 } else { n / 2 };
            k += 1;
        }
        k
    }

    #[test]
    fn flight_time_examples() {
        assert_eq!(flight_time(&int(1), DEFAULT_CAP).unwrap(), 0);
        assert_eq!(flight_time(&int(5), DEFAULT_CAP).unwrap(), 4);
        assert_eq!(flight_time(&int(27), DEFAULT_CAP).unwrap(), 70);
        assert_eq!(flight_oracle(27), 70);
        assert!(flight_time(&int(0), DEFAULT_CAP).is_err());
    }

    #[test]
    fn cap_exceeded_carries_partial_orbit() {
        match flight_time(&int(27), 10) {
            Err(Error::CapExceeded { cap, partial }) => {
                assert_eq!(cap, 10);
                assert_eq!(partial.len(), 11);
                assert_eq!(partial[1], 41);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn huge_start_uses_big_integers() {
        let n = Integer::from(Integer::u_pow_u(2, 100)) - 1u32;
        let k = flight_time(&n, DEFAULT_CAP).unwrap();
        assert_eq!(k as usize, t_orbit(&n, DEFAULT_CAP).unwrap().steps());
        // near u64::MAX the fast path must hand over to big integers
        let m = int(u64::MAX - 2);
        assert_eq!(flight_time(&m, DEFAULT_CAP).unwrap() as usize, t_orbit(&m, DEFAULT_CAP).unwrap().steps());
    }

    #[test]
    fn range_verify_matches_direct_iteration() {
        let report = range_verify(1000).unwrap();
        let (worst_n, worst) = (1..1000u64).map(|n| (n, flight_oracle(n))).max_by_key(|&(n, k)| (k, std::cmp::Reverse(n))).unwrap();
        assert_eq!(report.verified_max, 999);
        assert_eq!(report.worst_flight_time, worst);
        assert_eq!(report.worst_n, worst_n);
        let vacuous = range_verify(2).unwrap();
        assert_eq!(vacuous.verified_max, 1);
        assert!(range_verify(1).is_err());
    }

    #[test]
    fn sieve_entries_are_sound() {
        let sieve = build_sieve();
        let modulus = 1u64 << SIEVE_BITS;
        for r in (0..modulus).step_by(97) {
            if let Some(e) = sieve[r as usize] {
                for t in [1u64, 2, 1000] {
                    let n = modulus * t + r;
                    let mut v = n;
                    for _ in 0..e.steps {
                        v = t_map_u64(v).unwrap();
                    }
                    assert_eq!(v, e.coef * t + e.offset);
                    assert!(v < n);
                }
            }
        }
        assert!(sieve.iter().filter(|e| e.is_some()).count() > (modulus as usize * 9) / 10);
    }

    #[test]
    fn range_verify_past_the_sieve_modulus() {
        let limit = 200_000;
        let report = range_verify(limit).unwrap();
        assert!(report.sieved > 0);
        let worst = (1..limit).map(flight_oracle).max().unwrap();
        assert_eq!(report.worst_flight_time, worst);
    }

    #[test]
    fn u_orbit_examples() {
        let o = u_orbit(&int(7), DEFAULT_CAP).unwrap();
        assert_eq!(o.values, vec![int(7), int(10), int(5)]);
        assert_eq!(*u_orbit(&int(34), DEFAULT_CAP).unwrap().last(), 17);
        assert_eq!(*u_orbit(&int(2), DEFAULT_CAP).unwrap().last(), 1);
        assert_eq!(u_orbit(&int(5), DEFAULT_CAP).unwrap().steps(), 0);
        // the period-11 cycle through 17
        let mut v = int(17);
        let mut cyc = vec![];
        for _ in 0..11 {
            cyc.push(v.clone());
            v = u_map(&v);
        }
        assert_eq!(v, 17);
        assert_eq!(cyc.iter().map(|x| x.to_u64().unwrap()).collect::<Vec<_>>(), [17, 25, 37, 55, 82, 41, 61, 91, 136, 68, 34]);
    }

    #[test]
    fn inverse_tree_examples() {
        let t1 = inverse_tree(1).unwrap();
        assert_eq!(t1.nodes.iter().map(|n| n.node).collect::<Vec<_>>(), vec![1, 2]);
        let t7 = inverse_tree(7).unwrap();
        for n in [12, 13, 16, 40] {
            assert!(t7.contains(n), "{n}");
        }
        // 12 = 0 mod 3: only the even preimage 24 exists
        assert_eq!(t_preimages(12), vec![24]);
        assert!(t_preimages(12).iter().all(|c| c % 2 == 0));
        assert!(inverse_tree(64).is_err());
    }

    #[test]
    fn tree_orbit_duality_and_soundness() {
        for depth in 0..=12 {
            let tree = inverse_tree(depth).unwrap();
            let mut seen = HashSet::new();
            for node in &tree.nodes {
                assert!(seen.insert(node.node), "duplicate {}", node.node);
                assert_eq!(flight_time_u64(node.node, DEFAULT_CAP).unwrap(), node.depth as u64);
                if let Some(p) = node.parent {
                    assert_eq!(t_map_u64(node.node), Some(p));
                }
            }
            // completeness: every n whose flight time is at most depth appears
            let bound = 1u64 << depth;
            for n in 1..=bound {
                if flight_oracle(n) <= depth as u64 {
                    assert!(tree.contains(n), "depth {depth} misses {n}");
                }
            }
        }
    }

    #[test]
    fn tree_exports() {
        let t = inverse_tree(3).unwrap();
        let json: serde_json::Value = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(json["nodes"][1]["node"], 2);
        assert_eq!(json["nodes"][1]["parent"], 1);
        let dot = t.to_dot();
        assert!(dot.contains("n4 -> n2;"));
        assert!(dot.starts_with("digraph"));
    }

    #[test]
    fn mean_speed_examples() {
        let down = IntegerOrbit { start: int(2), values: vec![int(2), int(1)], terminated: Termination::StopSet };
        assert_eq!(mean_speed(&down).unwrap(), 0.5);
        let up = IntegerOrbit { start: int(1), values: vec![int(1), int(2)], terminated: Termination::StopSet };
        assert_eq!(mean_speed(&up).unwrap(), 2.0);
        let single = t_orbit(&int(1), 10).unwrap();
        assert!(mean_speed(&single).is_err());
    }

    #[test]
    fn flight_stats_examples() {
        let s = flight_time_stats(1..2, DEFAULT_CAP).unwrap();
        assert_eq!(s.mean_flight_time, 0.0);
        assert!((predicted_flight_time(1e6) - 96.0).abs() < 0.1);
        let s = flight_time_stats(1_000_000..1_002_000, DEFAULT_CAP).unwrap();
        assert!((s.mean_flight_time / s.predicted - 1.0).abs() < 0.1, "{s:?}");
        let mut buf = Vec::new();
        write_flight_csv(&flight_rows(1..4, DEFAULT_CAP).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,flight_time,mean_speed\n1,0,NaN\n2,1,0.5\n"), "{text}");
    }
}
