//! Reference outcomes of earlier critical-point scans, used as regression
//! targets for [`super::scan_critical`].

use rug::Integer;

use super::{integer_orbit, AttractorLabel};
use crate::error::Result;

/// Positive indices `n <= 2000` whose critical point is attracted by `A2`;
/// every other `n` in that range goes to `A1`.
pub const POSITIVE_A2_INDICES: [i64; 26] = [
    1, 3, 5, 382, 496, 502, 504, 508, 530, 550, 644, 646, 656, 666, 754, 830, 874, 1078, 1150, 1214, 1534, 1590,
    1598, 1614, 1662, 1854,
];

/// Upper end of the positive reference range.
pub const POSITIVE_RANGE_END: i64 = 2000;

/// Even negative indices above -250 whose critical point leaves the basin
/// suggested by its integer orbit.
pub const NEGATIVE_EXCEPTIONS: [(i64, AttractorLabel); 10] = [
    (-34, AttractorLabel::B3),
    (-66, AttractorLabel::B1),
    (-98, AttractorLabel::B3),
    (-130, AttractorLabel::Nu1),
    (-132, AttractorLabel::B3),
    (-162, AttractorLabel::B1),
    (-174, AttractorLabel::Nu1),
    (-194, AttractorLabel::B1),
    (-202, AttractorLabel::Nu1),
    (-226, AttractorLabel::Nu1),
];

/// Lower end (exclusive) of the range the exception list is complete for.
pub const NEGATIVE_RANGE_START: i64 = -250;

/// Listed positive indices whose critical orbit decorrelates from the
/// integer orbit, besides `n = 62 (mod 64)`. The list is a prefix: it stops
/// at 500.
pub const NOT_PROCHE_PREFIX: [i64; 12] = [54, 334, 338, 366, 390, 442, 444, 470, 484, 486, 496, 500];

/// Last index covered by [`NOT_PROCHE_PREFIX`].
pub const NOT_PROCHE_PREFIX_END: i64 = 500;

/// Printed multipliers of the attracting cycles, to six decimals.
pub const ATTRACTOR_MULTIPLIERS: [(AttractorLabel, f64); 6] = [
    (AttractorLabel::Zero, 0.5),
    (AttractorLabel::Nu1, 0.385708),
    (AttractorLabel::B1, 0.036389),
    (AttractorLabel::B2, 0.866135),
    (AttractorLabel::B3, 0.003773),
    (AttractorLabel::B4, 0.926287),
];

/// Multipliers of the repelling integer cycles through -5 and -17.
pub const INTEGER_CYCLE_MULTIPLIERS: [(i64, (u32, u32)); 2] = [(-5, (9, 8)), (-17, (2187, 2048))];

pub fn positive_expected(n: i64) -> AttractorLabel {
    if POSITIVE_A2_INDICES.contains(&n) {
        AttractorLabel::A2
    } else {
        AttractorLabel::A1
    }
}

/// Expected attractor of `c_n` for `n < 0`, from the terminal cycle of the
/// integer orbit of `n` (-1, -5 or -17) and the exception list.
pub fn negative_expected(n: i64) -> Result<AttractorLabel> {
    if let Some((_, l)) = NEGATIVE_EXCEPTIONS.iter().find(|(m, _)| *m == n) {
        return Ok(*l);
    }
    let orbit = integer_orbit(n)?;
    let end = orbit.last().expect("nonempty");
    let odd = n % 2 != 0;
    Ok(match (end, odd) {
        (e, true) if *e == -1 => AttractorLabel::Nu1,
        (e, true) if *e == -5 => AttractorLabel::B1,
        (_, true) => AttractorLabel::B3,
        (e, false) if *e == -1 => AttractorLabel::Zero,
        (e, false) if *e == -5 => AttractorLabel::B2,
        _ => AttractorLabel::B4,
    })
}

/// Terminal cycle representative of the integer orbit of `n < 0`.
pub fn negative_terminal(n: i64) -> Result<Integer> {
    Ok(integer_orbit(n)?.pop().expect("nonempty"))
}

/// Listed not-proche positive indices up to `end` (at most 500).
pub fn expected_not_proche(end: i64) -> Vec<i64> {
    let end = end.min(NOT_PROCHE_PREFIX_END);
    let mut v: Vec<i64> = (1..=end).filter(|n| n % 64 == 62).chain(NOT_PROCHE_PREFIX.iter().copied().filter(|&n| n <= end)).collect();
    v.sort_unstable();
    v.dedup();
    v
}
