//! Arbitrary-precision scalars, ball arithmetic and precision escalation.

pub mod ball;
pub mod constants;
pub mod precision;
pub mod real;

pub use ball::{Ball, RAD_PREC};
pub use constants::pi;
pub use precision::{
    agree_to_digits, escalate_until_certified, eval_escalating, Attempt, Escalated, PrecisionPolicy, MIN_BITS,
};
pub use real::BigReal;
