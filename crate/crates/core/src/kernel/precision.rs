//! Precision policy and the escalation drivers built on it.

use rug::Float;
use serde::{Deserialize, Serialize};

use super::real::BigReal;
use crate::error::{Error, Result};

/// Smallest working precision accepted anywhere in the crate.
pub const MIN_BITS: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    pub start_bits: u32,
    pub max_bits: u32,
    /// Multiplier applied to the precision at each escalation step.
    pub escalation: u32,
    /// Leading decimal digits two consecutive levels must share.
    pub agreement_digits: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { start_bits: 128, max_bits: 32768, escalation: 2, agreement_digits: 20 }
    }
}

impl PrecisionPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.start_bits < MIN_BITS {
            return Err(Error::InvalidPolicy(format!("start_bits {} < {MIN_BITS}", self.start_bits)));
        }
        if self.start_bits > self.max_bits {
            return Err(Error::InvalidPolicy(format!(
                "start_bits {} exceeds max_bits {}",
                self.start_bits, self.max_bits
            )));
        }
        if self.escalation < 2 {
            return Err(Error::InvalidPolicy("escalation multiplier must exceed 1".into()));
        }
        Ok(())
    }

    /// Precision levels tried in order; the last one is `max_bits`.
    pub fn levels(&self) -> Vec<u32> {
        let mut out = vec![self.start_bits];
        let mut bits = self.start_bits;
        while bits < self.max_bits {
            bits = bits.saturating_mul(self.escalation).min(self.max_bits);
            out.push(bits);
        }
        out
    }

    pub fn with_start(&self, start_bits: u32) -> Self {
        PrecisionPolicy { start_bits, max_bits: self.max_bits.max(start_bits), ..self.clone() }
    }
}

/// A value together with the precision that produced it.
#[derive(Clone, Debug)]
pub struct Escalated<T> {
    pub value: T,
    pub bits: u32,
}

/// `true` when `a` and `b` share `digits` leading decimal digits, measured
/// as a relative difference below `10^-digits`.
pub fn agree_to_digits(a: &Float, b: &Float, digits: u32) -> bool {
    if a == b {
        return true;
    }
    let prec = a.prec().max(b.prec());
    let diff = Float::with_val(prec, a - b).abs();
    let scale = Float::with_val(prec, a.abs_ref()).max(&Float::with_val(prec, b.abs_ref()));
    let tol = Float::with_val(prec, Float::u_pow_u(10, digits)).recip();
    diff <= scale * tol
}

/// Evaluates `computation` at increasing precision until two consecutive
/// levels agree to `policy.agreement_digits`; returns the lower level's value.
pub fn eval_escalating<F>(computation: F, policy: &PrecisionPolicy) -> Result<Escalated<BigReal>>
where
    F: Fn(u32) -> Result<Float>,
{
    policy.validate()?;
    let levels = policy.levels();
    let mut prev = computation(levels[0])?;
    let mut prev_bits = levels[0];
    for &bits in &levels[1..] {
        let cur = computation(bits)?;
        if agree_to_digits(&prev, &cur, policy.agreement_digits) {
            return Ok(Escalated { value: BigReal::new(prev), bits: prev_bits });
        }
        prev = cur;
        prev_bits = bits;
    }
    Err(Error::EscalationExhausted { max_bits: policy.max_bits })
}

/// Outcome of one attempt of a certifying computation.
pub enum Attempt<T> {
    Done(T),
    /// The enclosure at this precision was too wide to conclude.
    Retry,
}

/// Runs `attempt` at each precision level until it concludes.
pub fn escalate_until_certified<T, F>(policy: &PrecisionPolicy, mut attempt: F) -> Result<Escalated<T>>
where
    F: FnMut(u32) -> Result<Attempt<T>>,
{
    policy.validate()?;
    for bits in policy.levels() {
        if let Attempt::Done(value) = attempt(bits)? {
            return Ok(Escalated { value, bits });
        }
    }
    Err(Error::EscalationExhausted { max_bits: policy.max_bits })
}
