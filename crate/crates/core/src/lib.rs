//! Arbitrary-precision workbench for the real-analytic extension
//! `f(x) = x + 1/4 - (x/2 + 1/4) cos(pi x)` of the 3x+1 map.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernel`]: MPFR-backed scalars, ball arithmetic, precision escalation.
//! * [`maps`]: the integer maps `T` and `U`, the extension `f`, its
//!   derivatives and the mod-2 reduction.
//! * [`integer`]: integer orbits, flight times and the inverse tree.
//! * [`critical`]: certified critical points and fixed points of `f`.
//! * [`attractors`]: attractor registry, trap neighbourhoods, basin
//!   classification and scan campaigns.
//! * [`rigor`]: interval verification of the inclusion and image claims.
//! * [`stats`]: discrepancy, the growth constant and growth experiments.

pub mod attractors;
pub mod critical;
pub mod error;
pub mod integer;
pub mod kernel;
pub mod maps;
pub mod rigor;
pub mod stats;

pub use error::{Error, Result};
pub use kernel::{Ball, BigReal, PrecisionPolicy};
