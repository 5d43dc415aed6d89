//! Numerical laboratory for renormalization of circle maps with one break
//! point.
//!
//! The crate builds test maps ([`maps`]), tunes them to a prescribed rotation
//! number ([`contfrac`]), constructs the dynamical partitions and the
//! renormalized pair `(f_n, g_n)` ([`partition`], [`renorm`]), and measures
//! how close the pair is to its fractional-linear approximants. [`zygmund`]
//! and [`lemmalab`] hold the regularity gauges and distortion probes.

pub mod contfrac;
pub mod error;
pub mod lemmalab;
pub mod levels;
pub mod maps;
pub mod numerics;
pub mod partition;
pub mod quad;
pub mod rate;
pub mod renorm;
pub mod zygmund;

pub use contfrac::ContinuedFraction;
pub use error::{Error, Result};
pub use maps::{BreakMap, Side};
pub use numerics::{CirclePoint, PrecisionPolicy, Real};
