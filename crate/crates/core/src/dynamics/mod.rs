//! Jump-rate families and per-vertex time scales.
//!
//! Rates and time scales are deliberately separate objects combined at call
//! sites, so the test bench can mix and match (for instance correct rates
//! with the wrong scale) to produce counterexamples.

mod rates;
mod scales;

pub use rates::RateFamily;
pub use scales::{GenericScale, NumericScale, ScaleFn, TimeScale, VertexScale};
