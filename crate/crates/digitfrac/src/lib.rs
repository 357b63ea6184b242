//! Missing-digit fractals and their measures.
//!
//! The crate builds digit systems (base `b`, dimension `k`, digit set `D`,
//! rational weights), evaluates their self-similar measures exactly on boxes,
//! certifies Fourier l1-dimension lower bounds, counts rational points on and
//! near the fractal exactly, and runs desk-scale metric Diophantine
//! approximation experiments.
//!
//! Layering: [`measures`] is exact rational arithmetic and serves as the
//! oracle for everything else; [`fourier`] is certified floating point;
//! [`counting`] runs on scaled integers; [`approx`] combines the exact layer
//! with seeded Monte Carlo. [`oracles`] holds independent reference
//! implementations used by the test suites.

pub mod approx;
pub mod counting;
pub mod fourier;
pub mod measures;
pub mod oracles;
pub mod rat;

pub use measures::{DigitSystem, MeasureValue, MeasuresError, Rect, SampledPoint, Seg};
