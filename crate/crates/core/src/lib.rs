//! Exact real arithmetic on [-1, 1] built from midpoint operations.
//!
//! The crate provides:
//!
//! - [`exact`]: arbitrary-precision rationals (the testing oracle), dyadics,
//!   dyadic enclosures and convex weight vectors;
//! - [`stream`]: signed-digit streams with binary and infinitary midpoints,
//!   negation, truncated arithmetic, multiplication, convex combination and
//!   Cauchy limits;
//! - [`body`]: an abstract midpoint-convex-body interface with interval,
//!   Euclidean-box, simplex and L-shaped instances, a coalgebra iteration
//!   solver, and law-checking suites;
//! - [`term`]: trees over one binary and one infinitary operator, weights,
//!   substitution, normalization and evaluation in any body;
//! - [`free`]: free superconvex constructions — greedy dyadic decomposition,
//!   level sequences, homomorphic extension, and the bipointed homomorphism
//!   out of the interval.

pub mod body;
pub mod exact;
pub mod free;
pub mod stream;
pub mod term;

pub use exact::{Dyadic, DyadicInterval, Rational, WeightFunction};
pub use stream::{Digit, DigitStream, Precision, StreamSeq};
