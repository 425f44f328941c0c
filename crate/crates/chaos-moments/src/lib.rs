//! Deterministic moment and tail estimates for nonnegative random chaoses.
//!
//! A chaos of order `d` is a random multilinear form
//! `S = sum a_{i1..id} X_{i1} ... X_{id}` with nonnegative coefficients and
//! independent nonnegative variables whose moments grow at a controlled
//! doubling rate. This crate computes the deterministic norm that brackets
//! `||S||_p` up to constants — a supremum of the form over budget sets cut
//! out by the variables' tail exponents — and verifies every comparison it
//! relies on (moment growth, tail-exponent scaling, convex tail envelopes,
//! factorization into log-concave factors, flattening, decoupling) by
//! quadrature, brute-force oracles and seeded Monte Carlo.
//!
//! The crate is organized around five pieces:
//!
//! * [`distributions`] — nonnegative laws described by their tail exponent
//!   `N(t) = -ln P(X >= t)`, with quadrature moments, samplers and
//!   moment-growth audits.
//! * [`envelope`] — convex nondecreasing envelopes of `N(t^k)` and the
//!   log-concave factor laws they induce.
//! * [`tensor`] / [`budget`] / [`norm`] — nonnegative coefficient tensors,
//!   budget sets, and the block-ascent solver for the chaos norm together
//!   with its brute-force oracle.
//! * [`simulate`] — seeded Monte Carlo estimates and the comparison reports
//!   (sandwich, tail, decoupling, factorization).
//!
//! All Monte Carlo work is chunked with per-chunk derived streams, so
//! results are byte-stable regardless of worker count. Parallel execution
//! is provided by the default `parallel` feature; disabling it yields a
//! sequential build with identical outputs.

pub mod budget;
pub mod distributions;
pub mod envelope;
mod error;
mod exec;
pub mod norm;
mod numeric;
pub mod simulate;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
