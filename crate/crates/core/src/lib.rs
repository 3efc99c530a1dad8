//! Exact counting of pairs `x1, x2 <= H` whose product is a perfect `k`-th
//! power, together with the constants of its asymptotic formula
//!
//! ```text
//! S_k(H) = c_k H^{2/k} (log H)^{k-1} + O(H^{2/k} (log H)^{k-2})
//! ```
//!
//! and a harness that checks the formula numerically.
//!
//! Module map:
//!
//! * [`arith`]: sieves, factorization, radicals, exact integer roots.
//! * [`decomp`]: k-free splitting, squarefree towers, conjugate k-free pairs.
//! * [`counters`]: three independent evaluators of `S_k(H)`, plus `S_k*`,
//!   `T_k`, and the weighted sums `U_k`, `W_k`.
//! * [`constants`]: the Euler product `P_k`, the rational factor and `c_k`.
//! * [`verify`]: convergence tables, log-polynomial fits, growth checks.
//! * [`selftest`]: a quick small-scale pass over the invariants.
//!
//! All logarithms are natural logarithms.
//!
//! With the `parallel` feature (on by default) the counters split their
//! work across a rayon pool; without it every routine runs sequentially
//! and the worker count is ignored.

pub mod arith;
pub mod constants;
pub mod counters;
pub mod decomp;
mod error;
pub mod par;
pub mod selftest;
pub mod sum;
pub mod verify;

pub use error::{Error, Result};
