//! Higher-order Count Sketch.
//!
//! A vector is viewed as an order-`l` tensor (column-major), and each mode
//! `k` is compressed independently by its own `(h_k, s_k)` pair:
//!
//! ```text
//! HCS(T)[t_1, .., t_l] = sum over h_k(i_k) = t_k of s_1(i_1) .. s_l(i_l) T[i_1, .., i_l]
//! ```
//!
//! Entries are recovered as `s_1(i_1) .. s_l(i_l) HCS(T)[h_1(i_1), .., h_l(i_l)]`,
//! taking the median over replicas. Sketches of products and contractions
//! are computed directly from operand sketches in [`ops`].

mod ops;
mod plan;

pub use ops::variance_bound;
pub use plan::{HcsPlan, HcsSketch, ModeSpec};
