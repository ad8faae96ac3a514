//! Dominance curves between positive vectors under monotone growth of their
//! reversed elementary symmetric coefficients, and sign criteria deciding when
//! `sum f(a_i) <= sum f(b_i)` follows from such growth.

// `!(x < y)` forms deliberately treat NaN as failing the comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod criterion;
pub mod dominance;
pub mod fuzz;
pub mod index_set;
pub mod numeric;
pub mod sympoly;

pub use index_set::IndexSet;
