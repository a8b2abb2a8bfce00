//! Exact integer and rational linear algebra: rank, Hermite normal form,
//! lattice-span test and linear feasibility.

mod hnf;
mod lfp;
mod matrix;
pub(crate) mod rank;

pub use hnf::{hermite_normal_form, lattice_spans_full, lattice_spans_full_from, HnfPivot, HnfResult};
pub use lfp::{solve_lfp, LfpError, LfpOutcome, LfpProblem, LfpStatus};
pub use matrix::{dot, IntMatrix, RationalMatrix};
pub use rank::{determinant, rank};
