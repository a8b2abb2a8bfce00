//! Static ergodicity verification for stochastic mass-action reaction
//! networks.
//!
//! The pipeline proves irreducibility of the candidate state space with
//! lattice, linear-feasibility and level-construction checks, then searches
//! for a linear Foster-Lyapunov function by solving one more feasibility
//! problem. Every positive verdict carries exact rational certificates that
//! can be re-checked without trusting the solver.

pub mod conservation;
pub mod drift;
pub mod irreducibility;
pub mod linalg;
pub mod network;
pub mod oracle;
pub mod rational;
pub mod report;
