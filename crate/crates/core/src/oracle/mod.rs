//! Empirical cross-checks: stochastic simulation, truncated master
//! equation and a finite-box connectivity probe.

mod cme;
mod probe;
mod ssa;

use std::collections::HashMap;

use thiserror::Error;

use crate::conservation::ConservedStructure;
use crate::network::ReactionNetwork;

pub use cme::{truncated_cme_stationary, CmeOptions, EstimateMethod, StationaryEstimate};
pub use probe::{empirical_irreducibility_probe, ProbeResult};
pub use ssa::{
    batch_means, gillespie_simulate, simulate_replicas, time_average, time_average_distribution, write_csv,
    BatchMeans, Trajectory, MAX_JUMPS, PROPENSITY_LIMIT,
};

/// Default bound on the number of truncated states.
pub const DEFAULT_TRUNCATION_STATES: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("total propensity {total} at time {time} exceeds the numeric guard")]
    PropensityOverflow { time: f64, total: f64 },
    #[error("simulation exceeded {0} jumps")]
    JumpLimit(usize),
    #[error("molecule count overflow in species {0}")]
    CountOverflow(usize),
    #[error("truncated state space exceeds {limit} states")]
    StateSpaceTooLarge { limit: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("stationary solve failed: {0}")]
    Singular(String),
}

/// States `x` with `x_i <= upper_i` on the unconserved block and the
/// conserved block drawn from the enumerated conserved states. Indices are
/// in the reordered (conserved last) order.
#[derive(Debug, Clone)]
pub(crate) struct TruncatedSpace {
    pub states: Vec<Vec<u64>>,
    pub index: HashMap<Vec<u64>, usize>,
}

impl TruncatedSpace {
    pub fn new(cs: &ConservedStructure, upper: &[u64], max_states: usize) -> Result<Self, OracleError> {
        if upper.len() != cs.unconserved_count {
            return Err(OracleError::InvalidInput(format!(
                "box has {} bounds, expected {}",
                upper.len(),
                cs.unconserved_count
            )));
        }
        let mut count: usize = cs.conserved_states.len();
        for &u in upper {
            count = count
                .checked_mul(u as usize + 1)
                .filter(|&c| c <= max_states)
                .ok_or(OracleError::StateSpaceTooLarge { limit: max_states })?;
        }
        if count > max_states {
            return Err(OracleError::StateSpaceTooLarge { limit: max_states });
        }
        let mut states = Vec::with_capacity(count);
        let mut head = vec![0u64; upper.len()];
        'outer: loop {
            for c in &cs.conserved_states {
                let mut x = head.clone();
                x.extend_from_slice(c);
                states.push(x);
            }
            for i in (0..head.len()).rev() {
                if head[i] < upper[i] {
                    head[i] += 1;
                    head[i + 1..].iter_mut().for_each(|h| *h = 0);
                    continue 'outer;
                }
            }
            break;
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self { states, index })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// Successor index per positive-rate reaction, `None` when it leaves
    /// the box.
    pub fn transitions(&self, net: &ReactionNetwork, i: usize) -> Vec<(usize, Option<usize>, f64)> {
        let x = &self.states[i];
        let mut out = Vec::new();
        for (k, r) in net.reactions().iter().enumerate() {
            if r.is_identity() {
                continue;
            }
            let a = net.propensity_f64(k, x, crate::rational::to_f64(&r.rate));
            if a <= 0.0 {
                continue;
            }
            let y: Option<Vec<u64>> =
                x.iter().zip(r.change()).map(|(&xi, c)| xi.checked_add_signed(c)).collect();
            out.push((k, y.and_then(|y| self.index.get(&y).copied()), a));
        }
        out
    }
}
