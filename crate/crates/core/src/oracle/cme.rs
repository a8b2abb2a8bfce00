use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{OracleError, TruncatedSpace, DEFAULT_TRUNCATION_STATES};
use crate::conservation::ConservedStructure;
use crate::network::ReactionNetwork;
use crate::rational::{to_f64, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EstimateMethod {
    TimeAverage,
    TruncatedCme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryEstimate {
    pub method: EstimateMethod,
    pub species: Vec<String>,
    /// Support states in the original species order.
    pub states: Vec<Vec<u64>>,
    pub probabilities: Vec<f64>,
    /// `1 - sum(probabilities)`.
    pub deficit: f64,
    /// Mass on states with a positive-rate transition leaving the box.
    pub boundary_mass: f64,
    /// L1 norm of the balance residual for iterative solves.
    pub residual: Option<f64>,
    pub exact: bool,
    pub truncation_too_small: bool,
}

impl StationaryEstimate {
    pub fn mean(&self, species: usize) -> f64 {
        self.states.iter().zip(&self.probabilities).map(|(s, p)| s[species] as f64 * p).sum()
    }

    pub fn probability_of(&self, state: &[u64]) -> f64 {
        self.states.iter().position(|s| s == state).map_or(0.0, |i| self.probabilities[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmeOptions {
    pub max_states: usize,
    /// Spaces smaller than this are solved in exact arithmetic.
    pub exact_limit: usize,
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Boundary mass above this flags the truncation as too small.
    pub boundary_threshold: f64,
}

impl Default for CmeOptions {
    fn default() -> Self {
        Self {
            max_states: DEFAULT_TRUNCATION_STATES,
            exact_limit: 2000,
            tolerance: 1e-12,
            max_sweeps: 100_000,
            boundary_threshold: 1e-6,
        }
    }
}

/// Stationary distribution of the chain restricted to the box
/// `x_u <= upper` times the conserved states, with transitions leaving the
/// box dropped. `net` and `cs` use the reordered species indexing.
pub fn truncated_cme_stationary(
    net: &ReactionNetwork,
    cs: &ConservedStructure,
    upper: &[u64],
    opts: &CmeOptions,
) -> Result<StationaryEstimate, OracleError> {
    let space = TruncatedSpace::new(cs, upper, opts.max_states)?;
    let n = space.len();
    if n == 0 {
        return Err(OracleError::InvalidInput("truncated state space is empty".into()));
    }
    let transitions: Vec<_> = (0..n).map(|i| space.transitions(net, i)).collect();
    let leaves: Vec<bool> = transitions.iter().map(|t| t.iter().any(|(_, j, _)| j.is_none())).collect();

    let (p, residual, exact) = if n < opts.exact_limit {
        (solve_exact(net, &space, &transitions)?, None, true)
    } else {
        let (p, r) = solve_gauss_seidel(n, &transitions, opts);
        (p, Some(r), false)
    };
    let sum: f64 = p.iter().sum();
    let boundary_mass = p.iter().zip(&leaves).filter(|(_, &l)| l).map(|(q, _)| q).sum::<f64>();
    Ok(StationaryEstimate {
        method: EstimateMethod::TruncatedCme,
        species: cs.to_original(net.species()),
        states: space.states.iter().map(|s| cs.to_original(s)).collect(),
        probabilities: p,
        deficit: 1.0 - sum,
        boundary_mass,
        residual,
        exact,
        truncation_too_small: boundary_mass > opts.boundary_threshold,
    })
}

type Row = BTreeMap<usize, Rational>;

fn solve_exact(
    net: &ReactionNetwork,
    space: &TruncatedSpace,
    transitions: &[Vec<(usize, Option<usize>, f64)>],
) -> Result<Vec<f64>, OracleError> {
    let n = space.len();
    // row j: sum_i pi_i q_ij - pi_j q_j = 0
    let mut rows: Vec<Row> = vec![Row::new(); n];
    for (i, ts) in transitions.iter().enumerate() {
        for &(k, j, _) in ts {
            let Some(j) = j else { continue };
            let a = net.propensity(k, &space.states[i]).expect("valid state");
            *rows[j].entry(i).or_insert_with(Rational::zero) += &a;
            *rows[i].entry(i).or_insert_with(Rational::zero) -= a;
        }
    }
    rows[n - 1] = (0..n).map(|i| (i, Rational::one())).collect();
    let mut rhs = vec![Rational::zero(); n];
    rhs[n - 1] = Rational::one();
    for row in rows.iter_mut() {
        row.retain(|_, v| !v.is_zero());
    }

    for c in 0..n {
        let pivot = (c..n)
            .filter(|&r| rows[r].contains_key(&c))
            .min_by_key(|&r| rows[r].len())
            .ok_or_else(|| OracleError::Singular("truncated chain has no unique stationary distribution".into()))?;
        rows.swap(c, pivot);
        rhs.swap(c, pivot);
        let (head, tail) = rows.split_at_mut(c + 1);
        let prow = &head[c];
        let pval = prow[&c].clone();
        for (off, row) in tail.iter_mut().enumerate() {
            let Some(v) = row.get(&c) else { continue };
            let factor = v / &pval;
            for (&col, pv) in prow {
                let e = row.entry(col).or_insert_with(Rational::zero);
                *e -= &factor * pv;
                if e.is_zero() {
                    row.remove(&col);
                }
            }
            let delta = &factor * &rhs[c];
            rhs[c + 1 + off] -= delta;
        }
    }
    let mut x = vec![Rational::zero(); n];
    for c in (0..n).rev() {
        let mut acc = rhs[c].clone();
        for (&col, v) in rows[c].range(c + 1..) {
            acc -= v * &x[col];
        }
        x[c] = acc / &rows[c][&c];
    }
    Ok(x.iter().map(to_f64).collect())
}

fn solve_gauss_seidel(n: usize, transitions: &[Vec<(usize, Option<usize>, f64)>], opts: &CmeOptions) -> (Vec<f64>, f64) {
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut out = vec![0.0; n];
    for (i, ts) in transitions.iter().enumerate() {
        for &(_, j, a) in ts {
            if let Some(j) = j {
                incoming[j].push((i, a));
                out[i] += a;
            }
        }
    }
    let mut p = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_sweeps {
        for j in 0..n {
            if out[j] > 0.0 {
                p[j] = incoming[j].iter().map(|&(i, a)| p[i] * a).sum::<f64>() / out[j];
            }
        }
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|q| *q /= s);
        residual = (0..n).map(|j| (incoming[j].iter().map(|&(i, a)| p[i] * a).sum::<f64>() - p[j] * out[j]).abs()).sum();
        if residual < opts.tolerance {
            break;
        }
    }
    (p, residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;

    #[test]
    fn single_state() {
        let net = parse_network("A -> 0 ; 1").unwrap();
        let cs = ConservedStructure::trivial(1);
        let est = truncated_cme_stationary(&net, &cs, &[0], &CmeOptions::default()).unwrap();
        assert_eq!(est.probabilities, vec![1.0]);
        assert_eq!(est.deficit, 0.0);
    }

    #[test]
    fn two_state_switch() {
        let net = parse_network("species: A B\nA -> B ; 1\nB -> A ; 3").unwrap();
        let g = crate::conservation::find_conservation_relations(&net.stoichiometry_matrix()).unwrap();
        let (net, cs) = crate::conservation::reorder_conserved_last(&net, &g);
        let cs = cs.with_totals(&[1], 100).unwrap();
        let est = truncated_cme_stationary(&net, &cs, &[], &CmeOptions::default()).unwrap();
        assert!((est.probability_of(&[1, 0]) - 0.75).abs() < 1e-15);
        assert!((est.probability_of(&[0, 1]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn iterative_matches_exact() {
        let net = parse_network("0 -> S ; 3\nS -> 0 ; 1").unwrap();
        let cs = ConservedStructure::trivial(1);
        let exact = truncated_cme_stationary(&net, &cs, &[40], &CmeOptions::default()).unwrap();
        let opts = CmeOptions { exact_limit: 0, ..CmeOptions::default() };
        let iter = truncated_cme_stationary(&net, &cs, &[40], &opts).unwrap();
        assert!(exact.exact && !iter.exact);
        for (a, b) in exact.probabilities.iter().zip(&iter.probabilities) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(iter.residual.unwrap() < 1e-12);
    }

    #[test]
    fn small_box_is_flagged() {
        let net = parse_network("0 -> S ; 5\nS -> 0 ; 1").unwrap();
        let est = truncated_cme_stationary(&net, &ConservedStructure::trivial(1), &[3], &CmeOptions::default()).unwrap();
        assert!(est.truncation_too_small);
    }

    #[test]
    fn reducible_truncation_is_singular() {
        let net = parse_network("0 -> S ; 1").unwrap();
        let r = truncated_cme_stationary(&net, &ConservedStructure::trivial(1), &[2], &CmeOptions::default());
        // state 2 is absorbing in the box, so the solution is unique
        assert!((r.unwrap().probability_of(&[2]) - 1.0).abs() < 1e-15);
        let net = parse_network("species: A\nA -> A ; 1").unwrap();
        let r = truncated_cme_stationary(&net, &ConservedStructure::trivial(1), &[1], &CmeOptions::default());
        assert!(matches!(r, Err(OracleError::Singular(_))));
    }
}
