//! Conservation relations: nonnegative left-null vectors of the
//! stoichiometry matrix, the "conserved species last" reordering, and the
//! finite set of conserved states for given totals.

use std::ops::Range;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::linalg::{rank, solve_lfp, IntMatrix, LfpProblem, RationalMatrix};
use crate::network::ReactionNetwork;
use crate::rational::{int, Rational};

pub const DEFAULT_MAX_STATES: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConservationError {
    #[error(
        "conservation relations with overlapping supports (species {species:?}); only disjoint relations are supported"
    )]
    OverlappingConservation { species: Vec<usize> },
    #[error("conserved state space exceeds the configured bound of {limit} states")]
    StateSpaceTooLarge { limit: usize },
    #[error("expected {expected} conserved totals, got {got}")]
    TotalsMismatch { expected: usize, got: usize },
    #[error("internal solver failure: {0}")]
    Solver(String),
}

/// `{gamma >= 0, gamma^T M = 0, gamma_must >= 1}` restricted to `allowed`
/// species; returns the witness expanded to all `d` species.
fn nonneg_null_witness(m: &IntMatrix, allowed: &[usize], must: usize) -> Result<Option<Vec<Rational>>, ConservationError> {
    let n = allowed.len();
    let k = m.cols();
    let mut a = RationalMatrix::zeros(n, n);
    let mut b = vec![Rational::zero(); n];
    for (t, &s) in allowed.iter().enumerate() {
        a[(t, t)] = int(-1);
        if s == must {
            b[t] = int(-1);
        }
    }
    let mut a_eq = RationalMatrix::zeros(k, n);
    for (t, &s) in allowed.iter().enumerate() {
        for j in 0..k {
            if m[(s, j)] != 0 {
                a_eq[(j, t)] = int(m[(s, j)]);
            }
        }
    }
    let problem = LfpProblem::new(a, b, a_eq, vec![Rational::zero(); k])
        .map_err(|e| ConservationError::Solver(e.to_string()))?;
    let outcome = solve_lfp(&problem).map_err(|e| ConservationError::Solver(e.to_string()))?;
    Ok(outcome.witness.map(|w| {
        let mut full = vec![Rational::zero(); m.rows()];
        for (t, &s) in allowed.iter().enumerate() {
            full[s] = w[t].clone();
        }
        full
    }))
}

fn support(v: &[Rational]) -> Vec<usize> {
    (0..v.len()).filter(|&i| !v[i].is_zero()).collect()
}

/// Scales a nonnegative rational vector to coprime integers.
fn coprime_integers(v: &[Rational]) -> Vec<i64> {
    let lcm = v.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = v.iter().map(|q| q.numer() * (&lcm / q.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    ints.iter()
        .map(|x| (x / &g).to_i64().expect("conservation weight fits in i64"))
        .collect()
}

/// Nonnegative conservation vectors with pairwise disjoint, minimal supports.
///
/// Vectors are returned in order of their smallest species index, each with
/// coprime integer entries. Fails with `OverlappingConservation` when the
/// nonnegative left-null directions do not split into disjoint supports.
pub fn find_conservation_relations(m: &IntMatrix) -> Result<Vec<Vec<i64>>, ConservationError> {
    let d = m.rows();
    if rank(&m.to_rational()) == d {
        return Ok(Vec::new());
    }
    let all: Vec<usize> = (0..d).collect();
    // Species that appear in the support of some nonnegative null vector.
    let mut positive = vec![false; d];
    for i in 0..d {
        if positive[i] {
            continue;
        }
        if let Some(w) = nonneg_null_witness(m, &all, i)? {
            for s in support(&w) {
                positive[s] = true;
            }
        }
    }
    let pool: Vec<usize> = (0..d).filter(|&i| positive[i]).collect();

    let mut found: Vec<(Vec<usize>, Vec<Rational>)> = Vec::new();
    let mut covered = vec![false; d];
    for &i in &pool {
        if covered[i] {
            continue;
        }
        let mut w = nonneg_null_witness(m, &pool, i)?.expect("species is in the positive pool");
        let mut supp = support(&w);
        let mut idx = 0;
        while idx < supp.len() {
            let j = supp[idx];
            if j == i {
                idx += 1;
                continue;
            }
            let allowed: Vec<usize> = supp.iter().copied().filter(|&s| s != j).collect();
            match nonneg_null_witness(m, &allowed, i)? {
                Some(smaller) => {
                    w = smaller;
                    supp = support(&w);
                    idx = 0;
                }
                None => idx += 1,
            }
        }
        if let Some(s) = supp.iter().find(|&&s| covered[s]) {
            let mut species: Vec<usize> = vec![*s, i];
            species.dedup();
            return Err(ConservationError::OverlappingConservation { species });
        }
        for &s in &supp {
            covered[s] = true;
        }
        found.push((supp, w));
    }

    // With disjoint minimal supports, the null space restricted to the pool
    // must be spanned by them; otherwise another decomposition exists.
    let rows = m.select_rows(&pool);
    let null_dim = pool.len() - rank(&rows.to_rational());
    if null_dim != found.len() {
        return Err(ConservationError::OverlappingConservation { species: pool });
    }
    Ok(found.into_iter().map(|(_, w)| coprime_integers(&w)).collect())
}

/// Conservation data in the reordered species indexing (conserved last).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConservedStructure {
    /// Each vector has length `d`, in the reordered indexing.
    pub gammas: Vec<Vec<i64>>,
    pub unconserved_count: usize,
    pub conserved_count: usize,
    /// `order[new] = original` species index.
    pub order: Vec<usize>,
    pub totals: Vec<u64>,
    /// Enumerated conserved states, each of length `conserved_count`,
    /// lexicographically ordered.
    pub conserved_states: Vec<Vec<u64>>,
    /// Per relation, its index range inside the conserved block.
    pub relation_ranges: Vec<Range<usize>>,
}

impl ConservedStructure {
    /// No conservation: every species unconserved, one empty conserved state.
    pub fn trivial(d: usize) -> Self {
        Self {
            gammas: Vec::new(),
            unconserved_count: d,
            conserved_count: 0,
            order: (0..d).collect(),
            totals: Vec::new(),
            conserved_states: vec![Vec::new()],
            relation_ranges: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.unconserved_count + self.conserved_count
    }

    pub fn has_conservation(&self) -> bool {
        !self.gammas.is_empty()
    }

    pub fn num_conserved_states(&self) -> usize {
        self.conserved_states.len()
    }

    /// Attaches the totals `C` (one per relation) and enumerates the states.
    pub fn with_totals(mut self, totals: &[u64], max_states: usize) -> Result<Self, ConservationError> {
        if totals.len() != self.gammas.len() {
            return Err(ConservationError::TotalsMismatch { expected: self.gammas.len(), got: totals.len() });
        }
        self.totals = totals.to_vec();
        self.conserved_states = enumerate_conserved_states(&self, max_states)?;
        Ok(self)
    }

    /// Conserved weights of relation `r` over its own block.
    pub fn relation_weights(&self, r: usize) -> Vec<u64> {
        let base = self.unconserved_count;
        self.relation_ranges[r].clone().map(|c| self.gammas[r][base + c] as u64).collect()
    }

    /// Maps a vector in the reordered indexing back to the original order.
    pub fn to_original<T: Clone + Default>(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); v.len()];
        for (new, &old) in self.order.iter().enumerate() {
            out[old] = v[new].clone();
        }
        out
    }

    /// Maps a vector in the original indexing into the reordered one.
    pub fn from_original<T: Clone>(&self, v: &[T]) -> Vec<T> {
        self.order.iter().map(|&old| v[old].clone()).collect()
    }
}

/// Moves the union of the conservation supports to the end, relation by
/// relation in detection order, keeping original order within each group.
pub fn reorder_conserved_last(net: &ReactionNetwork, gammas: &[Vec<i64>]) -> (ReactionNetwork, ConservedStructure) {
    let d = net.dim();
    let mut owner: Vec<Option<usize>> = vec![None; d];
    for (r, g) in gammas.iter().enumerate() {
        for i in 0..d {
            if g[i] != 0 {
                assert!(owner[i].is_none(), "conservation supports must be disjoint");
                owner[i] = Some(r);
            }
        }
    }
    let mut order: Vec<usize> = (0..d).filter(|&i| owner[i].is_none()).collect();
    let unconserved_count = order.len();
    let mut relation_ranges = Vec::new();
    for r in 0..gammas.len() {
        let start = order.len() - unconserved_count;
        order.extend((0..d).filter(|&i| owner[i] == Some(r)));
        relation_ranges.push(start..order.len() - unconserved_count);
    }
    let reordered = net.permute_species(&order);
    let gammas = gammas.iter().map(|g| order.iter().map(|&o| g[o]).collect()).collect();
    let cs = ConservedStructure {
        gammas,
        unconserved_count,
        conserved_count: d - unconserved_count,
        order,
        totals: Vec::new(),
        conserved_states: if relation_ranges.is_empty() { vec![Vec::new()] } else { Vec::new() },
        relation_ranges,
    };
    (reordered, cs)
}

/// All `x >= 0` with `weights . x = total`, lexicographically ascending.
fn weighted_compositions(weights: &[u64], total: u64, limit: usize) -> Result<Vec<Vec<u64>>, ConservationError> {
    fn rec(
        weights: &[u64],
        suffix_gcd: &[u64],
        pos: usize,
        remaining: u64,
        current: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
        limit: usize,
    ) -> Result<(), ConservationError> {
        if !remaining.is_multiple_of(suffix_gcd[pos]) {
            return Ok(());
        }
        if pos + 1 == weights.len() {
            current.push(remaining / weights[pos]);
            if out.len() == limit {
                return Err(ConservationError::StateSpaceTooLarge { limit });
            }
            out.push(current.clone());
            current.pop();
            return Ok(());
        }
        for x in 0..=remaining / weights[pos] {
            current.push(x);
            rec(weights, suffix_gcd, pos + 1, remaining - x * weights[pos], current, out, limit)?;
            current.pop();
        }
        Ok(())
    }
    let mut suffix_gcd = vec![0u64; weights.len()];
    let mut g = 0u64;
    for i in (0..weights.len()).rev() {
        g = g.gcd(&weights[i]);
        suffix_gcd[i] = g;
    }
    let mut out = Vec::new();
    rec(weights, &suffix_gcd, 0, total, &mut Vec::new(), &mut out, limit)?;
    Ok(out)
}

/// The conserved state set: the product over relations of
/// `{x >= 0 : gamma . x = C}`, in lexicographic order of the concatenated
/// conserved block.
pub fn enumerate_conserved_states(cs: &ConservedStructure, max_states: usize) -> Result<Vec<Vec<u64>>, ConservationError> {
    if cs.totals.len() != cs.gammas.len() {
        return Err(ConservationError::TotalsMismatch { expected: cs.gammas.len(), got: cs.totals.len() });
    }
    let mut product: Vec<Vec<u64>> = vec![Vec::new()];
    for r in 0..cs.gammas.len() {
        let block = weighted_compositions(&cs.relation_weights(r), cs.totals[r], max_states)?;
        if block.is_empty() {
            return Ok(Vec::new());
        }
        if product.len().saturating_mul(block.len()) > max_states {
            return Err(ConservationError::StateSpaceTooLarge { limit: max_states });
        }
        product = product
            .iter()
            .flat_map(|head| {
                block.iter().map(move |tail| {
                    let mut v = head.clone();
                    v.extend_from_slice(tail);
                    v
                })
            })
            .collect();
    }
    Ok(product)
}

/// Exact check `gamma^T M = 0` and `gamma >= 0`, `gamma != 0`.
pub fn is_conservation_vector(m: &IntMatrix, gamma: &[i64]) -> bool {
    gamma.len() == m.rows()
        && gamma.iter().all(|&g| g >= 0)
        && gamma.iter().any(|&g| g > 0)
        && (0..m.cols()).all(|k| (0..m.rows()).map(|i| gamma[i] * m[(i, k)]).sum::<i64>() == 0)
}
