//! Irreducibility of the candidate state space `N^d` or `N^{d_u} x E_c`.
//!
//! Necessary conditions (rank, integer lattice span, positive kernel, a
//! single conserved class at full availability) are decided exactly; the
//! sufficient part is the forward and inverse level constructions.

use std::collections::HashMap;

use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conservation::ConservedStructure;
use crate::linalg::{
    hermite_normal_form, lattice_spans_full_from, rank, solve_lfp, HnfResult, IntMatrix, LfpOutcome, LfpProblem,
    RationalMatrix,
};
use crate::network::{inverse_structure, NetworkStructure, ReactionNetwork};
use crate::rational::{int, Rational};

/// Above this many conserved states the reachability matrix is not
/// materialized; classes still come from the transition graph.
pub const OMEGA_LIMIT: usize = 512;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IrreducibilityError {
    #[error("linear feasibility solver failed: {0}")]
    Solver(String),
    #[error("conserved structure has no totals attached")]
    MissingTotals,
}

/// Reactions with reactants available: unconserved reactants inside
/// `available` (a mask over the `d_u` unconserved species) and, when a
/// conserved state `e` is given, `e >= reactants` on the conserved block.
pub fn fireable_reactions(s: &NetworkStructure, d_u: usize, available: &[bool], e: Option<&[u64]>) -> Vec<usize> {
    (0..s.len()).filter(|&k| is_fireable(s.reactants(k), d_u, available, e)).collect()
}

fn is_fireable(reactants: &[u32], d_u: usize, available: &[bool], e: Option<&[u64]>) -> bool {
    reactants[..d_u].iter().zip(available).all(|(&r, &a)| r == 0 || a)
        && e.is_none_or(|e| reactants[d_u..].iter().zip(e).all(|(&r, &x)| u64::from(r) <= x))
}

/// Boolean square matrix stored as bitset rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BoolMatrix {
    pub fn zeros(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Self { n, words, bits: vec![0; n * words] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i);
        }
        m
    }

    pub fn from_adjacency(adj: &[Vec<usize>]) -> Self {
        let mut m = Self::zeros(adj.len());
        for (i, succ) in adj.iter().enumerate() {
            for &j in succ {
                m.set(i, j);
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    pub fn or(&self, other: &Self) -> Self {
        Self { n: self.n, words: self.words, bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a | b).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                if self.get(i, k) {
                    let src = &other.bits[k * self.words..(k + 1) * self.words];
                    let dst = &mut out.bits[i * self.words..(i + 1) * self.words];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d |= s;
                    }
                }
            }
        }
        out
    }

    /// Boolean power by repeated squaring.
    pub fn pow(&self, mut exp: usize) -> Self {
        let mut result = Self::identity(self.n);
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                result = result.mul(&base);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base);
            }
        }
        result
    }
}

/// `Omega = (I + Z)^(n - 1)`: entry (i, j) is set iff j is reachable from i.
pub fn reachability_matrix(z: &BoolMatrix) -> BoolMatrix {
    let n = z.size();
    BoolMatrix::identity(n).or(z).pow(n.saturating_sub(1))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConservedClassAnalysis {
    /// Unconserved species assumed abundant.
    pub available: Vec<usize>,
    /// Successor lists of the transition matrix `Z(A)`.
    pub transitions: Vec<Vec<usize>>,
    /// Reachability pattern, present when the state count is at most
    /// [`OMEGA_LIMIT`].
    pub reachability: Option<BoolMatrix>,
    /// Mutual-reachability classes, each sorted, ordered by smallest member.
    pub classes: Vec<Vec<usize>>,
    pub closed: Vec<bool>,
}

impl ConservedClassAnalysis {
    /// Number of closed classes.
    pub fn eta(&self) -> usize {
        self.closed.iter().filter(|&&c| c).count()
    }

    pub fn closed_classes(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.classes.iter().zip(&self.closed).filter(|(_, &c)| c).map(|(cl, _)| cl)
    }

    /// True when a single class covers every conserved state.
    pub fn is_single_class(&self) -> bool {
        self.classes.len() == 1
    }
}

fn mask_of(set: &[usize], n: usize) -> Vec<bool> {
    let mut m = vec![false; n];
    for &i in set {
        m[i] = true;
    }
    m
}

/// Transition graph of the conserved block when the species in `available`
/// are abundant, with its classes and their closed/open status.
pub fn conserved_class_analysis(
    s: &NetworkStructure,
    cs: &ConservedStructure,
    available: &[usize],
) -> ConservedClassAnalysis {
    let d_u = cs.unconserved_count;
    let states = &cs.conserved_states;
    let mask = mask_of(available, d_u);
    let index: HashMap<&[u64], usize> = states.iter().enumerate().map(|(i, e)| (e.as_slice(), i)).collect();
    let transitions: Vec<Vec<usize>> = states
        .iter()
        .map(|e| {
            let mut succ: Vec<usize> = (0..s.len())
                .filter(|&k| is_fireable(s.reactants(k), d_u, &mask, Some(e)))
                .map(|k| {
                    let target: Vec<u64> = e
                        .iter()
                        .zip(&s.reactants(k)[d_u..])
                        .zip(&s.products(k)[d_u..])
                        .map(|((&x, &r), &p)| x - u64::from(r) + u64::from(p))
                        .collect();
                    *index.get(target.as_slice()).expect("reactions preserve the conserved totals")
                })
                .collect();
            succ.sort_unstable();
            succ.dedup();
            succ
        })
        .collect();
    let (classes, closed) = classes_of(&transitions);
    let reachability =
        (states.len() <= OMEGA_LIMIT).then(|| reachability_matrix(&BoolMatrix::from_adjacency(&transitions)));
    let mut available = available.to_vec();
    available.sort_unstable();
    ConservedClassAnalysis { available, transitions, reachability, classes, closed }
}

/// Strongly connected components of a digraph, each sorted and ordered by
/// smallest member, with a closed flag (no edge leaves the class).
pub fn classes_of(adj: &[Vec<usize>]) -> (Vec<Vec<usize>>, Vec<bool>) {
    let mut g = DiGraph::<(), ()>::with_capacity(adj.len(), 0);
    let nodes: Vec<_> = (0..adj.len()).map(|_| g.add_node(())).collect();
    for (i, succ) in adj.iter().enumerate() {
        for &j in succ {
            g.add_edge(nodes[i], nodes[j], ());
        }
    }
    let mut classes: Vec<Vec<usize>> = kosaraju_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    classes.sort_by_key(|c| c[0]);
    let mut class_of = vec![0; adj.len()];
    for (c, members) in classes.iter().enumerate() {
        for &m in members {
            class_of[m] = c;
        }
    }
    let closed = classes
        .iter()
        .enumerate()
        .map(|(c, members)| members.iter().all(|&i| adj[i].iter().all(|&j| class_of[j] == c)))
        .collect();
    (classes, closed)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelDecomposition {
    /// `G_1, G_2, ...` (species indices, sorted). Never contains an empty level.
    pub levels: Vec<Vec<usize>>,
    /// `H_l`, the union of the first `l` levels.
    pub cumulative: Vec<Vec<usize>>,
    pub exhaustive: bool,
    pub uncovered: Vec<usize>,
}

impl LevelDecomposition {
    fn from_levels(levels: Vec<Vec<usize>>, n: usize) -> Self {
        let mut cumulative = Vec::with_capacity(levels.len());
        let mut acc: Vec<usize> = Vec::new();
        for g in &levels {
            acc.extend(g);
            acc.sort_unstable();
            cumulative.push(acc.clone());
        }
        let covered = mask_of(&acc, n);
        let uncovered: Vec<usize> = (0..n).filter(|&i| !covered[i]).collect();
        Self { levels, cumulative, exhaustive: uncovered.is_empty(), uncovered }
    }
}

/// Level construction without conservation: species enter `G_l` when some
/// reaction with all reactants in `H_{l-1}` produces them.
pub fn level_decomposition(s: &NetworkStructure) -> LevelDecomposition {
    let d = s.pairs.first().map_or(0, |p| p.0.len());
    let reactant_lists: Vec<Vec<usize>> =
        (0..s.len()).map(|k| (0..d).filter(|&i| s.reactants(k)[i] > 0).collect()).collect();
    let mut in_h = vec![false; d];
    let mut used = vec![false; s.len()];
    let mut levels = Vec::new();
    loop {
        let mut level = Vec::new();
        for k in 0..s.len() {
            if used[k] || !reactant_lists[k].iter().all(|&i| in_h[i]) {
                continue;
            }
            used[k] = true;
            level.extend((0..d).filter(|&i| s.products(k)[i] > 0 && !in_h[i]));
        }
        level.sort_unstable();
        level.dedup();
        if level.is_empty() {
            break;
        }
        for &i in &level {
            in_h[i] = true;
        }
        levels.push(level);
    }
    LevelDecomposition::from_levels(levels, d)
}

/// Level construction over the unconserved species: a species enters `G_l`
/// only if every closed class of the conserved dynamics (with `H_{l-1}`
/// abundant) admits a reaction producing it.
pub fn level_decomposition_conserved(s: &NetworkStructure, cs: &ConservedStructure) -> LevelDecomposition {
    let d_u = cs.unconserved_count;
    let mut h: Vec<usize> = Vec::new();
    let mut levels = Vec::new();
    loop {
        let analysis = conserved_class_analysis(s, cs, &h);
        let mask = mask_of(&h, d_u);
        let mut candidates: Option<Vec<bool>> = None;
        for class in analysis.closed_classes() {
            let mut producible = vec![false; d_u];
            for &e in class {
                let state = &cs.conserved_states[e];
                for k in 0..s.len() {
                    if is_fireable(s.reactants(k), d_u, &mask, Some(state)) {
                        for (i, p) in producible.iter_mut().enumerate() {
                            *p |= s.products(k)[i] > 0;
                        }
                    }
                }
            }
            candidates = Some(match candidates {
                None => producible,
                Some(c) => c.iter().zip(&producible).map(|(a, b)| *a && *b).collect(),
            });
        }
        let level: Vec<usize> = match candidates {
            Some(c) => (0..d_u).filter(|&i| c[i] && !mask[i]).collect(),
            None => Vec::new(),
        };
        if level.is_empty() {
            break;
        }
        h.extend(&level);
        h.sort_unstable();
        levels.push(level);
    }
    LevelDecomposition::from_levels(levels, d_u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IrreducibilityStatus {
    IrreducibleProven,
    NecessaryConditionFailed,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrreducibilityCondition {
    /// Rank of the (reduced) stoichiometry matrix equals the number of
    /// unconserved species.
    Rank,
    /// Integer column span is the full lattice.
    Lattice,
    /// Strictly positive kernel vector exists.
    PositiveKernel,
    /// The conserved state set for the given totals is nonempty.
    NonemptyConservedSpace,
    /// With all unconserved species abundant, one class covers every
    /// conserved state.
    SingleConservedClass,
    ForwardExhaustive,
    InverseExhaustive,
}

impl IrreducibilityCondition {
    pub fn is_necessary(self) -> bool {
        !matches!(self, Self::ForwardExhaustive | Self::InverseExhaustive)
    }

    pub fn describe(self) -> &'static str {
        match self {
            Self::Rank => "rank of the stoichiometry matrix equals the number of unconserved species",
            Self::Lattice => "integer column span of the stoichiometry matrix is the full lattice",
            Self::PositiveKernel => "stoichiometry matrix has a strictly positive kernel vector",
            Self::NonemptyConservedSpace => "conserved state set is nonempty for the given totals",
            Self::SingleConservedClass => "conserved dynamics forms a single class when all species are abundant",
            Self::ForwardExhaustive => "network is exhaustive (forward level construction)",
            Self::InverseExhaustive => "inverse network is exhaustive (inverse level construction)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrreducibilityVerdict {
    pub status: IrreducibilityStatus,
    pub failed_condition: Option<IrreducibilityCondition>,
    /// Every condition evaluated, in order, with its outcome.
    pub checks: Vec<(IrreducibilityCondition, bool)>,
    /// Stoichiometry restricted to the unconserved species (`M` or `M-bar`).
    pub reduced_stoichiometry: IntMatrix,
    pub rank: usize,
    pub hnf: Option<HnfResult>,
    pub kernel: Option<LfpOutcome>,
    pub full_availability_classes: Option<ConservedClassAnalysis>,
    pub forward_levels: Option<LevelDecomposition>,
    pub inverse_levels: Option<LevelDecomposition>,
}

/// `{v : M v = 0, v >= 1}`
pub fn positive_kernel_problem(m: &IntMatrix) -> LfpProblem {
    let k = m.cols();
    let mut a = RationalMatrix::zeros(k, k);
    for i in 0..k {
        a[(i, i)] = int(-1);
    }
    LfpProblem::new(a, vec![int(-1); k], m.to_rational(), vec![Rational::from_integer(0.into()); m.rows()])
        .expect("consistent dimensions")
}

/// Runs rank, lattice, kernel, conserved-class and level checks in that
/// order on a network whose conserved species are already last.
pub fn check_irreducibility(
    net: &ReactionNetwork,
    cs: &ConservedStructure,
) -> Result<IrreducibilityVerdict, IrreducibilityError> {
    if cs.has_conservation() && cs.totals.len() != cs.gammas.len() {
        return Err(IrreducibilityError::MissingTotals);
    }
    let d_u = cs.unconserved_count;
    let structure = net.structure();
    let m = net.stoichiometry_matrix();
    let reduced = m.select_rows(&(0..d_u).collect::<Vec<_>>());
    let mut v = IrreducibilityVerdict {
        status: IrreducibilityStatus::IrreducibleProven,
        failed_condition: None,
        checks: Vec::new(),
        rank: rank(&reduced.to_rational()),
        reduced_stoichiometry: reduced,
        hnf: None,
        kernel: None,
        full_availability_classes: None,
        forward_levels: None,
        inverse_levels: None,
    };

    fn record(v: &mut IrreducibilityVerdict, c: IrreducibilityCondition, ok: bool) -> bool {
        v.checks.push((c, ok));
        if !ok {
            v.failed_condition = Some(c);
            v.status = if c.is_necessary() {
                IrreducibilityStatus::NecessaryConditionFailed
            } else {
                IrreducibilityStatus::Inconclusive
            };
        }
        ok
    }

    let full_rank = v.rank == d_u;
    if !record(&mut v, IrreducibilityCondition::Rank, full_rank) {
        return Ok(v);
    }
    let hnf = hermite_normal_form(&v.reduced_stoichiometry);
    let lattice = lattice_spans_full_from(&hnf, d_u);
    v.hnf = Some(hnf);
    if !record(&mut v, IrreducibilityCondition::Lattice, lattice) {
        return Ok(v);
    }
    let kernel = solve_lfp(&positive_kernel_problem(&v.reduced_stoichiometry))
        .map_err(|e| IrreducibilityError::Solver(e.to_string()))?;
    let feasible = kernel.is_feasible();
    v.kernel = Some(kernel);
    if !record(&mut v, IrreducibilityCondition::PositiveKernel, feasible) {
        return Ok(v);
    }

    let inverse = inverse_structure(&structure);
    if cs.has_conservation() {
        if !record(&mut v, IrreducibilityCondition::NonemptyConservedSpace, !cs.conserved_states.is_empty()) {
            return Ok(v);
        }
        let all: Vec<usize> = (0..d_u).collect();
        let analysis = conserved_class_analysis(&structure, cs, &all);
        let single = analysis.is_single_class();
        v.full_availability_classes = Some(analysis);
        if !record(&mut v, IrreducibilityCondition::SingleConservedClass, single) {
            return Ok(v);
        }
        let forward = level_decomposition_conserved(&structure, cs);
        let backward = level_decomposition_conserved(&inverse, cs);
        finish_levels(&mut v, forward, backward, record);
    } else {
        let forward = level_decomposition(&structure);
        let backward = level_decomposition(&inverse);
        finish_levels(&mut v, forward, backward, record);
    }
    Ok(v)
}

fn finish_levels(
    v: &mut IrreducibilityVerdict,
    forward: LevelDecomposition,
    backward: LevelDecomposition,
    record: fn(&mut IrreducibilityVerdict, IrreducibilityCondition, bool) -> bool,
) {
    let (fwd_ok, inv_ok) = (forward.exhaustive, backward.exhaustive);
    v.forward_levels = Some(forward);
    v.inverse_levels = Some(backward);
    if record(v, IrreducibilityCondition::ForwardExhaustive, fwd_ok) {
        record(v, IrreducibilityCondition::InverseExhaustive, inv_ok);
    }
}

impl IrreducibilityVerdict {
    /// Re-derives every certificate carried by a proven verdict.
    pub fn self_check(&self, net: &ReactionNetwork, cs: &ConservedStructure) -> bool {
        if self.status != IrreducibilityStatus::IrreducibleProven {
            return true;
        }
        let d_u = cs.unconserved_count;
        let Some(hnf) = &self.hnf else { return false };
        if !hnf.check_product(&self.reduced_stoichiometry) || !hnf.check_shape() || !lattice_spans_full_from(hnf, d_u) {
            return false;
        }
        let Some(w) = self.kernel.as_ref().and_then(|k| k.witness.as_ref()) else { return false };
        if !positive_kernel_problem(&self.reduced_stoichiometry).is_satisfied_by(w) {
            return false;
        }
        let structure = net.structure();
        let inverse = inverse_structure(&structure);
        let (fwd, inv) = if cs.has_conservation() {
            let all: Vec<usize> = (0..d_u).collect();
            if !conserved_class_analysis(&structure, cs, &all).is_single_class() {
                return false;
            }
            (level_decomposition_conserved(&structure, cs), level_decomposition_conserved(&inverse, cs))
        } else {
            (level_decomposition(&structure), level_decomposition(&inverse))
        };
        fwd.exhaustive
            && inv.exhaustive
            && self.forward_levels.as_ref() == Some(&fwd)
            && self.inverse_levels.as_ref() == Some(&inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conservation::{find_conservation_relations, reorder_conserved_last};
    use crate::network::parse_network;

    fn prepared(text: &str, totals: &[u64]) -> (ReactionNetwork, ConservedStructure) {
        let net = parse_network(text).unwrap();
        let g = find_conservation_relations(&net.stoichiometry_matrix()).unwrap();
        let (net, cs) = reorder_conserved_last(&net, &g);
        let cs = if g.is_empty() { cs } else { cs.with_totals(totals, 1000).unwrap() };
        (net, cs)
    }

    const BD: &str = "0 -> S ; 1\nS -> 0 ; 1";
    const PB: &str = "0 -> S ; 1";

    #[test]
    fn birth_death_fireable_and_levels() {
        let net = parse_network(BD).unwrap();
        assert_eq!(fireable_reactions(&net.structure(), 1, &[false], None), vec![0]);
        let levels = level_decomposition(&net.structure());
        assert_eq!(levels.levels, vec![vec![0]]);
        assert!(levels.exhaustive);
    }

    #[test]
    fn pure_birth_inverse_is_not_exhaustive() {
        let s = parse_network(PB).unwrap().structure();
        assert!(level_decomposition(&s).exhaustive);
        let inv = level_decomposition(&inverse_structure(&s));
        assert!(inv.levels.is_empty());
        assert!(!inv.exhaustive);
        assert_eq!(inv.uncovered, vec![0]);
    }

    #[test]
    fn autocatalytic_species_is_uncovered() {
        let s = parse_network("0 -> A ; 1\nA + B -> 2*B ; 1").unwrap().structure();
        let l = level_decomposition(&s);
        assert_eq!(l.levels, vec![vec![0]]);
        assert_eq!(l.cumulative, vec![vec![0]]);
        assert!(!l.exhaustive);
        assert_eq!(l.uncovered, vec![1]);
    }

    #[test]
    fn single_conserved_state() {
        let net = parse_network("species: X G\nG -> G + X ; 1\nX -> 0 ; 1").unwrap();
        let (net, cs) = reorder_conserved_last(&net, &[vec![0, 1]]);
        let cs = cs.with_totals(&[1], 10).unwrap();
        assert_eq!(cs.conserved_states, vec![vec![1]]);
        let a = conserved_class_analysis(&net.structure(), &cs, &[]);
        assert_eq!(a.transitions, vec![vec![0]]);
        assert_eq!(a.classes, vec![vec![0]]);
        assert_eq!(a.closed, vec![true]);
        assert_eq!(a.eta(), 1);
    }

    #[test]
    fn trivial_conserved_levels_match_plain_levels() {
        for text in [BD, PB, "0 -> A ; 1\nA + B -> 2*B ; 1", "0 -> A ; 1\nA -> B ; 1\nB -> 0 ; 2\nA + B -> 0 ; 1"] {
            let net = parse_network(text).unwrap();
            let cs = ConservedStructure::trivial(net.dim());
            for s in [net.structure(), inverse_structure(&net.structure())] {
                assert_eq!(level_decomposition(&s), level_decomposition_conserved(&s, &cs), "{text}");
            }
        }
    }

    #[test]
    fn verdicts_for_small_networks() {
        let (net, cs) = prepared(BD, &[]);
        let v = check_irreducibility(&net, &cs).unwrap();
        assert_eq!(v.status, IrreducibilityStatus::IrreducibleProven);
        assert!(v.self_check(&net, &cs));

        let (net, cs) = prepared(PB, &[]);
        let v = check_irreducibility(&net, &cs).unwrap();
        assert_eq!(v.status, IrreducibilityStatus::NecessaryConditionFailed);
        assert_eq!(v.failed_condition, Some(IrreducibilityCondition::PositiveKernel));

        let (net, cs) = prepared("0 -> 2*S ; 1\n2*S -> 0 ; 1", &[]);
        let v = check_irreducibility(&net, &cs).unwrap();
        assert_eq!(v.failed_condition, Some(IrreducibilityCondition::Lattice));
        assert_eq!(v.status, IrreducibilityStatus::NecessaryConditionFailed);

        let (net, cs) = prepared("0 -> A + B ; 1\nA + B -> 0 ; 1", &[]);
        let v = check_irreducibility(&net, &cs).unwrap();
        assert_eq!(v.failed_condition, Some(IrreducibilityCondition::Rank));

        let (net, cs) = prepared("0 -> A ; 1\nA + B -> 2*B ; 1\nB -> 0 ; 1\nA -> 0 ; 1", &[]);
        let v = check_irreducibility(&net, &cs).unwrap();
        assert_eq!(v.status, IrreducibilityStatus::Inconclusive);
        assert_eq!(v.failed_condition, Some(IrreducibilityCondition::ForwardExhaustive));
    }

    #[test]
    fn conserved_networks_that_pass() {
        let binding = "species: X G0 G1\nG0 + X -> G1 ; 1\nG1 -> G0 + X ; 1\n0 -> X ; 1\nX -> 0 ; 1";
        let switching = "species: X G0 G1\nG0 -> G1 ; 1\nG1 -> G0 ; 1\n0 -> X ; 1\nX -> 0 ; 1\nG1 + X -> G1 ; 1";
        for text in [binding, switching] {
            let (net, cs) = prepared(text, &[1]);
            let v = check_irreducibility(&net, &cs).unwrap();
            assert_eq!(v.status, IrreducibilityStatus::IrreducibleProven, "{text}: {:?}", v.checks);
            assert!(v.self_check(&net, &cs));
        }
        // Total zero leaves a single conserved state.
        let (net, cs) = prepared(binding, &[0]);
        assert_eq!(cs.conserved_states, vec![vec![0, 0]]);
        let v = check_irreducibility(&net, &cs).unwrap();
        assert_eq!(v.status, IrreducibilityStatus::IrreducibleProven);
    }

    #[test]
    fn missing_totals() {
        let net = parse_network("A -> B ; 1\nB -> A ; 1").unwrap();
        let g = find_conservation_relations(&net.stoichiometry_matrix()).unwrap();
        let (net, cs) = reorder_conserved_last(&net, &g);
        assert_eq!(check_irreducibility(&net, &cs), Err(IrreducibilityError::MissingTotals));
    }

    #[test]
    fn one_way_conserved_switch_fails_single_class() {
        let text = "species: X G0 G1\nG0 -> G1 ; 1\n0 -> X ; 1\nX -> 0 ; 1";
        let (net, cs) = prepared(text, &[1]);
        let v = check_irreducibility(&net, &cs).unwrap();
        assert_eq!(v.failed_condition, Some(IrreducibilityCondition::SingleConservedClass));
        assert_eq!(v.status, IrreducibilityStatus::NecessaryConditionFailed);
        let classes = v.full_availability_classes.unwrap();
        // (0,1) closed, (1,0) open.
        assert_eq!(classes.classes, vec![vec![0], vec![1]]);
        assert_eq!(classes.closed, vec![true, false]);
        assert_eq!(classes.eta(), 1);
    }

    #[test]
    fn empty_conserved_space() {
        let text = "species: X G0 G1\n2*G0 -> 3*G1 ; 1\n3*G1 -> 2*G0 ; 1\n0 -> X ; 1\nX -> 0 ; 1";
        let (net, cs) = prepared(text, &[1]);
        assert_eq!(cs.gammas, vec![vec![0, 3, 2]]);
        assert!(cs.conserved_states.is_empty());
        let v = check_irreducibility(&net, &cs).unwrap();
        assert_eq!(v.failed_condition, Some(IrreducibilityCondition::NonemptyConservedSpace));
        assert_eq!(v.status, IrreducibilityStatus::NecessaryConditionFailed);
    }

    #[test]
    fn omega_matches_reachability_on_a_chain() {
        let adj = vec![vec![1], vec![2], vec![], vec![0]];
        let omega = reachability_matrix(&BoolMatrix::from_adjacency(&adj));
        assert!(omega.get(0, 2) && omega.get(3, 2) && !omega.get(2, 0) && omega.get(2, 2));
        let (classes, closed) = classes_of(&adj);
        assert_eq!(classes, vec![vec![0], vec![1], vec![2], vec![3]]);
        assert_eq!(closed, vec![false, false, true, false]);
    }
}
