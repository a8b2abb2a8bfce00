//! Negative drift: reaction classification, the drift matrices and the
//! linear Foster-Lyapunov certificate `V(x) = v . x`.

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::conservation::ConservedStructure;
use crate::linalg::{dot, solve_lfp, IntMatrix, LfpProblem, RationalMatrix};
use crate::network::ReactionNetwork;
use crate::rational::{format_rational, int, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DriftError {
    #[error("reaction {reaction} consumes {order} molecules; at most 2 are supported")]
    UnsupportedReactionOrder { reaction: usize, order: u32 },
    #[error("linear feasibility solver failed: {0}")]
    Solver(String),
}

/// Partition of the reactions (zero-based indices, ascending).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactionClassification {
    /// One molecule of an unconserved species consumed.
    pub unary_unconserved: Vec<usize>,
    /// Two molecules consumed.
    pub binary: Vec<usize>,
    /// Constitutive reactions and unary reactions of conserved species.
    pub remainder: Vec<usize>,
    /// For each unary unconserved reaction, the index of its reactant.
    pub reactant_of: Vec<(usize, usize)>,
}

pub fn classify_reactions(net: &ReactionNetwork, cs: &ConservedStructure) -> Result<ReactionClassification, DriftError> {
    let d_u = cs.unconserved_count;
    let mut rc = ReactionClassification {
        unary_unconserved: Vec::new(),
        binary: Vec::new(),
        remainder: Vec::new(),
        reactant_of: Vec::new(),
    };
    for (k, r) in net.reactions().iter().enumerate() {
        match r.order() {
            0 => rc.remainder.push(k),
            1 => {
                let i = r.reactants.iter().position(|&c| c == 1).expect("order one");
                if i < d_u {
                    rc.unary_unconserved.push(k);
                    rc.reactant_of.push((k, i));
                } else {
                    rc.remainder.push(k);
                }
            }
            2 => rc.binary.push(k),
            order => return Err(DriftError::UnsupportedReactionOrder { reaction: k, order }),
        }
    }
    Ok(rc)
}

/// Drift data over the reordered species (conserved last).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriftSystem {
    pub unconserved_count: usize,
    /// `d_u x d`: sum over unary unconserved reactions of
    /// `rate * e_reactant * change^T`.
    pub a: RationalMatrix,
    /// `d x K_q`, columns are the changes of the binary reactions.
    pub mq: IntMatrix,
    /// `d_u x d`: `[-I 0]`. The block has `d_u` rows; the right-hand side of
    /// the stacked system has `2 d_u` entries.
    pub b: RationalMatrix,
    /// `[A; B] v <= -1`, `M_q^T v = 0`.
    pub f3: LfpProblem,
    pub gammas: Vec<Vec<i64>>,
}

pub fn build_drift_system(rc: &ReactionClassification, net: &ReactionNetwork, cs: &ConservedStructure) -> DriftSystem {
    let d = net.dim();
    let d_u = cs.unconserved_count;
    let mut a = RationalMatrix::zeros(d_u, d);
    for &(k, i) in &rc.reactant_of {
        let r = &net.reactions()[k];
        for (j, c) in r.change().into_iter().enumerate() {
            if c != 0 {
                a[(i, j)] += &r.rate * int(c);
            }
        }
    }
    let columns: Vec<Vec<i64>> = rc.binary.iter().map(|&k| net.reactions()[k].change()).collect();
    let mq = IntMatrix::from_columns(d, &columns);
    let mut b = RationalMatrix::zeros(d_u, d);
    for i in 0..d_u {
        b[(i, i)] = int(-1);
    }
    let f3 = LfpProblem::new(
        a.vstack(&b),
        vec![int(-1); 2 * d_u],
        mq.transpose().to_rational(),
        vec![Rational::zero(); columns.len()],
    )
    .expect("consistent dimensions");
    // mq.transpose() of a d x 0 matrix is 0 x d; keep the column count right.
    let f3 = if columns.is_empty() {
        LfpProblem::new(f3.a, f3.b, RationalMatrix::zeros(0, d), Vec::new()).expect("consistent dimensions")
    } else {
        f3
    };
    DriftSystem { unconserved_count: d_u, a, mq, b, f3, gammas: cs.gammas.clone() }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LyapunovCertificate {
    /// Feasible point of the drift problem (or a supplied witness).
    pub w: Vec<Rational>,
    /// `w + sum_r alpha_r gamma_r`, strictly positive.
    pub v_positive: Vec<Rational>,
    pub alphas: Vec<Rational>,
    /// `A w`, every entry negative.
    pub drift_margin: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DriftOutcome {
    Certified(LyapunovCertificate),
    Infeasible,
}

/// For each relation, the smallest power of two `alpha` that makes the
/// conserved entries of `w + alpha * gamma` positive.
pub fn positivize(ds: &DriftSystem, w: &[Rational]) -> LyapunovCertificate {
    let mut v = w.to_vec();
    let mut alphas = Vec::with_capacity(ds.gammas.len());
    for g in &ds.gammas {
        let mut alpha = int(1);
        while g.iter().zip(w).any(|(&gi, wi)| gi > 0 && !(wi + &alpha * int(gi)).is_positive()) {
            alpha *= int(2);
        }
        for (vi, &gi) in v.iter_mut().zip(g) {
            if gi != 0 {
                *vi += &alpha * int(gi);
            }
        }
        alphas.push(alpha);
    }
    LyapunovCertificate { drift_margin: ds.a.mul_vec(w), w: w.to_vec(), v_positive: v, alphas }
}

/// Solves the drift problem; a feasible point is turned into a certificate.
pub fn check_negative_drift(ds: &DriftSystem) -> Result<DriftOutcome, DriftError> {
    let outcome = solve_lfp(&ds.f3).map_err(|e| DriftError::Solver(e.to_string()))?;
    Ok(match outcome.witness {
        Some(w) => DriftOutcome::Certified(positivize(ds, &w)),
        None => DriftOutcome::Infeasible,
    })
}

/// First violated condition on a candidate `w`: unconserved entries
/// positive, `A w < 0`, `w^T M_q = 0`.
pub fn witness_violation(ds: &DriftSystem, w: &[Rational], names: &[String]) -> Option<String> {
    let d = ds.a.cols();
    if w.len() != d {
        return Some(format!("witness has {} entries, expected {d}", w.len()));
    }
    if let Some(i) = (0..ds.unconserved_count).find(|&i| !w[i].is_positive()) {
        return Some(format!(
            "B-block row {}: entry for {} is {}, must be positive",
            i + 1,
            names[i],
            format_rational(&w[i])
        ));
    }
    let aw = ds.a.mul_vec(w);
    if let Some(i) = (0..aw.len()).find(|&i| !aw[i].is_negative()) {
        return Some(format!(
            "A-block row {} ({}): (A w) = {}, must be negative",
            i + 1,
            names[i],
            format_rational(&aw[i])
        ));
    }
    mq_violation(ds, w)
}

fn mq_violation(ds: &DriftSystem, v: &[Rational]) -> Option<String> {
    (0..ds.mq.cols()).find_map(|j| {
        let col: Vec<Rational> = ds.mq.column(j).into_iter().map(int).collect();
        let s = dot(&col, v);
        (!s.is_zero()).then(|| format!("M_q column {}: change . w = {}, must be 0", j + 1, format_rational(&s)))
    })
}

/// Re-checks a certificate by exact substitution: `v > 0`, `A v < 0`,
/// `v^T M_q = 0`, and `v = w + sum alpha_r gamma_r` with every `alpha_r > 0`.
pub fn verify_certificate(cert: &LyapunovCertificate, ds: &DriftSystem) -> bool {
    let d = ds.a.cols();
    if cert.v_positive.len() != d || cert.w.len() != d || cert.alphas.len() != ds.gammas.len() {
        return false;
    }
    if !cert.v_positive.iter().all(Signed::is_positive) {
        return false;
    }
    if !ds.a.mul_vec(&cert.v_positive).iter().all(Signed::is_negative) {
        return false;
    }
    if mq_violation(ds, &cert.v_positive).is_some() {
        return false;
    }
    if !cert.alphas.iter().all(Signed::is_positive) {
        return false;
    }
    let mut rebuilt = cert.w.clone();
    for (g, alpha) in ds.gammas.iter().zip(&cert.alphas) {
        for (x, &gi) in rebuilt.iter_mut().zip(g) {
            *x += alpha * int(gi);
        }
    }
    rebuilt == cert.v_positive
}

/// `sum_k lambda_k(x) (V(x + change_k) - V(x))` for `V(x) = v . x`, exactly.
pub fn generator_drift(net: &ReactionNetwork, v: &[Rational], x: &[u64]) -> Rational {
    net.reactions()
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let change: Vec<Rational> = r.change().into_iter().map(int).collect();
            net.propensity(k, x).expect("valid state") * dot(&change, v)
        })
        .fold(Rational::zero(), |acc, t| acc + t)
}
