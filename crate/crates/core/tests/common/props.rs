//! Strategies and per-case checks shared by the property targets and the
//! acceptance runner.

use std::collections::VecDeque;

use ergocheck::conservation::{find_conservation_relations, reorder_conserved_last};
use ergocheck::drift::{
    build_drift_system, check_negative_drift, classify_reactions, verify_certificate, DriftOutcome, LyapunovCertificate,
};
use ergocheck::irreducibility::{reachability_matrix, BoolMatrix};
use ergocheck::linalg::{hermite_normal_form, lattice_spans_full, solve_lfp, IntMatrix, LfpProblem, RationalMatrix};
use ergocheck::network::{Reaction, ReactionNetwork};
use ergocheck::oracle::gillespie_simulate;
use ergocheck::rational::{frac, int, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use super::{det, gcd, inverse, q, rank, solve, subsets, Q};

// ---- Hermite normal form

pub fn int_matrix() -> impl Strategy<Value = IntMatrix> {
    (1usize..=6, 1usize..=8, prop::bool::ANY).prop_flat_map(|(r, c, sparse)| {
        let entry = if sparse { prop_oneof![6 => Just(0i64), 1 => -3i64..=3].boxed() } else { (-6i64..=6).boxed() };
        prop::collection::vec(prop::collection::vec(entry, c), r).prop_map(IntMatrix::from_rows)
    })
}

fn to_q(m: &IntMatrix) -> Vec<Vec<Q>> {
    m.to_rows().into_iter().map(|r| r.into_iter().map(q).collect()).collect()
}

fn big_to_q(m: &[Vec<BigInt>]) -> Vec<Vec<Q>> {
    m.iter().map(|r| r.iter().map(|x| Q::from_integer(x.clone())).collect()).collect()
}

/// `Z^d` is spanned iff the rank is `d` and the maximal minors are coprime.
pub fn minors_gcd_is_one(m: &IntMatrix) -> bool {
    let d = m.rows();
    if m.cols() < d {
        return false;
    }
    let rows = to_q(m);
    let mut g = BigInt::zero();
    for cols in subsets(m.cols(), d) {
        let sub: Vec<Vec<Q>> = rows.iter().map(|r| cols.iter().map(|&c| r[c].clone()).collect()).collect();
        g = gcd(&g, &det(&sub).to_integer());
    }
    g.is_one()
}

pub fn check_hnf(m: &IntMatrix) -> Result<(), TestCaseError> {
    let h = hermite_normal_form(m);
    prop_assert!(h.check_product(m), "M U != H");
    prop_assert!(h.check_shape(), "not in Hermite form");
    let u = big_to_q(&h.u);
    prop_assert_eq!(det(&u).abs(), Q::one());
    // lattice preservation: M = H U^{-1} with U^{-1} integral
    let uinv = inverse(&u).expect("unimodular");
    prop_assert!(uinv.iter().flatten().all(|x| x.is_integer()));
    let hq = big_to_q(&h.h);
    let mq = to_q(m);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let s = (0..m.cols()).map(|k| &hq[i][k] * &uinv[k][j]).fold(Q::zero(), |a, b| a + b);
            prop_assert_eq!(&s, &mq[i][j]);
        }
    }
    prop_assert_eq!(h.rank(), rank(&mq));
    prop_assert_eq!(lattice_spans_full(m, m.rows()), minors_gcd_is_one(m));
    Ok(())
}

// ---- linear feasibility

/// Instances are confined to the box `-B <= v <= B`, so a nonempty feasible
/// set has a vertex solving some square subsystem of its constraints.
pub const BOX: i64 = 4;

#[derive(Debug, Clone)]
pub struct LfpInstance {
    pub a: Vec<Vec<i64>>,
    pub b: Vec<i64>,
    pub a_eq: Vec<Vec<i64>>,
    pub b_eq: Vec<i64>,
    pub n: usize,
}

pub fn lfp_instance() -> impl Strategy<Value = LfpInstance> {
    (1usize..=3, 0usize..=3, 0usize..=2).prop_flat_map(|(n, m, e)| {
        let row = prop::collection::vec(-3i64..=3, n);
        (
            prop::collection::vec(row.clone(), m),
            prop::collection::vec(-4i64..=4, m),
            prop::collection::vec(row, e),
            prop::collection::vec(-4i64..=4, e),
        )
            .prop_map(move |(a, b, a_eq, b_eq)| LfpInstance { a, b, a_eq, b_eq, n })
    })
}

fn rows_q(rows: &[Vec<i64>]) -> Vec<Vec<Q>> {
    rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
}

fn boxed(inst: &LfpInstance) -> (Vec<Vec<i64>>, Vec<i64>) {
    let mut a = inst.a.clone();
    let mut b = inst.b.clone();
    for i in 0..inst.n {
        for s in [1, -1] {
            let mut e = vec![0; inst.n];
            e[i] = s;
            a.push(e);
            b.push(BOX);
        }
    }
    (a, b)
}

fn satisfies(inst: &LfpInstance, v: &[Q]) -> bool {
    let (a, b) = boxed(inst);
    let dot = |r: &[i64]| r.iter().zip(v).map(|(&x, y)| q(x) * y).fold(Q::zero(), |s, t| s + t);
    a.iter().zip(&b).all(|(r, &bi)| dot(r) <= q(bi)) && inst.a_eq.iter().zip(&inst.b_eq).all(|(r, &bi)| dot(r) == q(bi))
}

/// Exact feasibility by trying every vertex candidate.
pub fn vertex_oracle(inst: &LfpInstance) -> bool {
    let (a, b) = boxed(inst);
    let mut all: Vec<(Vec<i64>, i64)> = inst.a_eq.iter().cloned().zip(inst.b_eq.iter().copied()).collect();
    all.extend(a.into_iter().zip(b));
    subsets(all.len(), inst.n).into_iter().any(|pick| {
        let rows: Vec<Vec<i64>> = pick.iter().map(|&i| all[i].0.clone()).collect();
        let rhs: Vec<Q> = pick.iter().map(|&i| q(all[i].1)).collect();
        solve(&rows_q(&rows), &rhs).is_some_and(|v| satisfies(inst, &v))
    })
}

/// Points with denominator 12 in the box; a hit proves feasibility.
pub fn grid_oracle(inst: &LfpInstance) -> bool {
    let steps = (2 * BOX * 12 + 1) as usize;
    let mut idx = vec![0usize; inst.n];
    loop {
        let v: Vec<Q> = idx.iter().map(|&k| Q::new((k as i64 - BOX * 12).into(), 12.into())).collect();
        if satisfies(inst, &v) {
            return true;
        }
        let mut i = 0;
        loop {
            if i == inst.n {
                return false;
            }
            idx[i] += 1;
            if idx[i] < steps {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

pub fn check_lfp(inst: &LfpInstance) -> Result<(), TestCaseError> {
    let (a, b) = boxed(inst);
    let p = LfpProblem::new(
        RationalMatrix::from_rows(rows_q(&a), inst.n),
        b.into_iter().map(q).collect(),
        RationalMatrix::from_rows(rows_q(&inst.a_eq), inst.n),
        inst.b_eq.iter().map(|&x| q(x)).collect(),
    )
    .unwrap();
    let out = solve_lfp(&p).unwrap();
    prop_assert_eq!(out.is_feasible(), vertex_oracle(inst));
    if let Some(w) = &out.witness {
        prop_assert!(satisfies(inst, w));
    }
    if inst.n <= 2 && grid_oracle(inst) {
        prop_assert!(out.is_feasible());
    }
    Ok(())
}

/// Beale's cycling example posed as feasibility: the optimum -1/20 is
/// attainable, -1/19 is not.
pub fn beale_cycling_regression() -> Result<(), String> {
    let rows: Vec<Vec<Q>> = vec![
        vec![Q::new(1.into(), 4.into()), q(-60), Q::new((-1).into(), 25.into()), q(9)],
        vec![Q::new(1.into(), 2.into()), q(-90), Q::new((-1).into(), 50.into()), q(3)],
        vec![q(0), q(0), q(1), q(0)],
        vec![q(-1), q(0), q(0), q(0)],
        vec![q(0), q(-1), q(0), q(0)],
        vec![q(0), q(0), q(-1), q(0)],
        vec![q(0), q(0), q(0), q(-1)],
        vec![Q::new((-3).into(), 4.into()), q(150), Q::new((-1).into(), 50.into()), q(6)],
    ];
    let problem = |bound: Q| {
        let mut b = vec![q(0), q(0), q(1), q(0), q(0), q(0), q(0)];
        b.push(bound);
        LfpProblem::new(RationalMatrix::from_rows(rows.clone(), 4), b, RationalMatrix::zeros(0, 4), vec![]).unwrap()
    };
    let feasible = problem(Q::new((-1).into(), 20.into()));
    let out = solve_lfp(&feasible).map_err(|e| e.to_string())?;
    if !out.witness.as_ref().is_some_and(|w| feasible.is_satisfied_by(w)) {
        return Err("Beale optimum not reached".into());
    }
    if solve_lfp(&problem(Q::new((-1).into(), 19.into()))).map_err(|e| e.to_string())?.is_feasible() {
        return Err("Beale bound below optimum reported feasible".into());
    }
    Ok(())
}

// ---- reachability

pub fn digraph() -> impl Strategy<Value = Vec<Vec<usize>>> {
    (1usize..=12, 0.0f64..0.5).prop_flat_map(|(n, p)| {
        prop::collection::vec(prop::collection::vec(prop::bool::weighted(p), n), n).prop_map(|m| {
            m.into_iter().map(|row| row.into_iter().enumerate().filter(|(_, b)| *b).map(|(j, _)| j).collect()).collect()
        })
    })
}

pub fn bfs(adj: &[Vec<usize>], s: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    seen[s] = true;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

pub fn check_omega(adj: &[Vec<usize>]) -> Result<(), TestCaseError> {
    let omega = reachability_matrix(&BoolMatrix::from_adjacency(adj));
    for s in 0..adj.len() {
        let seen = bfs(adj, s);
        for (t, &r) in seen.iter().enumerate() {
            prop_assert_eq!(omega.get(s, t), r, "({}, {})", s, t);
        }
    }
    Ok(())
}

// ---- drift certificates

fn complex(d: usize, max_order: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..=2, d).prop_map(move |mut v| {
        while v.iter().sum::<u32>() > max_order {
            let i = v.iter().position(|&x| x > 0).unwrap();
            v[i] -= 1;
        }
        v
    })
}

pub fn random_network(max_order: u32) -> impl Strategy<Value = ReactionNetwork> {
    (1usize..=4).prop_flat_map(move |d| {
        prop::collection::vec((complex(d, max_order), complex(d, 2), 1i64..=4, 1i64..=3), 1..=7).prop_map(move |rs| {
            let species = (1..=d).map(|i| format!("X{i}")).collect();
            let reactions =
                rs.into_iter().map(|(r, p, n, den)| Reaction { reactants: r, products: p, rate: frac(n, den) }).collect();
            ReactionNetwork::new(species, reactions).unwrap()
        })
    })
}

pub fn scaled(c: &LyapunovCertificate, k: &Rational) -> LyapunovCertificate {
    let s = |v: &[Rational]| v.iter().map(|x| x * k).collect::<Vec<_>>();
    LyapunovCertificate { w: s(&c.w), v_positive: s(&c.v_positive), alphas: s(&c.alphas), drift_margin: s(&c.drift_margin) }
}

/// Partition of the reactions, and for accepted certificates the cone
/// property and orthogonality to binary changes. Returns whether a
/// certificate was produced.
pub fn check_drift(net: &ReactionNetwork) -> Result<bool, TestCaseError> {
    let Ok(gammas) = find_conservation_relations(&net.stoichiometry_matrix()) else { return Ok(false) };
    let (rnet, cs) = reorder_conserved_last(net, &gammas);
    let rc = classify_reactions(&rnet, &cs).unwrap();
    let mut all: Vec<usize> = rc.unary_unconserved.iter().chain(&rc.binary).chain(&rc.remainder).copied().collect();
    all.sort_unstable();
    prop_assert_eq!(all, (0..net.num_reactions()).collect::<Vec<_>>());

    let ds = build_drift_system(&rc, &rnet, &cs);
    let DriftOutcome::Certified(cert) = check_negative_drift(&ds).unwrap() else { return Ok(false) };
    prop_assert!(verify_certificate(&cert, &ds));
    for k in [int(2), int(3), frac(7, 2)] {
        prop_assert!(verify_certificate(&scaled(&cert, &k), &ds), "scaling by {} broke the certificate", k);
    }
    for &k in &rc.binary {
        let change = rnet.reactions()[k].change();
        let s = change.iter().zip(&cert.v_positive).fold(Rational::zero(), |a, (&c, v)| a + v * int(c));
        prop_assert!(s.is_zero());
    }
    Ok(true)
}

// ---- conservation along trajectories

/// Free species X, Y; a two-state gene G0/G1; a binding pair P + X <-> Q;
/// plus random catalytic production.
pub fn conserved_network() -> impl Strategy<Value = ReactionNetwork> {
    prop::collection::vec((0usize..4, 0usize..2, 1i64..=3), 1..=6).prop_map(|extra| {
        let species: Vec<String> = ["X", "Y", "G0", "G1", "P", "Q"].iter().map(|s| s.to_string()).collect();
        let unit = |i: usize| {
            let mut v = vec![0u32; 6];
            v[i] = 1;
            v
        };
        let plus = |a: Vec<u32>, b: Vec<u32>| a.iter().zip(&b).map(|(x, y)| x + y).collect::<Vec<u32>>();
        let mut rs = vec![
            Reaction { reactants: unit(2), products: unit(3), rate: frac(1, 1) },
            Reaction { reactants: unit(3), products: unit(2), rate: frac(2, 1) },
            Reaction { reactants: plus(unit(4), unit(0)), products: unit(5), rate: frac(1, 2) },
            Reaction { reactants: unit(5), products: plus(unit(4), unit(0)), rate: frac(1, 1) },
            Reaction { reactants: unit(0), products: vec![0; 6], rate: frac(1, 1) },
            Reaction { reactants: unit(1), products: vec![0; 6], rate: frac(1, 1) },
        ];
        for (catalyst, target, rate) in extra {
            let c = [2, 3, 4, 5][catalyst];
            rs.push(Reaction { reactants: unit(c), products: plus(unit(c), unit(target)), rate: frac(rate, 1) });
        }
        ReactionNetwork::new(species, rs).unwrap()
    })
}

pub fn check_conservation_along_ssa(net: &ReactionNetwork, x0: &[u64], seed: u64) -> Result<(), TestCaseError> {
    let gammas = find_conservation_relations(&net.stoichiometry_matrix()).unwrap();
    let traj = gillespie_simulate(net, x0, 30.0, seed).unwrap();
    for g in &gammas {
        let value = |x: &[u64]| g.iter().zip(x).map(|(&a, &b)| a * b as i64).sum::<i64>();
        let first = value(&traj.states[0]);
        prop_assert!(traj.states.iter().all(|s| value(s) == first), "gamma {:?} not constant", g);
    }
    Ok(())
}
