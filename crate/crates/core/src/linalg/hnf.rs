//! Column-style Hermite normal form and the integer lattice-span test.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::matrix::IntMatrix;

/// `H = M * U` with `U` unimodular and `H` in column Hermite normal form.
///
/// Pivot `(row, col)` pairs have strictly increasing rows and `col` equal to
/// the pivot's ordinal, so the first `rank` columns of `H` form the staircase
/// and the remaining columns are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HnfResult {
    pub h: Vec<Vec<BigInt>>,
    pub u: Vec<Vec<BigInt>>,
    pub pivots: Vec<HnfPivot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HnfPivot {
    pub row: usize,
    pub col: usize,
    pub value: String,
}

impl HnfResult {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivot_values(&self) -> impl Iterator<Item = BigInt> + '_ {
        self.pivots.iter().map(|p| p.value.parse().expect("pivot is an integer"))
    }

    /// Recomputes `M * U` and compares it against `H`.
    pub fn check_product(&self, m: &IntMatrix) -> bool {
        let (rows, cols) = (m.rows(), m.cols());
        if self.h.len() != rows || self.u.len() != cols {
            return false;
        }
        for i in 0..rows {
            let mut acc = vec![BigInt::zero(); cols];
            for (k, &a) in m.row(i).iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let a = BigInt::from(a);
                for (x, ukj) in acc.iter_mut().zip(&self.u[k]) {
                    if !ukj.is_zero() {
                        *x += &a * ukj;
                    }
                }
            }
            if acc != self.h[i] {
                return false;
            }
        }
        true
    }

    /// Checks the staircase shape, positive pivots and the reduction of
    /// entries left of each pivot into `[0, pivot)`.
    pub fn check_shape(&self) -> bool {
        let cols = self.u.len();
        let rank = self.pivots.len();
        let mut last_row = None;
        for (t, p) in self.pivots.iter().enumerate() {
            if p.col != t || last_row.is_some_and(|r| p.row <= r) {
                return false;
            }
            last_row = Some(p.row);
            let pivot = &self.h[p.row][p.col];
            if !pivot.is_positive() {
                return false;
            }
            // Column t is zero above its pivot row.
            if (0..p.row).any(|i| !self.h[i][t].is_zero()) {
                return false;
            }
            for j in 0..t {
                let e = &self.h[p.row][j];
                if e.is_negative() || e >= pivot {
                    return false;
                }
            }
        }
        self.h.iter().all(|row| row[rank..cols].iter().all(Zero::is_zero))
    }
}

struct ColumnOps {
    m: Vec<Vec<BigInt>>,
    u: Vec<Vec<BigInt>>,
}

impl ColumnOps {
    /// col_j -= q * col_c
    fn sub_multiple(&mut self, j: usize, c: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for store in [&mut self.m, &mut self.u] {
            let (src, dst) = if c < j {
                let (lo, hi) = store.split_at_mut(j);
                (&lo[c], &mut hi[0])
            } else {
                let (lo, hi) = store.split_at_mut(c);
                (&hi[0], &mut lo[j])
            };
            for (d, s) in dst.iter_mut().zip(src) {
                if !s.is_zero() {
                    *d -= q * s;
                }
            }
        }
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.m.swap(a, b);
        self.u.swap(a, b);
    }

    fn negate(&mut self, c: usize) {
        for x in self.m[c].iter_mut().chain(self.u[c].iter_mut()) {
            if !x.is_zero() {
                *x = -std::mem::take(x);
            }
        }
    }
}

/// Column Hermite normal form, deterministic for a given input.
pub fn hermite_normal_form(m: &IntMatrix) -> HnfResult {
    let (rows, cols) = (m.rows(), m.cols());
    let mut ops = ColumnOps {
        m: (0..cols).map(|j| m.column(j).into_iter().map(BigInt::from).collect()).collect(),
        u: (0..cols)
            .map(|j| (0..cols).map(|i| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect(),
    };
    let mut pivots = Vec::new();
    let mut next = 0;
    for r in 0..rows {
        if next == cols {
            break;
        }
        // Euclid across columns next.. until a single nonzero remains in row r.
        loop {
            let smallest = (next..cols)
                .filter(|&j| !ops.m[j][r].is_zero())
                .min_by(|&a, &b| ops.m[a][r].abs().cmp(&ops.m[b][r].abs()).then(a.cmp(&b)));
            let Some(s) = smallest else { break };
            ops.swap(next, s);
            let pivot = ops.m[next][r].clone();
            let mut done = true;
            for j in next + 1..cols {
                if ops.m[j][r].is_zero() {
                    continue;
                }
                let q = ops.m[j][r].div_floor(&pivot);
                ops.sub_multiple(j, next, &q);
                if !ops.m[j][r].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if ops.m[next][r].is_zero() {
            continue;
        }
        if ops.m[next][r].is_negative() {
            ops.negate(next);
        }
        let pivot = ops.m[next][r].clone();
        for j in 0..next {
            if ops.m[j][r].is_zero() {
                continue;
            }
            let q = ops.m[j][r].div_floor(&pivot);
            ops.sub_multiple(j, next, &q);
        }
        pivots.push(HnfPivot { row: r, col: next, value: pivot.to_string() });
        next += 1;
    }
    let h = (0..rows).map(|i| (0..cols).map(|j| ops.m[j][i].clone()).collect()).collect();
    let u = (0..cols).map(|i| (0..cols).map(|j| ops.u[j][i].clone()).collect()).collect();
    HnfResult { h, u, pivots }
}

/// True iff the integer column span of `m` is all of `Z^dim`: the HNF has
/// `dim` pivots and every pivot equals one.
pub fn lattice_spans_full(m: &IntMatrix, dim: usize) -> bool {
    lattice_spans_full_from(&hermite_normal_form(m), dim)
}

pub fn lattice_spans_full_from(hnf: &HnfResult, dim: usize) -> bool {
    hnf.rank() == dim && hnf.pivot_values().all(|p| p.is_one())
}
