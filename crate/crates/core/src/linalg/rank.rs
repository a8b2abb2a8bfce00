use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::matrix::RationalMatrix;

/// Clears denominators and divides out the content, so the row spans the
/// same line over the rationals but holds coprime integers.
pub(crate) fn primitive_integer_row(row: &[crate::rational::Rational]) -> Vec<BigInt> {
    let lcm = row.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let mut ints: Vec<BigInt> = row.iter().map(|q| q.numer() * (&lcm / q.denom())).collect();
    make_primitive(&mut ints);
    ints
}

pub(crate) fn make_primitive(row: &mut [BigInt]) {
    let g = row.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in row.iter_mut() {
            *x /= &g;
        }
    }
}

/// Exact rank by fraction-free Gaussian elimination.
///
/// Each elimination step replaces `row` by `p*row - a*pivot_row` and then
/// divides out the row content, so entries stay integral and small.
pub fn rank(m: &RationalMatrix) -> usize {
    let mut rows: Vec<Vec<BigInt>> = (0..m.rows())
        .map(|i| primitive_integer_row(m.row(i)))
        .filter(|r| r.iter().any(|x| !x.is_zero()))
        .collect();
    let cols = m.cols();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows.len() {
            break;
        }
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let (head, tail) = rows.split_at_mut(rank + 1);
        let prow = &head[rank];
        let p = &prow[col];
        for row in tail.iter_mut() {
            if row[col].is_zero() {
                continue;
            }
            let a = row[col].clone();
            for j in col..cols {
                if prow[j].is_zero() && row[j].is_zero() {
                    continue;
                }
                row[j] = p * &row[j] - &a * &prow[j];
            }
            make_primitive(row);
        }
        rank += 1;
    }
    rank
}

/// Determinant of a square matrix (Bareiss). Used to audit unimodular
/// transforms; not on any hot path.
pub fn determinant(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    a[n - 1][n - 1].clone() * sign
}
