//! Linear feasibility problems `{v : A v <= b, A_eq v = b_eq}` decided by an
//! exact phase-I simplex over the rationals with Bland's rule.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::matrix::RationalMatrix;
use crate::rational::{int, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LfpProblem {
    pub a: RationalMatrix,
    pub b: Vec<Rational>,
    pub a_eq: RationalMatrix,
    pub b_eq: Vec<Rational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LfpStatus {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LfpOutcome {
    pub status: LfpStatus,
    pub witness: Option<Vec<Rational>>,
}

impl LfpOutcome {
    pub fn is_feasible(&self) -> bool {
        self.status == LfpStatus::Feasible
    }

    fn infeasible() -> Self {
        Self { status: LfpStatus::Infeasible, witness: None }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LfpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("simplex produced a point violating constraint {0}")]
    WitnessCheckFailed(String),
}

impl LfpProblem {
    pub fn new(
        a: RationalMatrix,
        b: Vec<Rational>,
        a_eq: RationalMatrix,
        b_eq: Vec<Rational>,
    ) -> Result<Self, LfpError> {
        let p = Self { a, b, a_eq, b_eq };
        p.check_dimensions()?;
        Ok(p)
    }

    pub fn num_vars(&self) -> usize {
        self.a.cols()
    }

    fn check_dimensions(&self) -> Result<(), LfpError> {
        if self.a.cols() != self.a_eq.cols() {
            return Err(LfpError::DimensionMismatch(format!(
                "A has {} columns but A_eq has {}",
                self.a.cols(),
                self.a_eq.cols()
            )));
        }
        if self.a.rows() != self.b.len() {
            return Err(LfpError::DimensionMismatch(format!(
                "A has {} rows but b has length {}",
                self.a.rows(),
                self.b.len()
            )));
        }
        if self.a_eq.rows() != self.b_eq.len() {
            return Err(LfpError::DimensionMismatch(format!(
                "A_eq has {} rows but b_eq has length {}",
                self.a_eq.rows(),
                self.b_eq.len()
            )));
        }
        Ok(())
    }

    /// First violated constraint, by exact substitution.
    pub fn first_violation(&self, v: &[Rational]) -> Option<String> {
        if v.len() != self.num_vars() {
            return Some(format!("witness length {} != {}", v.len(), self.num_vars()));
        }
        let av = self.a.mul_vec(v);
        if let Some(i) = (0..av.len()).find(|&i| av[i] > self.b[i]) {
            return Some(format!("inequality row {i}"));
        }
        let ev = self.a_eq.mul_vec(v);
        (0..ev.len()).find(|&i| ev[i] != self.b_eq[i]).map(|i| format!("equality row {i}"))
    }

    pub fn is_satisfied_by(&self, v: &[Rational]) -> bool {
        self.first_violation(v).is_none()
    }
}

/// How an original variable maps onto nonnegative tableau columns.
enum VarMap {
    Shifted { lower: Rational, col: usize },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    /// Reduced costs; the last entry holds minus the objective value.
    cost: Vec<Rational>,
    basis: Vec<usize>,
    width: usize,
    first_artificial: usize,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.width
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        let nz: Vec<usize> = (0..=self.width).filter(|&j| !self.rows[r][j].is_zero()).collect();
        for &j in &nz {
            self.rows[r][j] /= &p;
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let eliminate = |row: &mut Vec<Rational>| {
            if row[c].is_zero() {
                return;
            }
            let f = row[c].clone();
            for &j in &nz {
                let delta = &f * &pivot_row[j];
                row[j] -= delta;
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.cost);
        self.rows[r] = pivot_row;
        self.basis[r] = c;
    }

    /// Bland's rule: lowest-index improving column, ties in the ratio test
    /// broken by lowest basic-variable index. Artificial columns never re-enter.
    fn run(&mut self) {
        let rhs = self.rhs();
        loop {
            let Some(enter) = (0..self.first_artificial).find(|&j| self.cost[j].is_negative()) else {
                return;
            };
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[enter].is_positive() {
                    continue;
                }
                let ratio = &row[rhs] / &row[enter];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            // Phase I is bounded below by zero, so some row always blocks.
            let (leave, _) = best.expect("phase-I objective is bounded");
            self.pivot(leave, enter);
        }
    }
}

/// Decides feasibility exactly. A `Feasible` outcome carries a witness that
/// has been re-checked by substitution into every original constraint.
pub fn solve_lfp(problem: &LfpProblem) -> Result<LfpOutcome, LfpError> {
    problem.check_dimensions()?;
    let n = problem.num_vars();

    // Singleton rows `c * v_j <= b` with c < 0 become lower bounds.
    let mut lower: Vec<Option<Rational>> = vec![None; n];
    let mut general_rows = Vec::new();
    for i in 0..problem.a.rows() {
        let row = problem.a.row(i);
        let nz: Vec<usize> = (0..n).filter(|&j| !row[j].is_zero()).collect();
        match nz.as_slice() {
            [] => {
                if problem.b[i].is_negative() {
                    return Ok(LfpOutcome::infeasible());
                }
            }
            [j] if row[*j].is_negative() => {
                let bound = &problem.b[i] / &row[*j];
                if lower[*j].as_ref().is_none_or(|l| bound > *l) {
                    lower[*j] = Some(bound);
                }
            }
            _ => general_rows.push(i),
        }
    }
    let mut eq_rows = Vec::new();
    for i in 0..problem.a_eq.rows() {
        if problem.a_eq.row(i).iter().all(Zero::is_zero) {
            if !problem.b_eq[i].is_zero() {
                return Ok(LfpOutcome::infeasible());
            }
        } else {
            eq_rows.push(i);
        }
    }

    let mut maps = Vec::with_capacity(n);
    let mut structural = 0;
    for l in &lower {
        maps.push(match l {
            Some(lower) => {
                structural += 1;
                VarMap::Shifted { lower: lower.clone(), col: structural - 1 }
            }
            None => {
                structural += 2;
                VarMap::Split { pos: structural - 2, neg: structural - 1 }
            }
        });
    }

    // Row i of the reduced system over the structural columns, and its rhs.
    let reduce = |coefs: &[Rational], rhs: &Rational| -> (Vec<(usize, Rational)>, Rational) {
        let mut out = Vec::new();
        let mut rhs = rhs.clone();
        for (j, a) in coefs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            match &maps[j] {
                VarMap::Shifted { lower, col } => {
                    rhs -= a * lower;
                    out.push((*col, a.clone()));
                }
                VarMap::Split { pos, neg } => {
                    out.push((*pos, a.clone()));
                    out.push((*neg, -a.clone()));
                }
            }
        }
        (out, rhs)
    };

    let slack_count = general_rows.len();
    let mut reduced = Vec::new();
    let mut artificial_count = 0;
    for (s, &i) in general_rows.iter().enumerate() {
        let (coefs, rhs) = reduce(problem.a.row(i), &problem.b[i]);
        let needs_artificial = rhs.is_negative();
        artificial_count += usize::from(needs_artificial);
        reduced.push((coefs, rhs, Some(s), needs_artificial));
    }
    for &i in &eq_rows {
        let (coefs, rhs) = reduce(problem.a_eq.row(i), &problem.b_eq[i]);
        artificial_count += 1;
        reduced.push((coefs, rhs, None, true));
    }

    let first_slack = structural;
    let first_artificial = structural + slack_count;
    let width = first_artificial + artificial_count;
    let mut tab = Tableau {
        rows: Vec::with_capacity(reduced.len()),
        cost: vec![Rational::zero(); width + 1],
        basis: Vec::with_capacity(reduced.len()),
        width,
        first_artificial,
    };
    let mut next_artificial = first_artificial;
    for (coefs, rhs, slack, needs_artificial) in reduced {
        let mut row = vec![Rational::zero(); width + 1];
        for (j, a) in coefs {
            row[j] += a;
        }
        if let Some(s) = slack {
            row[first_slack + s] = int(1);
        }
        row[width] = rhs;
        if needs_artificial {
            if row[width].is_negative() {
                for x in row.iter_mut() {
                    if !x.is_zero() {
                        *x = -std::mem::take(x);
                    }
                }
            }
            row[next_artificial] = int(1);
            tab.basis.push(next_artificial);
            next_artificial += 1;
            for (j, x) in row.iter().enumerate() {
                if (j < first_artificial || j == width) && !x.is_zero() {
                    tab.cost[j] -= x;
                }
            }
        } else {
            tab.basis.push(first_slack + slack.expect("inequality row"));
        }
        tab.rows.push(row);
    }

    tab.run();

    if !tab.cost[width].is_zero() {
        return Ok(LfpOutcome::infeasible());
    }
    let mut values = vec![Rational::zero(); width];
    for (i, &b) in tab.basis.iter().enumerate() {
        values[b] = tab.rows[i][width].clone();
    }
    let witness: Vec<Rational> = maps
        .iter()
        .map(|m| match m {
            VarMap::Shifted { lower, col } => lower + &values[*col],
            VarMap::Split { pos, neg } => &values[*pos] - &values[*neg],
        })
        .collect();
    if let Some(v) = problem.first_violation(&witness) {
        return Err(LfpError::WitnessCheckFailed(v));
    }
    Ok(LfpOutcome { status: LfpStatus::Feasible, witness: Some(witness) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::IntMatrix;

    fn mat(rows: Vec<Vec<i64>>, cols: usize) -> RationalMatrix {
        if rows.is_empty() {
            return RationalMatrix::zeros(0, cols);
        }
        IntMatrix::from_rows(rows).to_rational()
    }

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    /// `{M v = 0, v >= 1}` in the generic form.
    fn positive_kernel(m: Vec<Vec<i64>>) -> LfpProblem {
        let k = m[0].len();
        let neg_identity: Vec<Vec<i64>> =
            (0..k).map(|i| (0..k).map(|j| if i == j { -1 } else { 0 }).collect()).collect();
        let rows = m.len();
        LfpProblem::new(mat(neg_identity, k), ints(&vec![-1; k]), mat(m, k), ints(&vec![0; rows]))
            .unwrap()
    }

    #[test]
    fn birth_death_kernel_is_feasible() {
        let p = positive_kernel(vec![vec![1, -1]]);
        let out = solve_lfp(&p).unwrap();
        assert!(out.is_feasible());
        assert!(p.is_satisfied_by(out.witness.as_ref().unwrap()));
    }

    #[test]
    fn pure_birth_kernel_is_infeasible() {
        let out = solve_lfp(&positive_kernel(vec![vec![1]])).unwrap();
        assert_eq!(out.status, LfpStatus::Infeasible);
        assert!(out.witness.is_none());
    }

    #[test]
    fn negative_sum_of_nonnegatives() {
        let p = LfpProblem::new(
            mat(vec![vec![1, 1], vec![-1, 0], vec![0, -1]], 2),
            ints(&[-1, 0, 0]),
            mat(vec![], 2),
            vec![],
        )
        .unwrap();
        assert_eq!(solve_lfp(&p).unwrap().status, LfpStatus::Infeasible);
    }

    #[test]
    fn free_variables_can_go_negative() {
        // v1 + v2 <= -5, v1 - v2 = 1
        let p = LfpProblem::new(mat(vec![vec![1, 1]], 2), ints(&[-5]), mat(vec![vec![1, -1]], 2), ints(&[1]))
            .unwrap();
        let out = solve_lfp(&p).unwrap();
        assert!(out.is_feasible());
        assert!(p.is_satisfied_by(out.witness.as_ref().unwrap()));
    }

    #[test]
    fn empty_rows() {
        let p = LfpProblem::new(mat(vec![vec![0, 0]], 2), ints(&[-1]), mat(vec![], 2), vec![]).unwrap();
        assert!(!solve_lfp(&p).unwrap().is_feasible());
        let p = LfpProblem::new(mat(vec![], 2), vec![], mat(vec![vec![0, 0]], 2), ints(&[3])).unwrap();
        assert!(!solve_lfp(&p).unwrap().is_feasible());
        let p = LfpProblem::new(mat(vec![], 0), vec![], mat(vec![], 0), vec![]).unwrap();
        let out = solve_lfp(&p).unwrap();
        assert!(out.is_feasible());
        assert_eq!(out.witness.unwrap().len(), 0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let bad = LfpProblem {
            a: mat(vec![vec![1, 1]], 2),
            b: ints(&[1, 2]),
            a_eq: mat(vec![], 2),
            b_eq: vec![],
        };
        assert!(matches!(solve_lfp(&bad), Err(LfpError::DimensionMismatch(_))));
        assert!(LfpProblem::new(mat(vec![vec![1]], 1), ints(&[1]), mat(vec![vec![1, 2]], 2), ints(&[0])).is_err());
    }

    #[test]
    fn conflicting_bounds() {
        // v >= 2 and v <= 1
        let p = LfpProblem::new(mat(vec![vec![-1], vec![1]], 1), ints(&[-2, 1]), mat(vec![], 1), vec![]).unwrap();
        assert!(!solve_lfp(&p).unwrap().is_feasible());
    }
}
