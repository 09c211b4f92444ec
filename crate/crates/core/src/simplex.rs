//! Dense two-phase simplex over a generic scalar.
//!
//! Solves `min c·x` subject to `A x = b`, `x >= 0`. The tableau is tiny for
//! every use in this crate (tens of rows), so the method keeps the full
//! dense tableau and uses Bland's rule throughout, which cannot cycle. With
//! `eps = 0` and a rational scalar the arithmetic — and hence the verdict —
//! is exact.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `min objective·x` s.t. `constraints·x = rhs`, `x >= 0`.
#[derive(Clone, Debug)]
pub struct StandardLp<S> {
    pub objective: Vec<S>,
    pub constraints: Vec<Vec<S>>,
    pub rhs: Vec<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<S> {
    Optimal { x: Vec<S>, objective: S },
    Infeasible,
    Unbounded,
}

struct Tableau<S> {
    rows: Vec<Vec<S>>, // m rows of length n_cols + 1 (rhs last)
    basis: Vec<usize>,
    n_cols: usize,
    eps: S,
}

impl<S: Scalar> Tableau<S> {
    fn rhs(&self, i: usize) -> &S {
        &self.rows[i][self.n_cols]
    }

    fn is_zero(&self, v: &S) -> bool {
        v.abs() <= self.eps
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pivot_value = self.rows[row][col].clone();
        for v in self.rows[row].iter_mut() {
            *v = v.clone() / pivot_value.clone();
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col].clone();
            if factor.is_zero() {
                continue;
            }
            for (v, pv) in r.iter_mut().zip(pivot_row.iter()) {
                *v = v.clone() - factor.clone() * pv.clone();
            }
        }
        self.basis[row] = col;
    }

    /// Reduced cost of column `j` under basic costs `cb` and costs `c`.
    fn reduced_cost(&self, c: &[S], cb: &[S], j: usize) -> S {
        let mut acc = c[j].clone();
        for (i, row) in self.rows.iter().enumerate() {
            if !cb[i].is_zero() && !row[j].is_zero() {
                acc = acc - cb[i].clone() * row[j].clone();
            }
        }
        acc
    }

    /// Runs simplex iterations on the current basis for costs `c`,
    /// restricted to entering columns below `col_limit`.
    /// Returns `false` when unbounded.
    fn optimize(&mut self, c: &[S], col_limit: usize) -> Result<bool> {
        let max_iterations = 50_000usize;
        for _ in 0..max_iterations {
            let cb: Vec<S> = self.basis.iter().map(|&j| c[j].clone()).collect();

            // Bland: first improving column.
            let mut entering = None;
            for j in 0..col_limit {
                let r = self.reduced_cost(c, &cb, j);
                if r < -self.eps.clone() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(e) = entering else {
                return Ok(true);
            };

            // Min ratio; Bland tie-break on the smallest basic index.
            let mut leaving: Option<(usize, S)> = None;
            for i in 0..self.rows.len() {
                let coeff = self.rows[i][e].clone();
                if coeff > self.eps {
                    let ratio = self.rhs(i).clone() / coeff;
                    let better = match &leaving {
                        None => true,
                        Some((li, lr)) => {
                            ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            match leaving {
                Some((row, _)) => self.pivot(row, e),
                None => return Ok(false),
            }
        }
        Err(Error::InvalidInput("simplex iteration limit exceeded".into()))
    }
}

/// Two-phase dense simplex. `eps` is the zero threshold: use `0` for exact
/// scalars and something like `1e-9` for `f64`.
pub fn solve<S: Scalar>(lp: &StandardLp<S>, eps: S) -> Result<LpOutcome<S>> {
    let m = lp.constraints.len();
    let n = lp.objective.len();
    if lp.rhs.len() != m || lp.constraints.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("inconsistent LP dimensions".into()));
    }

    // Artificial identity on every row keeps the start-up uniform.
    let n_cols = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, constraint) in lp.constraints.iter().enumerate() {
        let flip = lp.rhs[i] < S::zero();
        let mut row: Vec<S> = Vec::with_capacity(n_cols + 1);
        for v in constraint {
            row.push(if flip { -v.clone() } else { v.clone() });
        }
        for k in 0..m {
            row.push(if k == i { S::one() } else { S::zero() });
        }
        row.push(if flip { -lp.rhs[i].clone() } else { lp.rhs[i].clone() });
        rows.push(row);
    }

    let mut tab = Tableau {
        rows,
        basis: (n..n + m).collect(),
        n_cols,
        eps,
    };

    // Phase 1: drive the artificials to zero.
    let mut phase1_cost = vec![S::zero(); n_cols];
    for j in n..n_cols {
        phase1_cost[j] = S::one();
    }
    if !tab.optimize(&phase1_cost, n_cols)? {
        return Err(Error::InvalidInput("phase-1 objective unbounded".into()));
    }
    let mut infeasibility = S::zero();
    for (i, &j) in tab.basis.iter().enumerate() {
        if j >= n {
            infeasibility = infeasibility + tab.rhs(i).clone();
        }
    }
    if infeasibility > tab.eps {
        return Ok(LpOutcome::Infeasible);
    }

    // Pivot out artificials still basic at zero; drop redundant rows.
    let mut row = 0;
    while row < tab.rows.len() {
        if tab.basis[row] >= n {
            let col = (0..n).find(|&j| !tab.is_zero(&tab.rows[row][j]));
            match col {
                Some(j) => tab.pivot(row, j),
                None => {
                    tab.rows.remove(row);
                    tab.basis.remove(row);
                    continue;
                }
            }
        }
        row += 1;
    }

    // Phase 2 on the original objective; artificial columns stay barred.
    let mut cost = lp.objective.clone();
    cost.resize(n_cols, S::zero());
    if !tab.optimize(&cost, n)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![S::zero(); n];
    for (i, &j) in tab.basis.iter().enumerate() {
        if j < n {
            x[j] = tab.rhs(i).clone();
        }
    }
    let mut objective = S::zero();
    for (c, v) in lp.objective.iter().zip(x.iter()) {
        objective = objective + c.clone() * v.clone();
    }
    Ok(LpOutcome::Optimal { x, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn rational(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn minimizes_simple_program() {
        // min x0 s.t. x0 - x1 = 3 (x1 slack): optimum x0 = 3.
        let lp = StandardLp {
            objective: vec![1.0f64, 0.0],
            constraints: vec![vec![1.0, -1.0]],
            rhs: vec![3.0],
        };
        match solve(&lp, 1e-12).unwrap() {
            LpOutcome::Optimal { x, objective } => {
                assert!((objective - 3.0).abs() < 1e-12);
                assert!((x[0] - 3.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasibility() {
        // x0 = -1 with x0 >= 0 is impossible.
        let lp = StandardLp {
            objective: vec![0.0],
            constraints: vec![vec![1.0]],
            rhs: vec![-1.0],
        };
        assert_eq!(solve(&lp, 1e-12).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // min -x0 s.t. x0 - x1 = 0: x0 can grow without bound.
        let lp = StandardLp {
            objective: vec![-1.0, 0.0],
            constraints: vec![vec![1.0, -1.0]],
            rhs: vec![0.0],
        };
        assert_eq!(solve(&lp, 1e-12).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn handles_redundant_rows() {
        // Duplicate constraint rows force a redundant phase-1 row.
        let lp = StandardLp {
            objective: vec![1.0f64, 1.0],
            constraints: vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, -1.0]],
            rhs: vec![2.0, 2.0, 0.0],
        };
        match solve(&lp, 1e-12).unwrap() {
            LpOutcome::Optimal { objective, .. } => assert!((objective - 2.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exact_rational_solution() {
        // min x0 + x1 s.t. 2 x0 + x1 = 1, x0 + 3 x1 = 1.
        // Solution x = (2/5, 1/5), objective 3/5, found exactly.
        let lp = StandardLp {
            objective: vec![rational(1, 1), rational(1, 1)],
            constraints: vec![
                vec![rational(2, 1), rational(1, 1)],
                vec![rational(1, 1), rational(3, 1)],
            ],
            rhs: vec![rational(1, 1), rational(1, 1)],
        };
        match solve(&lp, BigRational::from_integer(0.into())).unwrap() {
            LpOutcome::Optimal { x, objective } => {
                assert_eq!(x[0], rational(2, 5));
                assert_eq!(x[1], rational(1, 5));
                assert_eq!(objective, rational(3, 5));
            }
            other => panic!("{other:?}"),
        }
    }
}
