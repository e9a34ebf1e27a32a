//! Dense two-phase tableau simplex over exact rationals.
//!
//! Standard form only: `A x = b`, `x >= 0`. Pivoting follows Bland's rule
//! (smallest eligible entering index, ratio ties broken by smallest basic
//! index) so the returned vertex is a deterministic function of the input.

use num_traits::{One, Signed, Zero};

use super::{dot, RatMatrix, RatVector, Rational};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Present iff `status == Optimal`.
    pub vertex: Option<RatVector>,
    /// Present iff `status == Optimal`.
    pub value: Option<Rational>,
}

impl LpResult {
    fn without_vertex(status: LpStatus) -> Self {
        LpResult {
            status,
            vertex: None,
            value: None,
        }
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let inv = self.rows[r][col].recip();
        for v in self.rows[r].iter_mut() {
            *v *= &inv;
        }
        self.rhs[r] *= &inv;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][col].is_zero() {
                continue;
            }
            let f = self.rows[i][col].clone();
            for (v, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
            self.rhs[i] -= &f * &pivot_rhs;
        }
        self.basis[r] = col;
    }

    /// Runs primal simplex for `min cost·x`, letting only columns
    /// `< eligible` enter. Returns `false` if the objective is unbounded.
    fn optimize(&mut self, cost: &[Rational], eligible: usize) -> bool {
        loop {
            let basic_cost: Vec<Rational> = self.basis.iter().map(|&j| cost[j].clone()).collect();
            let entering = (0..eligible).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let column: Vec<Rational> = self.rows.iter().map(|row| row[j].clone()).collect();
                &cost[j] - dot(&basic_cost, &column) < Rational::zero()
            });
            let Some(col) = entering else {
                return true;
            };

            let mut leave: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[col].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / &row[col];
                let better = match &leave {
                    None => true,
                    Some((k, best)) => {
                        ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, col),
            }
        }
    }
}

/// Solves `min/max c·x` subject to `A x = b`, `x >= 0` exactly.
pub fn simplex_solve(a: &RatMatrix, b: &[Rational], c: &[Rational], sense: Sense) -> Result<LpResult> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::dim("simplex_solve (rhs)", m, b.len()));
    }
    if c.len() != n {
        return Err(Error::dim("simplex_solve (objective)", n, c.len()));
    }

    // Phase 1: artificial column n+i for row i, rows sign-flipped so b >= 0.
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row: Vec<Rational> = a
            .row(i)
            .iter()
            .map(|v| if flip { -v.clone() } else { v.clone() })
            .collect();
        row.extend((0..m).map(|k| if k == i { Rational::one() } else { Rational::zero() }));
        rows.push(row);
        rhs.push(b[i].abs());
    }
    let mut tab = Tableau {
        rows,
        rhs,
        basis: (n..n + m).collect(),
    };
    let phase1_cost: Vec<Rational> = (0..n + m)
        .map(|j| if j < n { Rational::zero() } else { Rational::one() })
        .collect();
    tab.optimize(&phase1_cost, n);

    let infeasibility = tab
        .basis
        .iter()
        .zip(&tab.rhs)
        .filter(|(&j, _)| j >= n)
        .fold(Rational::zero(), |acc, (_, v)| acc + v);
    if infeasibility.is_positive() {
        return Ok(LpResult::without_vertex(LpStatus::Infeasible));
    }

    // Drive zero-level artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] < n {
            i += 1;
            continue;
        }
        match (0..n).find(|&j| !tab.rows[i][j].is_zero()) {
            Some(j) => {
                tab.pivot(i, j);
                i += 1;
            }
            None => {
                tab.rows.remove(i);
                tab.rhs.remove(i);
                tab.basis.remove(i);
            }
        }
    }

    let mut cost: Vec<Rational> = c
        .iter()
        .map(|v| match sense {
            Sense::Min => v.clone(),
            Sense::Max => -v.clone(),
        })
        .collect();
    cost.extend((0..m).map(|_| Rational::zero()));
    if !tab.optimize(&cost, n) {
        return Ok(LpResult::without_vertex(LpStatus::Unbounded));
    }

    let mut x = vec![Rational::zero(); n];
    for (row, &j) in tab.basis.iter().enumerate() {
        x[j] = tab.rhs[row].clone();
    }
    let value = dot(c, &x);
    Ok(LpResult {
        status: LpStatus::Optimal,
        vertex: Some(x),
        value: Some(value),
    })
}

/// Decides `b ∈ cone(generators)`. On success returns a nonnegative
/// certificate `λ` with `Σ λ_i g_i = b`, found as a phase-1 basic solution.
pub fn cone_member(generators: &[Vec<i64>], b: &[Rational]) -> Result<Option<RatVector>> {
    let d = b.len();
    if generators.is_empty() {
        return Ok(b.iter().all(|v| v.is_zero()).then(Vec::new));
    }
    let a = RatMatrix::from_i64_columns(generators, d)?;
    let zero = vec![Rational::zero(); generators.len()];
    let res = simplex_solve(&a, b, &zero, Sense::Min)?;
    Ok(res.vertex)
}
