//! Dense two-phase simplex over exact rationals with Bland's pivoting rule.
//!
//! Solves `maximize cᵀx subject to Ax ≤ b, x ≥ 0`. Besides the primal
//! vertex the solver returns the dual vector read off the final tableau,
//! so callers can check optimality without trusting the pivoting.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// `maximize cᵀx` subject to `rows[i].0 · x ≤ rows[i].1` and `x ≥ 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<BigRational>,
    pub rows: Vec<(Vec<BigRational>, BigRational)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal vertex (empty unless optimal).
    pub x: Vec<BigRational>,
    pub value: BigRational,
    /// One multiplier per row of the original program (empty unless optimal).
    pub duals: Vec<BigRational>,
    pub pivots: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, pivots: usize) -> Self {
        Self {
            status,
            x: Vec::new(),
            value: BigRational::zero(),
            duals: Vec::new(),
            pivots,
        }
    }
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Checks weak duality certificate: `y ≥ 0`, `Aᵀy ≥ c` and `bᵀy = cᵀx`
    /// with `x` primal feasible. Exact, so `true` proves optimality.
    pub fn certifies(&self, x: &[BigRational], y: &[BigRational]) -> bool {
        let n = self.num_vars();
        if x.len() != n || y.len() != self.rows.len() {
            return false;
        }
        let primal_ok = x.iter().all(|v| !v.is_negative())
            && self.rows.iter().all(|(a, b)| dot(a, x) <= *b);
        let dual_ok = y.iter().all(|v| !v.is_negative())
            && (0..n).all(|j| {
                let col: BigRational = self.rows.iter().zip(y).map(|((a, _), yi)| &a[j] * yi).sum();
                col >= self.objective[j]
            });
        let by: BigRational = self.rows.iter().zip(y).map(|((_, b), yi)| b * yi).sum();
        primal_ok && dual_ok && by == dot(&self.objective, x)
    }

    pub fn solve(&self) -> LpSolution {
        Tableau::new(self).run(self)
    }
}

fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

struct Tableau {
    /// Constraint rows; the last entry of each row is the right-hand side.
    rows: Vec<Vec<BigRational>>,
    basis: Vec<usize>,
    num_vars: usize,
    num_slacks: usize,
    /// Row index (in the original program) each tableau row came from.
    origin: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.rows.len();
        let flipped: Vec<bool> = lp.rows.iter().map(|(_, b)| b.is_negative()).collect();
        let num_art = flipped.iter().filter(|&&f| f).count();
        let width = n + m + num_art + 1;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut next_art = n + m;
        for (i, (a, b)) in lp.rows.iter().enumerate() {
            let sign = if flipped[i] { -BigRational::from_integer(1.into()) } else { BigRational::from_integer(1.into()) };
            let mut row = vec![BigRational::zero(); width];
            for (j, aj) in a.iter().enumerate() {
                row[j] = aj * &sign;
            }
            row[n + i] = sign.clone();
            row[width - 1] = b * &sign;
            if flipped[i] {
                row[next_art] = BigRational::from_integer(1.into());
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(n + i);
            }
            rows.push(row);
        }
        Self {
            rows,
            basis,
            num_vars: n,
            num_slacks: m,
            origin: (0..m).collect(),
            pivots: 0,
        }
    }

    fn width(&self) -> usize {
        self.rows.first().map_or(self.num_vars + self.num_slacks, |r| r.len() - 1)
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.num_vars + self.num_slacks
    }

    fn reduced_cost(&self, cost: &[BigRational], j: usize) -> BigRational {
        let mut r = cost[j].clone();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if !cost[b].is_zero() && !row[j].is_zero() {
                r -= &cost[b] * &row[j];
            }
        }
        r
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let inv = self.rows[pr][pc].recip();
        for v in self.rows[pr].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let pivot_row = self.rows[pr].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == pr || row[pc].is_zero() {
                continue;
            }
            let factor = row[pc].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Runs Bland's rule on `cost` over the allowed columns. Returns `false`
    /// when the objective is unbounded.
    fn optimize(&mut self, cost: &[BigRational], allow_artificial: bool) -> bool {
        let rhs = self.width();
        loop {
            let entering = (0..self.width())
                .filter(|&j| allow_artificial || !self.is_artificial(j))
                .find(|&j| self.reduced_cost(cost, j).is_positive());
            let Some(pc) = entering else {
                return true;
            };
            let mut best: Option<(usize, BigRational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[pc].is_positive() {
                    continue;
                }
                let ratio = &row[rhs] / &row[pc];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((pr, _)) = best else {
                return false;
            };
            self.pivot(pr, pc);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> LpSolution {
        let width = self.width();
        let rhs = width;
        let has_artificial = self.basis.iter().any(|&b| self.is_artificial(b));
        if has_artificial {
            let phase1: Vec<BigRational> = (0..width)
                .map(|j| {
                    if self.is_artificial(j) {
                        -BigRational::from_integer(1.into())
                    } else {
                        BigRational::zero()
                    }
                })
                .collect();
            self.optimize(&phase1, true);
            let infeasible = self
                .rows
                .iter()
                .zip(&self.basis)
                .any(|(row, &b)| self.is_artificial(b) && row[rhs].is_positive());
            if infeasible {
                return LpSolution::without_point(LpStatus::Infeasible, self.pivots);
            }
            // Drive zero-level artificials out of the basis; rows where that
            // is impossible are redundant.
            let mut i = 0;
            while i < self.rows.len() {
                if self.is_artificial(self.basis[i]) {
                    let col = (0..self.num_vars + self.num_slacks).find(|&j| !self.rows[i][j].is_zero());
                    match col {
                        Some(j) => self.pivot(i, j),
                        None => {
                            self.rows.remove(i);
                            self.basis.remove(i);
                            self.origin.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }

        let mut cost = vec![BigRational::zero(); width];
        cost[..self.num_vars].clone_from_slice(&lp.objective);
        if !self.optimize(&cost, false) {
            return LpSolution::without_point(LpStatus::Unbounded, self.pivots);
        }

        let mut x = vec![BigRational::zero(); self.num_vars];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < self.num_vars {
                x[b] = row[rhs].clone();
            }
        }
        let duals = (0..self.num_slacks)
            .map(|i| -self.reduced_cost(&cost, self.num_vars + i))
            .collect();
        LpSolution {
            status: LpStatus::Optimal,
            value: dot(&lp.objective, &x),
            x,
            duals,
            pivots: self.pivots,
        }
    }
}
