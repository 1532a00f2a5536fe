//! Two-phase primal simplex on a dense tableau.
//!
//! Pricing is Dantzig's largest-reduced-cost rule; after a run of degenerate
//! pivots the solver switches to Bland's smallest-index rule until the
//! objective moves again, which rules out cycling. Row updates only touch the
//! nonzero entries of the pivot row, so sparse structured programs stay cheap
//! even though storage is dense.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    LessEq,
    GreaterEq,
    Equal,
}

impl Relation {
    fn flipped(self) -> Self {
        match self {
            Relation::LessEq => Relation::GreaterEq,
            Relation::GreaterEq => Relation::LessEq,
            Relation::Equal => Relation::Equal,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `maximize c·x` subject to linear constraints and `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn set_objective_coeff(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        debug_assert!(terms.iter().all(|&(j, _)| j < self.num_vars));
        self.constraints.push(Constraint {
            terms,
            relation,
            rhs,
        });
    }

    pub fn solve(&self, options: &SimplexOptions) -> Result<LpSolution> {
        Tableau::build(self).solve(self, options)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Optimality and feasibility tolerance on reduced costs and residuals.
    pub tolerance: f64,
    /// Smallest pivot magnitude accepted in the ratio test.
    pub pivot_tolerance: f64,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub degenerate_streak: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500_000,
            tolerance: 1e-10,
            pivot_tolerance: 1e-9,
            degenerate_streak: 16,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

// Entries this small after an update are flushed to zero to keep rows sparse.
const FLUSH: f64 = 1e-14;

struct Tableau {
    m: usize,
    width: usize,
    art_start: usize,
    art_rows: Vec<usize>,
    a: Vec<f64>,
    basis: Vec<usize>,
    pivot_row: Vec<(usize, f64)>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.constraints.len();
        let nv = lp.num_vars;
        let mut normalized = Vec::with_capacity(m);
        for c in &lp.constraints {
            let mut terms = c.terms.clone();
            terms.sort_by_key(|t| t.0);
            terms.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            if c.rhs < 0.0 {
                for t in &mut terms {
                    t.1 = -t.1;
                }
                normalized.push((terms, c.relation.flipped(), -c.rhs));
            } else {
                normalized.push((terms, c.relation, c.rhs));
            }
        }

        let n_slack = normalized.iter().filter(|c| c.1 != Relation::Equal).count();
        let n_art = normalized
            .iter()
            .filter(|c| c.1 != Relation::LessEq)
            .count();
        let art_start = nv + n_slack;
        let cols = art_start + n_art;
        let width = cols + 1;
        let mut a = vec![0.0; (m + 1) * width];
        let mut basis = vec![0; m];
        let mut art_rows = Vec::with_capacity(n_art);
        let (mut next_slack, mut next_art) = (nv, art_start);
        for (i, (terms, rel, rhs)) in normalized.into_iter().enumerate() {
            let row = &mut a[i * width..(i + 1) * width];
            for (j, v) in terms {
                row[j] = v;
            }
            row[cols] = rhs;
            match rel {
                Relation::LessEq => {
                    row[next_slack] = 1.0;
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::GreaterEq => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    art_rows.push(i);
                    next_art += 1;
                }
                Relation::Equal => {
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    art_rows.push(i);
                    next_art += 1;
                }
            }
        }
        Self {
            m,
            width,
            art_start,
            art_rows,
            a,
            basis,
            pivot_row: Vec::new(),
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.width + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.a[i * self.width + self.width - 1]
    }

    fn objective_row_mut(&mut self) -> &mut [f64] {
        let w = self.width;
        let m = self.m;
        &mut self.a[m * w..(m + 1) * w]
    }

    fn solve(mut self, lp: &LinearProgram, options: &SimplexOptions) -> Result<LpSolution> {
        let mut iterations = 0;
        let cols = self.width - 1;

        if !self.art_rows.is_empty() {
            // Phase one: maximize -(sum of artificials).
            let w = self.width;
            let mut obj = vec![0.0; w];
            for &i in &self.art_rows {
                let row = &self.a[i * w..(i + 1) * w];
                for (o, v) in obj[..self.art_start].iter_mut().zip(row) {
                    *o += v;
                }
                obj[cols] += row[cols];
            }
            self.objective_row_mut().copy_from_slice(&obj);
            self.run(self.art_start, options, &mut iterations)?;

            let residual = self.at(self.m, cols);
            let scale: f64 = 1.0
                + self
                    .art_rows
                    .iter()
                    .map(|&i| self.rhs(i).abs())
                    .sum::<f64>();
            if residual > 1e-8 * scale {
                return Err(Error::Infeasible { residual });
            }
            self.evict_artificials(options);
        }

        // Phase two: reduced costs of the true objective.
        let w = self.width;
        let mut obj = vec![0.0; w];
        obj[..lp.num_vars].copy_from_slice(&lp.objective);
        for i in 0..self.m {
            let b = self.basis[i];
            let cb = if b < lp.num_vars {
                lp.objective[b]
            } else {
                0.0
            };
            if cb != 0.0 {
                let row = &self.a[i * w..(i + 1) * w];
                for (o, v) in obj[..self.art_start].iter_mut().zip(row) {
                    *o -= cb * v;
                }
                obj[cols] -= cb * row[cols];
            }
        }
        for o in &mut obj[self.art_start..cols] {
            *o = 0.0;
        }
        self.objective_row_mut().copy_from_slice(&obj);
        self.run(self.art_start, options, &mut iterations)?;

        let mut values = vec![0.0; lp.num_vars];
        for i in 0..self.m {
            let b = self.basis[i];
            if b < lp.num_vars {
                values[b] = self.rhs(i).max(0.0);
            }
        }
        let objective = values.iter().zip(&lp.objective).map(|(x, c)| x * c).sum();
        Ok(LpSolution {
            values,
            objective,
            iterations,
        })
    }

    /// Pivot zero-level artificials out of the basis. Rows whose structural
    /// part is entirely zero are redundant and keep their artificial.
    fn evict_artificials(&mut self, options: &SimplexOptions) {
        for i in 0..self.m {
            if self.basis[i] < self.art_start {
                continue;
            }
            let mut best = None;
            let mut best_abs = options.pivot_tolerance;
            for j in 0..self.art_start {
                let v = self.at(i, j).abs();
                if v > best_abs {
                    best_abs = v;
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                self.pivot(i, j);
            }
        }
    }

    fn run(
        &mut self,
        col_limit: usize,
        options: &SimplexOptions,
        iterations: &mut usize,
    ) -> Result<()> {
        let mut streak = 0;
        let mut bland = false;
        loop {
            let Some(c) = self.entering(col_limit, bland, options.tolerance) else {
                return Ok(());
            };
            if *iterations >= options.max_iterations {
                return Err(Error::IterationLimit {
                    iterations: *iterations,
                });
            }
            let Some(r) = self.leaving(c, bland, options.pivot_tolerance) else {
                return Err(Error::Unbounded);
            };
            if self.rhs(r) <= options.tolerance {
                streak += 1;
                if streak >= options.degenerate_streak {
                    bland = true;
                }
            } else {
                streak = 0;
                bland = false;
            }
            self.pivot(r, c);
            *iterations += 1;
        }
    }

    fn entering(&self, col_limit: usize, bland: bool, tol: f64) -> Option<usize> {
        let obj = &self.a[self.m * self.width..self.m * self.width + col_limit];
        if bland {
            return obj.iter().position(|&d| d > tol);
        }
        let mut best = None;
        let mut best_d = tol;
        for (j, &d) in obj.iter().enumerate() {
            if d > best_d {
                best_d = d;
                best = Some(j);
            }
        }
        best
    }

    fn leaving(&self, c: usize, bland: bool, ptol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..self.m {
            let aic = self.at(i, c);
            if aic <= ptol {
                continue;
            }
            let ratio = self.rhs(i).max(0.0) / aic;
            best = match best {
                None => Some((i, ratio, aic)),
                Some((bi, br, ba)) => {
                    if ratio < br - 1e-12 {
                        Some((i, ratio, aic))
                    } else if ratio <= br + 1e-12 {
                        let take = if bland {
                            self.basis[i] < self.basis[bi]
                        } else {
                            aic > ba
                        };
                        if take {
                            Some((i, ratio, aic))
                        } else {
                            Some((bi, br, ba))
                        }
                    } else {
                        Some((bi, br, ba))
                    }
                }
            };
        }
        best.map(|b| b.0)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let piv = self.a[r * w + c];
        self.pivot_row.clear();
        for j in 0..w {
            let v = &mut self.a[r * w + j];
            if *v != 0.0 {
                *v /= piv;
                if v.abs() < FLUSH && j != c {
                    *v = 0.0;
                } else {
                    self.pivot_row.push((j, *v));
                }
            }
        }
        self.a[r * w + c] = 1.0;
        for i in 0..=self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * w + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * w..(i + 1) * w];
            for &(j, v) in &self.pivot_row {
                let x = row[j] - f * v;
                row[j] = if x.abs() < FLUSH { 0.0 } else { x };
            }
            row[c] = 0.0;
        }
        self.basis[r] = c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::new(2);
        lp.set_objective_coeff(0, 3.0);
        lp.set_objective_coeff(1, 5.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::LessEq, 4.0);
        lp.add_constraint(vec![(1, 2.0)], Relation::LessEq, 12.0);
        lp.add_constraint(vec![(0, 3.0), (1, 2.0)], Relation::LessEq, 18.0);
        let sol = lp.solve(&SimplexOptions::default()).unwrap();
        assert_abs_diff_eq!(sol.objective, 36.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.values[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.values[1], 6.0, epsilon = 1e-12);
    }

    #[test]
    fn equality_and_ge_need_phase_one() {
        // max -x - y st x + y = 2, x >= 0.5, y - x >= -3
        let mut lp = LinearProgram::new(2);
        lp.set_objective_coeff(0, -1.0);
        lp.set_objective_coeff(1, -2.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Equal, 2.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::GreaterEq, 0.5);
        lp.add_constraint(vec![(1, 1.0), (0, -1.0)], Relation::GreaterEq, -3.0);
        let sol = lp.solve(&SimplexOptions::default()).unwrap();
        assert_abs_diff_eq!(sol.values[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.values[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.objective, -2.0, epsilon = 1e-12);
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![(0, 1.0)], Relation::LessEq, 1.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::GreaterEq, 2.0);
        assert!(matches!(
            lp.solve(&SimplexOptions::default()),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective_coeff(0, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::LessEq, 1.0);
        assert!(matches!(
            lp.solve(&SimplexOptions::default()),
            Err(Error::Unbounded)
        ));
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective_coeff(0, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Equal, 1.0);
        lp.add_constraint(vec![(0, 2.0), (1, 2.0)], Relation::Equal, 2.0);
        let sol = lp.solve(&SimplexOptions::default()).unwrap();
        assert_abs_diff_eq!(sol.objective, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective_coeff(0, 1.0);
        lp.set_objective_coeff(1, 1.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::LessEq, 1.0);
        lp.add_constraint(vec![(1, 1.0)], Relation::LessEq, 1.0);
        let opts = SimplexOptions {
            max_iterations: 1,
            ..Default::default()
        };
        assert!(matches!(lp.solve(&opts), Err(Error::IterationLimit { .. })));
    }
}
