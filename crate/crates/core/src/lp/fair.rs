use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::merit::MeritVector;
use crate::policy::{ts_marginals, MarginalRankMatrix, RankingDistribution};
use crate::topk::TopKMatrix;
use crate::utility::{policy_utility, PositionWeights};

use super::bvn::{bvn_decompose, DEFAULT_ZERO_TOL};
use super::simplex::{LinearProgram, Relation, SimplexOptions};

/// The phi-fair utility-maximizing LP over marginal rank matrices `P`:
///
/// ```text
/// maximize   sum_x sum_k P[x][k] * E[v_x] * w[k]
/// subject to sum_{k' <= k} P[x][k'] >= phi * q[x][k]   for all x, k
///            sum_k P[x][k] = 1,  sum_x P[x][k] = 1,    0 <= P <= 1
/// ```
#[derive(Debug, Clone)]
pub struct FairLpInstance {
    phi: f64,
    q: TopKMatrix,
    merits: MeritVector,
    weights: PositionWeights,
    objective: SquareMatrix,
}

pub fn build_lp(
    q: &TopKMatrix,
    expected_merits: &MeritVector,
    weights: &PositionWeights,
    phi: f64,
) -> Result<FairLpInstance> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::param("phi", phi, "must lie in [0, 1]"));
    }
    let n = q.n();
    for (context, found) in [
        (
            "expected merits vs top-k matrix",
            expected_merits.agent_count(),
        ),
        ("weights vs top-k matrix", weights.len()),
    ] {
        if found != n {
            return Err(Error::DimensionMismatch {
                context,
                expected: n,
                found,
            });
        }
    }
    let w = weights.values();
    let objective = SquareMatrix::from_fn(n, |x, k| expected_merits[x] * w[k]);
    Ok(FairLpInstance {
        phi,
        q: q.clone(),
        merits: expected_merits.clone(),
        weights: weights.clone(),
        objective,
    })
}

impl FairLpInstance {
    pub fn n(&self) -> usize {
        self.q.n()
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn topk(&self) -> &TopKMatrix {
        &self.q
    }

    pub fn expected_merits(&self) -> &MeritVector {
        &self.merits
    }

    pub fn weights(&self) -> &PositionWeights {
        &self.weights
    }

    /// `c[x][k] = E[v_x] * w[k]`.
    pub fn objective(&self) -> &SquareMatrix {
        &self.objective
    }

    /// Right-hand side `phi * q[x][k]` of the cumulative fairness constraints.
    pub fn fairness_rhs(&self, x: usize, k: usize) -> f64 {
        self.phi * self.q.get(x, k)
    }

    /// The program written directly over the `n^2` entries of `P`
    /// (variable `x * n + k`): `n^2` fairness rows and `2n` equalities.
    pub fn marginal_program(&self) -> LinearProgram {
        let n = self.n();
        let mut lp = LinearProgram::new(n * n);
        for x in 0..n {
            for k in 0..n {
                lp.set_objective_coeff(x * n + k, self.objective[(x, k)]);
                lp.add_constraint(
                    (0..=k).map(|j| (x * n + j, 1.0)).collect(),
                    Relation::GreaterEq,
                    self.fairness_rhs(x, k),
                );
            }
        }
        for i in 0..n {
            lp.add_constraint(
                (0..n).map(|k| (i * n + k, 1.0)).collect(),
                Relation::Equal,
                1.0,
            );
            lp.add_constraint(
                (0..n).map(|x| (x * n + i, 1.0)).collect(),
                Relation::Equal,
                1.0,
            );
        }
        for j in 0..n * n {
            lp.add_constraint(vec![(j, 1.0)], Relation::LessEq, 1.0);
        }
        lp
    }

    /// Equivalent program over cumulative placement probabilities
    /// `z[x][k] = sum_{k' <= k} P[x][k']`, shifted by their fairness floor:
    /// `y[x][k] = z[x][k] - phi q[x][k] >= 0` for `k < n - 1` (variable
    /// `x * (n - 1) + k`), with `z[x][n-1] = 1` fixed. The fairness
    /// constraints become variable bounds; what remains is monotonicity of
    /// each row of `z` and the column totals `sum_x z[x][k] = k + 1`.
    /// Row sums of `P` hold by construction. The objective, via summation by
    /// parts, is `sum_x E[v_x] sum_k (w[k] - w[k+1]) z[x][k]` plus a
    /// constant.
    pub fn cumulative_program(&self) -> LinearProgram {
        let n = self.n();
        let m = n - 1;
        let w = self.weights.values();
        let var = |x: usize, k: usize| x * m + k;
        let mut lp = LinearProgram::new(n * m);
        for x in 0..n {
            for k in 0..m {
                lp.set_objective_coeff(var(x, k), self.merits[x] * (w[k] - w[k + 1]));
                if k + 1 < m {
                    lp.add_constraint(
                        vec![(var(x, k), 1.0), (var(x, k + 1), -1.0)],
                        Relation::LessEq,
                        self.fairness_rhs(x, k + 1) - self.fairness_rhs(x, k),
                    );
                } else {
                    lp.add_constraint(
                        vec![(var(x, k), 1.0)],
                        Relation::LessEq,
                        1.0 - self.fairness_rhs(x, k),
                    );
                }
            }
        }
        for k in 0..m {
            let floor: f64 = (0..n).map(|x| self.fairness_rhs(x, k)).sum();
            lp.add_constraint(
                (0..n).map(|x| (var(x, k), 1.0)).collect(),
                Relation::Equal,
                (k + 1) as f64 - floor,
            );
        }
        lp
    }

    fn marginals_from_cumulative(&self, y: &[f64]) -> Result<MarginalRankMatrix> {
        let n = self.n();
        let m = n - 1;
        let z = |x: usize, k: usize| {
            if k == m {
                1.0
            } else {
                y[x * m + k] + self.fairness_rhs(x, k)
            }
        };
        let p = SquareMatrix::from_fn(n, |x, k| {
            let prev = if k == 0 { 0.0 } else { z(x, k - 1) };
            (z(x, k) - prev).max(0.0)
        });
        MarginalRankMatrix::new(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub simplex: SimplexOptions,
    /// Entries at or below this are treated as zero by the decomposition.
    pub zero_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            simplex: SimplexOptions::default(),
            zero_tol: DEFAULT_ZERO_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FairLpSolution {
    pub marginals: MarginalRankMatrix,
    pub objective: f64,
    pub iterations: usize,
}

/// Optimal phi-fair marginal rank matrix. `phi = 1` pins every cumulative
/// constraint to equality, so the Thompson-sampling marginals are returned
/// without running the solver.
pub fn solve_lp(instance: &FairLpInstance, config: &SolverConfig) -> Result<FairLpSolution> {
    let n = instance.n();
    let (marginals, iterations) = if n == 1 {
        (MarginalRankMatrix::new(SquareMatrix::identity(1))?, 0)
    } else if instance.phi == 1.0 {
        (ts_marginals(&instance.q)?, 0)
    } else {
        let lp = instance.cumulative_program();
        let sol = lp.solve(&config.simplex)?;
        (
            instance.marginals_from_cumulative(&sol.values)?,
            sol.iterations,
        )
    };
    let objective = policy_utility(&marginals, &instance.merits, &instance.weights)?;
    Ok(FairLpSolution {
        marginals,
        objective,
        iterations,
    })
}

#[derive(Debug, Clone)]
pub struct LpPolicy {
    pub solution: FairLpSolution,
    pub lottery: RankingDistribution,
}

/// Solve the LP, then decompose its optimum into a lottery over rankings.
pub fn lp_policy(
    q: &TopKMatrix,
    expected_merits: &MeritVector,
    weights: &PositionWeights,
    phi: f64,
    config: &SolverConfig,
) -> Result<LpPolicy> {
    let instance = build_lp(q, expected_merits, weights, phi)?;
    let solution = solve_lp(&instance, config)?;
    let lottery = bvn_decompose(&solution.marginals, config.zero_tol)?;
    Ok(LpPolicy { solution, lottery })
}
