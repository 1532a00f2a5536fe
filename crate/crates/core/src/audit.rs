//! Fairness audits of marginal rank matrices and exposure inequality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::policy::{MarginalRankMatrix, Ranking};
use crate::topk::TopKMatrix;

/// A cumulative constraint `(agent, top-k)` that attains the fairness level.
/// `k` counts positions from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindingConstraint {
    pub agent: usize,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    /// Largest phi for which the policy is phi-fair.
    pub phi_star: f64,
    pub binding: Vec<BindingConstraint>,
    /// `slack[x][k] = sum_{k' <= k} P[x][k'] - phi_star * q[x][k]`.
    pub slack: Vec<Vec<f64>>,
}

impl FairnessReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// `phi_star = min over q[x][k] > 0 of (sum_{k' <= k} P[x][k']) / q[x][k]`.
pub fn fairness_level(m: &MarginalRankMatrix, q: &TopKMatrix) -> Result<FairnessReport> {
    let n = m.n();
    if q.n() != n {
        return Err(Error::DimensionMismatch {
            context: "top-k matrix vs marginals",
            expected: n,
            found: q.n(),
        });
    }
    let mut cumulative = SquareMatrix::zeros(n);
    let mut ratios = Vec::with_capacity(n * n);
    for x in 0..n {
        let mut acc = 0.0;
        for k in 0..n {
            acc += m.get(x, k);
            cumulative[(x, k)] = acc;
            let qk = q.get(x, k);
            if qk > 0.0 {
                ratios.push((acc / qk, x, k));
            }
        }
    }
    let phi_star = ratios.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    if !phi_star.is_finite() {
        return Err(Error::InvalidTopK("every entry is zero".into()));
    }
    let cut = phi_star + 1e-12 * phi_star.abs().max(1.0);
    let binding = ratios
        .iter()
        .filter(|r| r.0 <= cut)
        .map(|&(_, agent, k)| BindingConstraint { agent, k: k + 1 })
        .collect();
    let slack = (0..n)
        .map(|x| {
            (0..n)
                .map(|k| cumulative[(x, k)] - phi_star * q.get(x, k))
                .collect()
        })
        .collect();
    Ok(FairnessReport {
        phi_star,
        binding,
        slack,
    })
}

pub fn is_phi_fair(m: &MarginalRankMatrix, q: &TopKMatrix, phi: f64, tol: f64) -> Result<bool> {
    Ok(fairness_level(m, q)?.phi_star >= phi - tol)
}

/// Mean-absolute-difference Gini coefficient
/// `sum_i sum_j |e_i - e_j| / (2 n^2 mean(e))`, in `[0, (n-1)/n]`.
pub fn gini(exposure: &[f64]) -> Result<f64> {
    if exposure.is_empty() {
        return Err(Error::param("exposure", 0.0, "empty exposure vector"));
    }
    if let Some(&e) = exposure.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
        return Err(Error::param(
            "exposure",
            e,
            "exposure must be finite and >= 0",
        ));
    }
    let total: f64 = exposure.iter().sum();
    if !(total > 0.0) {
        return Err(Error::param(
            "exposure",
            total,
            "total exposure must be positive",
        ));
    }
    let mut sorted = exposure.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    // sum over ordered pairs of |e_i - e_j| = 2 sum_i (2i - n + 1) e_(i)
    let pair_sum: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, e)| (2.0 * i as f64 - n + 1.0) * e)
        .sum::<f64>()
        * 2.0;
    Ok(pair_sum / (2.0 * n * total))
}

/// How many of `rankings` place each agent within the first `top_t` positions.
pub fn exposure_counts<'a, I>(rankings: I, n: usize, top_t: usize) -> Result<Vec<u64>>
where
    I: IntoIterator<Item = &'a Ranking>,
{
    if top_t > n {
        return Err(Error::param(
            "top_t",
            top_t as f64,
            "cannot exceed the number of agents",
        ));
    }
    let mut counts = vec![0u64; n];
    for r in rankings {
        if r.len() != n {
            return Err(Error::DimensionMismatch {
                context: "ranking length",
                expected: n,
                found: r.len(),
            });
        }
        for &x in &r.agents()[..top_t] {
            counts[x] += 1;
        }
    }
    Ok(counts)
}
