use crate::error::{Error, Result};
use crate::policy::{MarginalRankMatrix, Ranking, RankingDistribution};

use super::matching::perfect_matching;

pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// Birkhoff-von Neumann decomposition: repeatedly match agents to positions
/// on the support `{P > zero_tol}`, peel off the smallest matched entry, and
/// record the matching as a ranking with that weight. Each round empties at
/// least one entry, so at most `n^2 - 2n + 2` rankings are produced.
pub fn bvn_decompose(m: &MarginalRankMatrix, zero_tol: f64) -> Result<RankingDistribution> {
    if !(zero_tol >= 0.0) {
        return Err(Error::param("zero_tol", zero_tol, "must be >= 0"));
    }
    let n = m.n();
    let mut residual = m.matrix().clone();
    let mut entries: Vec<(Ranking, f64)> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(n); n];

    for _ in 0..=n * n {
        let max_entry = residual.as_slice().iter().cloned().fold(0.0, f64::max);
        if max_entry <= zero_tol {
            break;
        }
        for (x, list) in adj.iter_mut().enumerate() {
            list.clear();
            let row = residual.row(x);
            list.extend((0..n).filter(|&k| row[k] > zero_tol));
            // heavy entries first so the peeled weight tends to be large
            list.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
        }
        let Some(assignment) = perfect_matching(&adj) else {
            let leftover = (0..n).map(|x| residual.row_sum(x)).fold(0.0, f64::max);
            if leftover <= 1e-7 {
                break;
            }
            return Err(Error::NoPerfectMatching { residual: leftover });
        };
        let theta = assignment
            .iter()
            .enumerate()
            .map(|(x, &k)| residual[(x, k)])
            .fold(f64::INFINITY, f64::min);
        let mut order = vec![0; n];
        for (x, &k) in assignment.iter().enumerate() {
            order[k] = x;
            let v = &mut residual[(x, k)];
            *v = (*v - theta).max(0.0);
        }
        entries.push((Ranking::new(order)?, theta));
    }

    let total: f64 = entries.iter().map(|e| e.1).sum();
    if entries.is_empty() || !(total > 0.0) {
        return Err(Error::NoPerfectMatching { residual: 1.0 });
    }
    for e in &mut entries {
        e.1 /= total;
    }
    RankingDistribution::new(entries)
}
