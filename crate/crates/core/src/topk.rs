//! Top-k membership probabilities `q[x][k] = P(agent x is among the top k+1
//! by merit)`, the right-hand side of every fairness constraint.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::merit::{EmpiricalMeritDistribution, MeritModel};
use crate::seed;

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SquareMatrix", into = "SquareMatrix")]
pub struct TopKMatrix(SquareMatrix);

impl TopKMatrix {
    /// Validates entries in [0, 1], nondecreasing rows, last column 1 and
    /// column `k` summing to `k + 1`.
    pub fn new(q: SquareMatrix) -> Result<Self> {
        let n = q.n();
        if n == 0 {
            return Err(Error::InvalidTopK("no agents".into()));
        }
        for x in 0..n {
            let row = q.row(x);
            for (k, &v) in row.iter().enumerate() {
                if !(-TOL..=1.0 + TOL).contains(&v) {
                    return Err(Error::InvalidTopK(format!(
                        "q[{x}][{k}] = {v} outside [0, 1]"
                    )));
                }
                if k > 0 && v < row[k - 1] - TOL {
                    return Err(Error::InvalidTopK(format!(
                        "row {x} decreases at k = {k} ({} -> {v})",
                        row[k - 1]
                    )));
                }
            }
            if (row[n - 1] - 1.0).abs() > TOL {
                return Err(Error::InvalidTopK(format!(
                    "q[{x}][{}] = {} but must be 1",
                    n - 1,
                    row[n - 1]
                )));
            }
        }
        for k in 0..n {
            let s = q.col_sum(k);
            if (s - (k + 1) as f64).abs() > TOL {
                return Err(Error::InvalidTopK(format!(
                    "column {k} sums to {s}, expected {}",
                    k + 1
                )));
            }
        }
        Ok(Self(q))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SquareMatrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    #[inline]
    pub fn get(&self, agent: usize, k: usize) -> f64 {
        self.0[(agent, k)]
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn max_abs_diff(&self, other: &TopKMatrix) -> f64 {
        self.0.max_abs_diff(&other.0)
    }

    pub fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        Self::new(SquareMatrix::from_csv(text)?)
    }
}

impl TryFrom<SquareMatrix> for TopKMatrix {
    type Error = Error;

    fn try_from(m: SquareMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<TopKMatrix> for SquareMatrix {
    fn from(q: TopKMatrix) -> Self {
        q.0
    }
}

/// Exact top-k probabilities of a finite support. Within an atom, an agent
/// with `a` strictly better agents and `t` tied peers is in the top `k` with
/// probability `clamp(k - a, 0, t + 1) / (t + 1)` under uniform tie-breaking.
pub fn exact_topk(dist: &EmpiricalMeritDistribution) -> Result<TopKMatrix> {
    let n = dist.agent_count();
    let mut q = SquareMatrix::zeros(n);
    for (v, p) in dist.atoms() {
        let v = v.values();
        for x in 0..n {
            let (mut above, mut tied) = (0usize, 0usize);
            for (y, &vy) in v.iter().enumerate() {
                if vy > v[x] {
                    above += 1;
                } else if vy == v[x] && y != x {
                    tied += 1;
                }
            }
            let group = (tied + 1) as f64;
            let row = q.row_mut(x);
            for (k, slot) in row.iter_mut().enumerate() {
                let inside = (k + 1).saturating_sub(above).min(tied + 1);
                if inside > 0 {
                    *slot += p * inside as f64 / group;
                }
            }
        }
    }
    TopKMatrix::new(q)
}

/// Fills `order` with agents sorted by decreasing merit; ties are broken by
/// independent uniform random keys, i.e. uniformly at random.
pub(crate) fn sort_by_merit<R: Rng + ?Sized>(
    merits: &[f64],
    rng: &mut R,
    keys: &mut Vec<u64>,
    order: &mut Vec<usize>,
) {
    keys.clear();
    keys.extend((0..merits.len()).map(|_| rng.random::<u64>()));
    order.clear();
    order.extend(0..merits.len());
    order.sort_unstable_by(|&a, &b| {
        merits[b]
            .total_cmp(&merits[a])
            .then_with(|| keys[a].cmp(&keys[b]))
    });
}

/// Counts `counts[x * n + pos]` of how often agent `x` landed at position
/// `pos` over `samples` Thompson draws. Sample `i` uses its own seed derived
/// from `(seed, i)`, so the result does not depend on the thread count.
pub fn sampled_position_counts<M: MeritModel>(model: &M, samples: usize, seed: u64) -> Vec<u64> {
    let n = model.agent_count();
    (0..samples)
        .into_par_iter()
        .fold(
            || (vec![0u64; n * n], vec![0.0; n], Vec::new(), Vec::new()),
            |(mut counts, mut merits, mut keys, mut order), i| {
                let mut rng = seed::rng_for(seed, i as u64);
                model.sample_into(&mut rng, &mut merits);
                sort_by_merit(&merits, &mut rng, &mut keys, &mut order);
                for (pos, &x) in order.iter().enumerate() {
                    counts[x * n + pos] += 1;
                }
                (counts, merits, keys, order)
            },
        )
        .map(|acc| acc.0)
        .reduce(
            || vec![0u64; n * n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

/// Monte-Carlo estimate of the top-k matrix from `samples` joint draws.
pub fn monte_carlo_topk<M: MeritModel>(model: &M, samples: usize, seed: u64) -> Result<TopKMatrix> {
    if samples == 0 {
        return Err(Error::param("samples", 0.0, "need at least one sample"));
    }
    let n = model.agent_count();
    let counts = sampled_position_counts(model, samples, seed);
    let m = samples as f64;
    let mut q = SquareMatrix::zeros(n);
    for x in 0..n {
        let mut acc = 0u64;
        for k in 0..n {
            acc += counts[x * n + k];
            q[(x, k)] = acc as f64 / m;
        }
    }
    TopKMatrix::new(q)
}

/// Samples needed so every entry is within `eps` with probability at least
/// `1 - n^-kappa`: `ceil((kappa + 1) ln(2n) / (2 eps^2))`.
pub fn dkw_sample_size(n: usize, kappa: f64, eps: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::param("n", 0.0, "need at least one agent"));
    }
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::param("kappa", kappa, "must be positive"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param("epsilon", eps, "must lie in (0, 1)"));
    }
    let m = (kappa + 1.0) * (2.0 * n as f64).ln() / (2.0 * eps * eps);
    Ok(m.ceil() as usize)
}

/// Inflates an estimate with additive error at most `eps` so it can stand in
/// for the true matrix: `q'[x][k] = k (q[x][k] + eps) / (k + n eps)` with
/// 1-based `k`. Column sums are preserved. A prefix-max pass restores row
/// monotonicity; it is a no-op whenever the input rows are monotone.
pub fn robustify(q: &TopKMatrix, eps: f64) -> Result<TopKMatrix> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::param("epsilon", eps, "must be >= 0"));
    }
    let n = q.n();
    let nf = n as f64;
    let mut out = SquareMatrix::zeros(n);
    for x in 0..n {
        let mut running = f64::NEG_INFINITY;
        for k in 0..n {
            let kk = (k + 1) as f64;
            // at most 1 in exact arithmetic since k <= n; clamp rounding
            let v = (kk * (q.get(x, k) + eps) / (kk + nf * eps)).min(1.0);
            running = running.max(v);
            out[(x, k)] = running;
        }
    }
    TopKMatrix::new(out)
}
