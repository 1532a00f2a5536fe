//! Rankings, lotteries over rankings, marginal rank matrices, and the OPT,
//! Thompson-sampling and mixing policies.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::merit::{MeritModel, MeritVector};
use crate::seed;
use crate::topk::{sampled_position_counts, sort_by_merit, TopKMatrix};

const TOL: f64 = 1e-9;

/// A permutation mapping position `k` to the agent placed there.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Ranking(Vec<usize>);

impl Ranking {
    pub fn new(agents: Vec<usize>) -> Result<Self> {
        let n = agents.len();
        let mut seen = vec![false; n];
        for &a in &agents {
            if a >= n || std::mem::replace(&mut seen[a], true) {
                return Err(Error::InvalidRanking(format!(
                    "{agents:?} is not a permutation of 0..{n}"
                )));
            }
        }
        Ok(Self(agents))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn agents(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Position of every agent (the inverse permutation).
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (k, &x) in self.0.iter().enumerate() {
            pos[x] = k;
        }
        pos
    }
}

impl TryFrom<Vec<usize>> for Ranking {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Ranking> for Vec<usize> {
    fn from(r: Ranking) -> Self {
        r.0
    }
}

/// A lottery over rankings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRepr", into = "DistributionRepr")]
pub struct RankingDistribution {
    n: usize,
    entries: Vec<(Ranking, f64)>,
}

#[derive(Serialize, Deserialize)]
struct DistributionRepr {
    n: usize,
    entries: Vec<EntryRepr>,
}

#[derive(Serialize, Deserialize)]
struct EntryRepr {
    perm: Ranking,
    prob: f64,
}

impl TryFrom<DistributionRepr> for RankingDistribution {
    type Error = Error;

    fn try_from(r: DistributionRepr) -> Result<Self> {
        let dist = Self::new(r.entries.into_iter().map(|e| (e.perm, e.prob)).collect())?;
        if dist.n != r.n {
            return Err(Error::DimensionMismatch {
                context: "ranking distribution `n`",
                expected: r.n,
                found: dist.n,
            });
        }
        Ok(dist)
    }
}

impl From<RankingDistribution> for DistributionRepr {
    fn from(d: RankingDistribution) -> Self {
        DistributionRepr {
            n: d.n,
            entries: d
                .entries
                .into_iter()
                .map(|(perm, prob)| EntryRepr { perm, prob })
                .collect(),
        }
    }
}

impl RankingDistribution {
    pub fn new(entries: Vec<(Ranking, f64)>) -> Result<Self> {
        let Some((first, _)) = entries.first() else {
            return Err(Error::InvalidRanking("empty ranking distribution".into()));
        };
        let n = first.len();
        let mut total = 0.0;
        for (r, p) in &entries {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "ranking length",
                    expected: n,
                    found: r.len(),
                });
            }
            if !(*p > 0.0) || !p.is_finite() {
                return Err(Error::InvalidRanking(format!(
                    "probability {p} is not positive"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > TOL {
            return Err(Error::InvalidRanking(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { n, entries })
    }

    pub fn point_mass(ranking: Ranking) -> Self {
        Self {
            n: ranking.len(),
            entries: vec![(ranking, 1.0)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(Ranking, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Ranking {
        let total: f64 = self.entries.iter().map(|e| e.1).sum();
        let mut u = rng.random::<f64>() * total;
        for (r, p) in &self.entries {
            if u < *p {
                return r;
            }
            u -= p;
        }
        &self.entries.last().unwrap().0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Doubly stochastic matrix `P[x][k]` = probability that agent `x` is placed
/// at position `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SquareMatrix", into = "SquareMatrix")]
pub struct MarginalRankMatrix(SquareMatrix);

impl MarginalRankMatrix {
    pub fn new(p: SquareMatrix) -> Result<Self> {
        Self::with_tolerance(p, TOL)
    }

    pub fn with_tolerance(p: SquareMatrix, tol: f64) -> Result<Self> {
        let n = p.n();
        if n == 0 {
            return Err(Error::NotDoublyStochastic("empty matrix".into()));
        }
        if let Some((idx, v)) = p
            .as_slice()
            .iter()
            .enumerate()
            .find(|(_, v)| !(-tol..=1.0 + tol).contains(*v))
        {
            return Err(Error::NotDoublyStochastic(format!(
                "entry ({}, {}) = {v} outside [0, 1]",
                idx / n,
                idx % n
            )));
        }
        for i in 0..n {
            let r = p.row_sum(i);
            if (r - 1.0).abs() > tol {
                return Err(Error::NotDoublyStochastic(format!("row {i} sums to {r}")));
            }
            let c = p.col_sum(i);
            if (c - 1.0).abs() > tol {
                return Err(Error::NotDoublyStochastic(format!(
                    "column {i} sums to {c}"
                )));
            }
        }
        Ok(Self(p))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SquareMatrix::from_rows(rows)?)
    }

    pub fn from_ranking(r: &Ranking) -> Self {
        let mut p = SquareMatrix::zeros(r.len());
        for (k, &x) in r.agents().iter().enumerate() {
            p[(x, k)] = 1.0;
        }
        Self(p)
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    #[inline]
    pub fn get(&self, agent: usize, position: usize) -> f64 {
        self.0[(agent, position)]
    }

    pub fn row(&self, agent: usize) -> &[f64] {
        self.0.row(agent)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn max_abs_diff(&self, other: &MarginalRankMatrix) -> f64 {
        self.0.max_abs_diff(&other.0)
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &MarginalRankMatrix, lambda: f64) -> Self {
        Self(self.0.lerp(&other.0, lambda))
    }

    /// Probability that `agent` is placed in the top `k + 1` positions.
    pub fn cumulative(&self, agent: usize, k: usize) -> f64 {
        self.0.row(agent)[..=k].iter().sum()
    }

    pub fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        Self::new(SquareMatrix::from_csv(text)?)
    }
}

impl TryFrom<SquareMatrix> for MarginalRankMatrix {
    type Error = Error;

    fn try_from(m: SquareMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<MarginalRankMatrix> for SquareMatrix {
    fn from(p: MarginalRankMatrix) -> Self {
        p.0
    }
}

/// Sort by nonincreasing expected merit; equal merits keep index order.
pub fn opt_ranking(expected_merits: &MeritVector) -> Ranking {
    let v = expected_merits.values();
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
    Ranking(order)
}

/// Rank by one posterior draw, ties broken uniformly.
pub fn ts_sample_with<M: MeritModel, R: Rng + ?Sized>(model: &M, rng: &mut R) -> Ranking {
    let mut merits = vec![0.0; model.agent_count()];
    model.sample_into(rng, &mut merits);
    let (mut keys, mut order) = (Vec::new(), Vec::new());
    sort_by_merit(&merits, rng, &mut keys, &mut order);
    Ranking(order)
}

pub fn ts_sample<M: MeritModel>(model: &M, seed: u64) -> Ranking {
    ts_sample_with(model, &mut seed::rng(seed))
}

/// Thompson sampling with probability `phi`, otherwise the OPT ranking.
pub fn mixing_sample<M: MeritModel>(model: &M, phi: f64, seed: u64) -> Result<Ranking> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::param("phi", phi, "must lie in [0, 1]"));
    }
    let mut rng = seed::rng(seed);
    if rng.random::<f64>() < phi {
        Ok(ts_sample_with(model, &mut rng))
    } else {
        Ok(opt_ranking(&model.expected_merits()))
    }
}

/// Marginals of the Thompson-sampling policy: `P[x][k] = q[x][k] - q[x][k-1]`.
pub fn ts_marginals(q: &TopKMatrix) -> Result<MarginalRankMatrix> {
    let n = q.n();
    let p = SquareMatrix::from_fn(n, |x, k| {
        let prev = if k == 0 { 0.0 } else { q.get(x, k - 1) };
        (q.get(x, k) - prev).max(0.0)
    });
    MarginalRankMatrix::new(p)
}

/// Empirical Thompson-sampling marginals from `samples` draws.
pub fn sampled_ts_marginals<M: MeritModel>(
    model: &M,
    samples: usize,
    seed: u64,
) -> Result<MarginalRankMatrix> {
    if samples == 0 {
        return Err(Error::param("samples", 0.0, "need at least one sample"));
    }
    let n = model.agent_count();
    let counts = sampled_position_counts(model, samples, seed);
    let m = samples as f64;
    MarginalRankMatrix::new(SquareMatrix::from_fn(n, |x, k| {
        counts[x * n + k] as f64 / m
    }))
}

/// Marginals of the OPT/TS mixing policy: `phi * TS + (1 - phi) * OPT`.
pub fn mixing_marginals(
    q: &TopKMatrix,
    expected_merits: &MeritVector,
    phi: f64,
) -> Result<MarginalRankMatrix> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::param("phi", phi, "must lie in [0, 1]"));
    }
    let opt = MarginalRankMatrix::from_ranking(&opt_ranking(expected_merits));
    Ok(ts_marginals(q)?.mix(&opt, phi))
}

/// `P[x][k] = sum over rankings placing x at k of their probability`.
pub fn marginals_of_distribution(dist: &RankingDistribution) -> Result<MarginalRankMatrix> {
    let mut p = SquareMatrix::zeros(dist.n());
    for (r, prob) in dist.entries() {
        for (k, &x) in r.agents().iter().enumerate() {
            p[(x, k)] += prob;
        }
    }
    MarginalRankMatrix::new(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merit::{EmpiricalMeritDistribution, GaussianRelevanceModel};
    use crate::topk::exact_topk;

    fn mv(v: &[f64]) -> MeritVector {
        MeritVector::new(v.to_vec()).unwrap()
    }

    fn coin_example() -> EmpiricalMeritDistribution {
        EmpiricalMeritDistribution::independent_product(&[
            vec![(1.0, 1.0)],
            vec![(0.0, 0.5), (1.0, 0.5)],
            vec![(0.0, 0.5), (1.0, 0.5)],
        ])
        .unwrap()
    }

    #[test]
    fn opt_ranking_orders() {
        assert_eq!(opt_ranking(&mv(&[1.0, 0.5, 0.5])).agents(), &[0, 1, 2]);
        assert_eq!(opt_ranking(&mv(&[3.0, 2.0, 1.0])).agents(), &[0, 1, 2]);
        assert_eq!(opt_ranking(&mv(&[1.0, 2.0, 3.0])).agents(), &[2, 1, 0]);
    }

    #[test]
    fn ts_on_point_mass_is_deterministic() {
        let d = EmpiricalMeritDistribution::point_mass(vec![3.0, 2.0, 1.0]).unwrap();
        for s in 0..10 {
            assert_eq!(ts_sample(&d, s).agents(), &[0, 1, 2]);
        }
    }

    #[test]
    fn ts_first_place_frequencies() {
        let d = coin_example();
        let first_a = (0..100_000)
            .filter(|&s| ts_sample(&d, s).agents()[0] == 0)
            .count();
        assert!((first_a as f64 / 1e5 - 14.0 / 24.0).abs() < 0.01);

        let iid = GaussianRelevanceModel::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let first0 = (0..100_000)
            .filter(|&s| ts_sample(&iid, s).agents()[0] == 0)
            .count();
        assert!((first0 as f64 / 1e5 - 0.5).abs() < 0.01);
    }

    #[test]
    fn mixing_endpoints() {
        let d = coin_example();
        for s in 0..50 {
            assert_eq!(mixing_sample(&d, 0.0, s).unwrap().agents(), &[0, 1, 2]);
            assert_eq!(
                mixing_sample(&d, 1.0, s).unwrap(),
                ts_sample_with(&d, &mut {
                    let mut rng = seed::rng(s);
                    let _: f64 = rng.random();
                    rng
                })
            );
        }
        assert!(mixing_sample(&d, 1.5, 0).is_err());
        assert!(mixing_sample(&d, -0.1, 0).is_err());
    }

    #[test]
    fn ts_marginals_of_coin_example() {
        let q = exact_topk(&coin_example()).unwrap();
        let p = ts_marginals(&q).unwrap();
        let expected = SquareMatrix::from_rows(&[
            vec![14.0, 8.0, 2.0],
            vec![5.0, 8.0, 11.0],
            vec![5.0, 8.0, 11.0],
        ])
        .unwrap()
        .scaled(1.0 / 24.0);
        assert!(p.matrix().max_abs_diff(&expected) < 1e-15);

        let certain = TopKMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(
            ts_marginals(&certain).unwrap().matrix(),
            &SquareMatrix::identity(2)
        );
        let single = TopKMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert_eq!(ts_marginals(&single).unwrap().matrix().as_slice(), &[1.0]);
    }

    #[test]
    fn marginals_of_explicit_lotteries() {
        let r = |v: Vec<usize>| Ranking::new(v).unwrap();
        let four = RankingDistribution::new(vec![
            (r(vec![0, 1, 2]), 0.25),
            (r(vec![0, 2, 1]), 0.25),
            (r(vec![1, 0, 2]), 0.25),
            (r(vec![2, 0, 1]), 0.25),
        ])
        .unwrap();
        let p = marginals_of_distribution(&four).unwrap();
        let expected = SquareMatrix::from_rows(&[
            vec![0.5, 0.5, 0.0],
            vec![0.25, 0.25, 0.5],
            vec![0.25, 0.25, 0.5],
        ])
        .unwrap();
        assert_eq!(p.matrix(), &expected);

        let single = RankingDistribution::point_mass(r(vec![2, 0, 1]));
        assert_eq!(
            marginals_of_distribution(&single).unwrap(),
            MarginalRankMatrix::from_ranking(&r(vec![2, 0, 1]))
        );
        let halves =
            RankingDistribution::new(vec![(r(vec![0, 1]), 0.5), (r(vec![1, 0]), 0.5)]).unwrap();
        assert!(marginals_of_distribution(&halves)
            .unwrap()
            .matrix()
            .as_slice()
            .iter()
            .all(|&v| v == 0.5));
    }

    #[test]
    fn ranking_validation() {
        assert!(Ranking::new(vec![0, 0]).is_err());
        assert!(Ranking::new(vec![0, 2]).is_err());
        assert_eq!(
            Ranking::new(vec![2, 0, 1]).unwrap().positions(),
            vec![1, 2, 0]
        );
        let r = Ranking::identity(2);
        assert!(RankingDistribution::new(vec![(r.clone(), 0.5)]).is_err());
        assert!(RankingDistribution::new(vec![(r, 1.0), (Ranking::identity(3), 0.0)]).is_err());
    }

    #[test]
    fn distribution_json_shape() {
        let d = RankingDistribution::new(vec![
            (Ranking::new(vec![1, 0]).unwrap(), 0.25),
            (Ranking::identity(2), 0.75),
        ])
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&d.to_json()).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["entries"][0]["perm"], serde_json::json!([1, 0]));
        assert_eq!(v["entries"][0]["prob"], 0.25);
        assert_eq!(RankingDistribution::from_json(&d.to_json()).unwrap(), d);
        assert!(
            RankingDistribution::from_json(r#"{"n":3,"entries":[{"perm":[0,1],"prob":1}]}"#)
                .is_err()
        );
    }

    #[test]
    fn rejects_non_doubly_stochastic() {
        assert!(MarginalRankMatrix::from_rows(&[vec![0.6, 0.4], vec![0.6, 0.4]]).is_err());
        assert!(MarginalRankMatrix::from_rows(&[vec![1.2, -0.2], vec![-0.2, 1.2]]).is_err());
    }
}
