#![allow(dead_code)]

use fairrank::seed;
use fairrank::{
    EmpiricalMeritDistribution, MarginalRankMatrix, MeritVector, Ranking, RankingDistribution,
    SquareMatrix,
};
use rand::seq::SliceRandom;
use rand::Rng;

/// Random empirical distribution over `n` agents with small integer merits,
/// so ties are common.
pub fn random_empirical(n: usize, seed: u64) -> EmpiricalMeritDistribution {
    let mut rng = seed::rng(seed);
    let atoms = rng.random_range(1..=6);
    let weights: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let head: f64 = probs[..atoms - 1].iter().sum();
    probs[atoms - 1] = 1.0 - head;
    let support = probs
        .into_iter()
        .map(|p| {
            let merits: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64).collect();
            (MeritVector::new(merits).unwrap(), p)
        })
        .collect();
    EmpiricalMeritDistribution::new(support).unwrap()
}

pub fn random_permutation<R: Rng>(n: usize, rng: &mut R) -> Ranking {
    let mut agents: Vec<usize> = (0..n).collect();
    agents.shuffle(rng);
    Ranking::new(agents).unwrap()
}

/// Convex combination of up to `max_terms` random permutations.
pub fn random_lottery(n: usize, max_terms: usize, seed: u64) -> RankingDistribution {
    let mut rng = seed::rng(seed);
    let terms = rng.random_range(1..=max_terms);
    let weights: Vec<f64> = (0..terms).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let entries = weights
        .iter()
        .map(|w| (random_permutation(n, &mut rng), w / total))
        .collect();
    RankingDistribution::new(entries).unwrap()
}

/// Marginals of a lottery accumulated directly from permutation matrices.
pub fn lottery_marginals(dist: &RankingDistribution) -> MarginalRankMatrix {
    let n = dist.n();
    let mut m = SquareMatrix::zeros(n);
    for (ranking, p) in dist.entries() {
        for (pos, &agent) in ranking.agents().iter().enumerate() {
            m[(agent, pos)] += p;
        }
    }
    MarginalRankMatrix::new(m).unwrap()
}
