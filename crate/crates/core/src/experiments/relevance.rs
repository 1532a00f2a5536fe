//! Exposure under Gaussian relevance uncertainty: ranking each user's list by
//! point scores (OPT) versus by one posterior draw (TS).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audit::{exposure_counts, gini};
use crate::error::{Error, Result};
use crate::merit::{gaussian_sigma_calibration, GaussianRelevanceModel, MeritVector};
use crate::policy::{opt_ranking, ts_sample_with, Ranking};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelevanceConfig {
    pub gamma: f64,
    pub epsilon: f64,
    pub users_per_arm: usize,
    pub top_t: usize,
    pub seed: u64,
    pub histogram_bins: usize,
}

impl Default for RelevanceConfig {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            epsilon: 0.1,
            users_per_arm: 200,
            top_t: 5,
            seed: 0,
            histogram_bins: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmExposure {
    /// Number of users whose top `top_t` contains each item.
    pub counts: Vec<u64>,
    pub gini: f64,
    pub zero_exposure: usize,
    /// Item counts per exposure tier; tiers share `RelevanceReport::bin_edges`.
    pub histogram: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceReport {
    pub sigma: Vec<f64>,
    pub users: Vec<usize>,
    pub top_t: usize,
    pub bin_edges: Vec<f64>,
    pub opt: ArmExposure,
    pub ts: ArmExposure,
}

impl RelevanceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

fn histogram(counts: &[u64], edges: &[f64]) -> Vec<u64> {
    let bins = edges.len() - 1;
    let mut h = vec![0u64; bins];
    for &c in counts {
        let c = c as f64;
        let b = edges[1..].iter().position(|&e| c < e).unwrap_or(bins - 1);
        h[b] += 1;
    }
    h
}

fn arm(counts: Vec<u64>, edges: &[f64]) -> Result<ArmExposure> {
    let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    Ok(ArmExposure {
        gini: gini(&as_f)?,
        zero_exposure: counts.iter().filter(|&&c| c == 0).count(),
        histogram: histogram(&counts, edges),
        counts,
    })
}

/// Both arms serve the same randomly drawn `users_per_arm` users.
pub fn relevance_experiment(
    scores: &[Vec<f64>],
    config: &RelevanceConfig,
) -> Result<RelevanceReport> {
    let items = scores.first().map_or(0, Vec::len);
    if items == 0 {
        return Err(Error::Dataset("empty score matrix".into()));
    }
    for (u, row) in scores.iter().enumerate() {
        if row.len() != items {
            return Err(Error::DimensionMismatch {
                context: "score matrix row",
                expected: items,
                found: row.len(),
            });
        }
        if let Some(s) = row.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Dataset(format!(
                "score {s} of user {u} outside [0, 1]"
            )));
        }
    }
    if config.top_t == 0 || config.top_t > items {
        return Err(Error::param(
            "top_t",
            config.top_t as f64,
            "must lie in 1..=items",
        ));
    }
    if config.users_per_arm == 0 || config.users_per_arm > scores.len() {
        return Err(Error::param(
            "users_per_arm",
            config.users_per_arm as f64,
            "must lie in 1..=users",
        ));
    }
    if config.histogram_bins == 0 {
        return Err(Error::param("histogram_bins", 0.0, "must be positive"));
    }
    let sigma = gaussian_sigma_calibration(scores, config.gamma, config.epsilon)?;
    let mut rng = seed::rng_for(config.seed, 0);
    let users = rand::seq::index::sample(&mut rng, scores.len(), config.users_per_arm).into_vec();

    let (opt, ts) = arm_rankings(scores, &sigma, &users, config.seed)?;
    let opt_counts = exposure_counts(opt.iter(), items, config.top_t)?;
    let ts_counts = exposure_counts(ts.iter(), items, config.top_t)?;
    let top = opt_counts
        .iter()
        .chain(&ts_counts)
        .copied()
        .max()
        .unwrap_or(0) as f64
        + 1.0;
    let bins = config.histogram_bins;
    let bin_edges: Vec<f64> = (0..=bins).map(|b| top * b as f64 / bins as f64).collect();
    Ok(RelevanceReport {
        sigma,
        top_t: config.top_t,
        opt: arm(opt_counts, &bin_edges)?,
        ts: arm(ts_counts, &bin_edges)?,
        bin_edges,
        users,
    })
}

/// Synthetic `users x items` scores whose per-item maxima differ: item `i`
/// has ceiling `c_i ~ U(0.05, 1)` and `S(u, i) = c_i * U(0, 1)`.
pub fn synthetic_scores(users: usize, items: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(seed);
    let ceilings: Vec<f64> = (0..items).map(|_| rng.random_range(0.05..1.0)).collect();
    (0..users)
        .map(|_| ceilings.iter().map(|c| c * rng.random::<f64>()).collect())
        .collect()
}

/// Rankings served to each arm, for callers that want the raw lists.
pub fn arm_rankings(
    scores: &[Vec<f64>],
    sigma: &[f64],
    users: &[usize],
    seed: u64,
) -> Result<(Vec<Ranking>, Vec<Ranking>)> {
    let mut opt = Vec::with_capacity(users.len());
    let mut ts = Vec::with_capacity(users.len());
    for (i, &u) in users.iter().enumerate() {
        opt.push(opt_ranking(&MeritVector::new(scores[u].clone())?));
        let model = GaussianRelevanceModel::new(scores[u].clone(), sigma.to_vec())?;
        ts.push(ts_sample_with(
            &model,
            &mut seed::rng_for(seed, i as u64 + 1),
        ));
    }
    Ok((opt, ts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_gamma_makes_arms_identical() {
        let scores = synthetic_scores(50, 30, 5);
        let config = RelevanceConfig {
            gamma: f64::INFINITY,
            users_per_arm: 40,
            ..Default::default()
        };
        let r = relevance_experiment(&scores, &config).unwrap();
        assert!(r.sigma.iter().all(|&s| s == 0.0));
        assert_eq!(r.opt, r.ts);
    }

    #[test]
    fn uncertainty_spreads_exposure() {
        let scores = synthetic_scores(200, 100, 9);
        let r = relevance_experiment(&scores, &RelevanceConfig::default()).unwrap();
        assert!(r.ts.gini < r.opt.gini);
        assert!(r.ts.zero_exposure <= r.opt.zero_exposure);
        assert_eq!(r.opt.counts.iter().sum::<u64>(), 200 * 5);
        assert_eq!(r.ts.histogram.iter().sum::<u64>(), 100);
    }

    #[test]
    fn rejects_out_of_range_scores() {
        let config = RelevanceConfig {
            users_per_arm: 1,
            top_t: 1,
            ..Default::default()
        };
        assert!(relevance_experiment(&[vec![0.5, 1.5]], &config).is_err());
        assert!(relevance_experiment(&[vec![0.5, 0.2]], &config).is_ok());
    }

    #[test]
    fn same_seed_same_report() {
        let scores = synthetic_scores(30, 20, 2);
        let config = RelevanceConfig {
            users_per_arm: 30,
            seed: 4,
            ..Default::default()
        };
        assert_eq!(
            relevance_experiment(&scores, &config).unwrap(),
            relevance_experiment(&scores, &config).unwrap()
        );
    }
}
