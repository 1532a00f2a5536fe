//! Fairness/utility tradeoff curves: LP policy versus OPT/TS mixing.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::fairness_level;
use crate::error::{Error, Result};
use crate::lp::{build_lp, solve_lp, SolverConfig};
use crate::merit::{scaled_prior, DirichletMultinomialModel, MeritModel, MeritVector};
use crate::policy::{mixing_marginals, opt_ranking};
use crate::seed;
use crate::topk::{monte_carlo_topk, TopKMatrix};
use crate::utility::{ndcg, policy_utility, ranking_utility, PositionWeights, WeightKind};

use super::movielens::RatingsDataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub phi: f64,
    pub lp_utility: f64,
    pub mixing_utility: f64,
    pub lp_ndcg: f64,
    pub mixing_ndcg: f64,
    /// Audited fairness level of the LP policy against the q it was solved for.
    pub lp_phi_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffMetadata {
    pub seed: u64,
    pub genre: Option<String>,
    pub n: usize,
    pub subsample: Option<f64>,
    pub runs: usize,
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffTable {
    pub rows: Vec<TradeoffRow>,
    pub metadata: TradeoffMetadata,
}

impl TradeoffTable {
    /// Checks the grid is ascending and NDCG values lie in `[0, 1 + 1e-9]`.
    pub fn validate(&self) -> Result<()> {
        for pair in self.rows.windows(2) {
            if !(pair[0].phi < pair[1].phi) {
                return Err(Error::Dataset(format!(
                    "phi grid not ascending at {} -> {}",
                    pair[0].phi, pair[1].phi
                )));
            }
        }
        for row in &self.rows {
            for v in [row.lp_ndcg, row.mixing_ndcg] {
                if !(-1e-9..=1.0 + 1e-9).contains(&v) {
                    return Err(Error::Dataset(format!(
                        "ndcg {v} out of range at phi = {}",
                        row.phi
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn row_at(&self, phi: f64) -> Option<&TradeoffRow> {
        self.rows.iter().find(|r| (r.phi - phi).abs() < 1e-12)
    }
}

/// `0, 1/steps, ..., 1`.
pub fn phi_grid(steps: usize) -> Vec<f64> {
    let steps = steps.max(1);
    (0..=steps).map(|i| i as f64 / steps as f64).collect()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    for &phi in grid {
        if !(0.0..=1.0).contains(&phi) {
            return Err(Error::param("phi", phi, "must lie in [0, 1]"));
        }
    }
    if grid.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(Error::Dataset("phi grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Evaluates the LP and mixing policies of one instance across `grid`.
pub fn instance_tradeoff(
    q: &TopKMatrix,
    expected: &MeritVector,
    weights: &PositionWeights,
    grid: &[f64],
    solver: &SolverConfig,
) -> Result<Vec<TradeoffRow>> {
    check_grid(grid)?;
    let ideal = ranking_utility(&opt_ranking(expected), expected, weights)?;
    grid.iter()
        .map(|&phi| {
            let sol = solve_lp(&build_lp(q, expected, weights, phi)?, solver)?;
            let mix = policy_utility(&mixing_marginals(q, expected, phi)?, expected, weights)?;
            let audit = fairness_level(&sol.marginals, q)?;
            Ok(TradeoffRow {
                phi,
                lp_utility: sol.objective,
                mixing_utility: mix,
                lp_ndcg: ndcg(sol.objective, ideal)?,
                mixing_ndcg: ndcg(mix, ideal)?,
                lp_phi_star: audit.phi_star,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenreExperimentConfig {
    pub n_items: usize,
    pub subsample: f64,
    /// Prior strength `s` in `alpha_r = s * p_r`.
    pub prior_scale: f64,
    pub phi_grid: Vec<f64>,
    pub mc_samples: usize,
    pub runs: usize,
    pub seed: u64,
    pub weights: WeightKind,
    pub solver: SolverConfig,
}

impl Default for GenreExperimentConfig {
    fn default() -> Self {
        Self {
            n_items: 40,
            subsample: 0.10,
            prior_scale: 1.0,
            phi_grid: phi_grid(10),
            mc_samples: 50_000,
            runs: 20,
            seed: 0,
            weights: WeightKind::Dcg,
            solver: SolverConfig::default(),
        }
    }
}

/// The posterior instance built for one run of the genre experiment.
#[derive(Debug, Clone)]
pub struct GenreRun {
    pub items: Vec<u32>,
    pub model: DirichletMultinomialModel,
    pub q: TopKMatrix,
}

/// Draws the item subset and rating subsample of run `run`, then fits the
/// Dirichlet posteriors and estimates q.
pub fn genre_run(
    dataset: &RatingsDataset,
    genre: usize,
    config: &GenreExperimentConfig,
    run: usize,
) -> Result<GenreRun> {
    let candidates = dataset.rated_items_in_genre(genre);
    if candidates.len() < config.n_items {
        return Err(Error::InsufficientItems {
            genre: dataset.genre_names[genre].clone(),
            available: candidates.len(),
            required: config.n_items,
        });
    }
    let run_seed = seed::derive_seed(config.seed, run as u64);
    let mut rng = seed::rng_for(run_seed, 0);
    let items: Vec<u32> = rand::seq::index::sample(&mut rng, candidates.len(), config.n_items)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    let slot: std::collections::HashMap<u32, usize> =
        items.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut counts = vec![vec![0u64; dataset.levels]; items.len()];
    for r in &dataset.ratings {
        // one draw per rating keeps the subsample independent of the item subset
        let keep = rng.random::<f64>() < config.subsample;
        if keep {
            if let Some(&i) = slot.get(&r.item) {
                counts[i][(r.rating - 1) as usize] += 1;
            }
        }
    }
    let prior = scaled_prior(config.prior_scale, &dataset.rating_marginals())?;
    let model = DirichletMultinomialModel::from_counts(&prior, &counts)?;
    let q = monte_carlo_topk(&model, config.mc_samples, seed::derive_seed(run_seed, 1))?;
    Ok(GenreRun { items, model, q })
}

/// Pairwise summation, so the average does not depend on evaluation order.
fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

pub fn genre_experiment(
    dataset: &RatingsDataset,
    genre: &str,
    config: &GenreExperimentConfig,
) -> Result<TradeoffTable> {
    let g = dataset
        .genre_index(genre)
        .ok_or_else(|| Error::Dataset(format!("unknown genre `{genre}`")))?;
    if config.runs == 0 {
        return Err(Error::param("runs", 0.0, "must be positive"));
    }
    if !(config.subsample > 0.0 && config.subsample <= 1.0) {
        return Err(Error::param(
            "subsample",
            config.subsample,
            "must lie in (0, 1]",
        ));
    }
    check_grid(&config.phi_grid)?;
    let weights = PositionWeights::make(&config.weights, config.n_items)?;
    let per_run: Vec<Vec<TradeoffRow>> = (0..config.runs)
        .into_par_iter()
        .map(|run| {
            let r = genre_run(dataset, g, config, run)?;
            let expected = r.model.expected_merits();
            instance_tradeoff(&r.q, &expected, &weights, &config.phi_grid, &config.solver)
        })
        .collect::<Result<_>>()?;
    let runs = per_run.len() as f64;
    let mean = |i: usize, f: fn(&TradeoffRow) -> f64| {
        let v: Vec<f64> = per_run.iter().map(|rows| f(&rows[i])).collect();
        pairwise_sum(&v) / runs
    };
    let rows = config
        .phi_grid
        .iter()
        .enumerate()
        .map(|(i, &phi)| TradeoffRow {
            phi,
            lp_utility: mean(i, |r| r.lp_utility),
            mixing_utility: mean(i, |r| r.mixing_utility),
            lp_ndcg: mean(i, |r| r.lp_ndcg),
            mixing_ndcg: mean(i, |r| r.mixing_ndcg),
            lp_phi_star: mean(i, |r| r.lp_phi_star),
        })
        .collect();
    Ok(TradeoffTable {
        rows,
        metadata: TradeoffMetadata {
            seed: config.seed,
            genre: Some(dataset.genre_names[g].clone()),
            n: config.n_items,
            subsample: Some(config.subsample),
            runs: config.runs,
            mc_samples: Some(config.mc_samples),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::movielens::synthetic_movielens;
    use crate::fixtures::example2;
    use crate::topk::exact_topk;

    #[test]
    fn example2_curve_endpoints() {
        let (d, w) = example2();
        let q = exact_topk(&d).unwrap();
        let e = d.expected_merits();
        let rows = instance_tradeoff(&q, &e, &w, &phi_grid(20), &SolverConfig::default()).unwrap();
        assert!((rows[0].lp_utility - 1.5).abs() < 1e-9);
        assert!((rows[20].lp_utility - 35.0 / 24.0).abs() < 1e-9);
        assert!((rows[0].lp_ndcg - 1.0).abs() < 1e-12);
        for r in &rows {
            assert!(r.lp_utility >= r.mixing_utility - 1e-9);
            assert!(r.lp_phi_star >= r.phi - 1e-9);
        }
    }

    #[test]
    fn grid_must_ascend() {
        let (d, w) = example2();
        let q = exact_topk(&d).unwrap();
        let e = d.expected_merits();
        assert!(instance_tradeoff(&q, &e, &w, &[0.5, 0.2], &SolverConfig::default()).is_err());
        assert!(instance_tradeoff(&q, &e, &w, &[1.5], &SolverConfig::default()).is_err());
    }

    #[test]
    fn small_genre_experiment() {
        let data = synthetic_movielens(12, 60, 4.0, 3).unwrap().dataset;
        let config = GenreExperimentConfig {
            n_items: 8,
            mc_samples: 4000,
            runs: 3,
            phi_grid: phi_grid(4),
            seed: 11,
            ..Default::default()
        };
        let t = genre_experiment(&data, "Drama", &config).unwrap();
        t.validate().unwrap();
        assert_eq!(t.rows.len(), 5);
        assert!((t.rows[0].lp_ndcg - 1.0).abs() < 1e-12);
        let last = t.rows.last().unwrap();
        assert!((last.lp_ndcg - last.mixing_ndcg).abs() < 1e-6);
        for r in &t.rows {
            assert!(r.lp_ndcg >= r.mixing_ndcg - 1e-6);
        }
        assert_eq!(t, genre_experiment(&data, "drama", &config).unwrap());
    }

    #[test]
    fn insufficient_items_is_an_error() {
        let data = synthetic_movielens(5, 10, 4.0, 3).unwrap().dataset;
        let config = GenreExperimentConfig {
            n_items: 8,
            ..Default::default()
        };
        assert!(matches!(
            genre_experiment(&data, "Action", &config),
            Err(Error::InsufficientItems { .. })
        ));
        assert!(genre_experiment(&data, "Polka", &config).is_err());
    }
}
