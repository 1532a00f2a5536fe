//! Approximately fair ranking under uncertain merit.
//!
//! A ranking policy is phi-fair when every agent appears in the top `k`
//! positions with at least `phi` times its posterior probability of truly
//! belonging there. The pipeline is:
//!
//! 1. describe the posterior over merits ([`merit`]),
//! 2. compute top-k membership probabilities exactly or by Monte Carlo
//!    ([`topk`]),
//! 3. solve the utility-maximizing phi-fair LP over marginal rank matrices
//!    and decompose the optimum into a lottery over rankings ([`lp`]),
//! 4. audit any policy's marginals and exposure ([`audit`]).
//!
//! [`experiments`] runs tradeoff curves on ratings data and exposure studies
//! on relevance scores. Agents and positions are 0-based everywhere in the
//! API.

// `!(x > 0.0)` rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod lp;
pub mod matrix;
pub mod merit;
pub mod policy;
pub mod seed;
pub mod topk;
pub mod utility;

pub use audit::{
    exposure_counts, fairness_level, gini, is_phi_fair, BindingConstraint, FairnessReport,
};
pub use error::{Error, Result};
pub use lp::{
    build_lp, bvn_decompose, lp_policy, solve_lp, FairLpInstance, FairLpSolution, LpPolicy,
    SolverConfig,
};
pub use matrix::SquareMatrix;
pub use merit::{
    expected_merits, gaussian_sigma_calibration, sample_merits, AnyModel,
    DirichletMultinomialModel, EmpiricalMeritDistribution, GaussianRelevanceModel, MeritModel,
    MeritVector, ModelSpec,
};
pub use policy::{
    marginals_of_distribution, mixing_marginals, mixing_sample, opt_ranking, ts_marginals,
    ts_sample, MarginalRankMatrix, Ranking, RankingDistribution,
};
pub use topk::{dkw_sample_size, exact_topk, monte_carlo_topk, robustify, TopKMatrix};
pub use utility::{ndcg, policy_utility, ranking_utility, PositionWeights, WeightKind};
