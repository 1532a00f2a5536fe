//! The phi-fair utility-maximizing linear program and its execution as a
//! lottery over rankings.

mod bvn;
mod fair;
mod matching;
pub mod simplex;

pub use bvn::{bvn_decompose, DEFAULT_ZERO_TOL};
pub use fair::{
    build_lp, lp_policy, solve_lp, FairLpInstance, FairLpSolution, LpPolicy, SolverConfig,
};
pub use matching::perfect_matching;
