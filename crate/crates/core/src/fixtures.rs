//! Built-in instances used by golden tests and the CLI.

use crate::merit::EmpiricalMeritDistribution;
use crate::utility::PositionWeights;

/// Three agents: `a` has merit 1 for sure, `b` and `c` are independent fair
/// coins. Weights `(1, 1, 0)` make every ranking with `a` in the top two
/// optimal.
pub fn example2() -> (EmpiricalMeritDistribution, PositionWeights) {
    let dist = EmpiricalMeritDistribution::independent_product(&[
        vec![(1.0, 1.0)],
        vec![(0.0, 0.5), (1.0, 0.5)],
        vec![(0.0, 0.5), (1.0, 0.5)],
    ])
    .expect("valid fixture");
    let weights = PositionWeights::new(vec![1.0, 1.0, 0.0]).expect("valid fixture");
    (dist, weights)
}

/// Exact top-k probabilities of [`example2`], scaled by 24.
pub const EXAMPLE2_TOPK_X24: [[f64; 3]; 3] =
    [[14.0, 22.0, 24.0], [5.0, 13.0, 24.0], [5.0, 13.0, 24.0]];
