use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::merit::MeritVector;
use crate::policy::{MarginalRankMatrix, Ranking};

/// Nonincreasing, nonnegative position weights `w[k]` for positions `k = 0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PositionWeights(Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `1 / log2(1 + k)` for 1-based `k`.
    Dcg,
    /// `1 / k`.
    Reciprocal,
    /// `1 / K` on the first `K` positions, zero after.
    PrecisionAt(usize),
    Explicit(Vec<f64>),
}

impl FromStr for WeightKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dcg" => Ok(WeightKind::Dcg),
            "reciprocal" => Ok(WeightKind::Reciprocal),
            _ => {
                if let Some(k) = s.strip_prefix("precision:") {
                    k.parse()
                        .map(WeightKind::PrecisionAt)
                        .map_err(|e| format!("bad precision cutoff `{k}`: {e}"))
                } else {
                    s.split(',')
                        .map(|v| v.trim().parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map(WeightKind::Explicit)
                        .map_err(|_| {
                            format!("unknown weights `{s}` (dcg, reciprocal, precision:K or a comma list)")
                        })
                }
            }
        }
    }
}

impl PositionWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidWeights("no positions".into()));
        }
        for (k, pair) in w.windows(2).enumerate() {
            if pair[1] > pair[0] {
                return Err(Error::InvalidWeights(format!(
                    "w[{}] = {} exceeds w[{k}] = {}",
                    k + 1,
                    pair[1],
                    pair[0]
                )));
            }
        }
        if let Some(v) = w.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidWeights(format!(
                "weight {v} is negative or not finite"
            )));
        }
        Ok(Self(w))
    }

    pub fn make(kind: &WeightKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidWeights("no positions".into()));
        }
        let w = match kind {
            WeightKind::Dcg => (1..=n).map(|k| 1.0 / ((1 + k) as f64).log2()).collect(),
            WeightKind::Reciprocal => (1..=n).map(|k| 1.0 / k as f64).collect(),
            WeightKind::PrecisionAt(cutoff) => {
                if *cutoff == 0 || *cutoff > n {
                    return Err(Error::InvalidWeights(format!(
                        "precision cutoff {cutoff} outside 1..={n}"
                    )));
                }
                (1..=n)
                    .map(|k| {
                        if k <= *cutoff {
                            1.0 / *cutoff as f64
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            WeightKind::Explicit(w) => {
                if w.len() != n {
                    return Err(Error::DimensionMismatch {
                        context: "explicit weights",
                        expected: n,
                        found: w.len(),
                    });
                }
                w.clone()
            }
        };
        Self::new(w)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for PositionWeights {
    type Error = Error;

    fn try_from(w: Vec<f64>) -> Result<Self> {
        Self::new(w)
    }
}

impl From<PositionWeights> for Vec<f64> {
    fn from(w: PositionWeights) -> Self {
        w.0
    }
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

/// `sum_k w[k] * v[ranking[k]]`.
pub fn ranking_utility(
    ranking: &Ranking,
    merits: &MeritVector,
    weights: &PositionWeights,
) -> Result<f64> {
    check_len("merits vs ranking", ranking.len(), merits.agent_count())?;
    check_len("weights vs ranking", ranking.len(), weights.len())?;
    Ok(ranking
        .agents()
        .iter()
        .zip(weights.values())
        .map(|(&x, w)| w * merits[x])
        .sum())
}

/// Expected utility of a ranking policy through its marginals:
/// `sum_x sum_k P[x][k] E[v_x] w[k]`.
pub fn policy_utility(
    marginals: &MarginalRankMatrix,
    expected_merits: &MeritVector,
    weights: &PositionWeights,
) -> Result<f64> {
    let n = marginals.n();
    check_len(
        "expected merits vs marginals",
        n,
        expected_merits.agent_count(),
    )?;
    check_len("weights vs marginals", n, weights.len())?;
    let w = weights.values();
    Ok((0..n)
        .map(|x| {
            let row: f64 = marginals.row(x).iter().zip(w).map(|(p, w)| p * w).sum();
            row * expected_merits[x]
        })
        .sum())
}

pub fn ndcg(utility: f64, ideal_utility: f64) -> Result<f64> {
    if !(ideal_utility > 0.0) {
        return Err(Error::param(
            "ideal_utility",
            ideal_utility,
            "must be positive",
        ));
    }
    Ok(utility / ideal_utility)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mv(v: &[f64]) -> MeritVector {
        MeritVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn weight_families() {
        let dcg = PositionWeights::make(&WeightKind::Dcg, 3).unwrap();
        assert_abs_diff_eq!(dcg.values()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dcg.values()[1], 0.630_929_753_571_457_4, epsilon = 1e-15);
        assert_abs_diff_eq!(dcg.values()[2], 0.5, epsilon = 1e-15);
        let rr = PositionWeights::make(&WeightKind::Reciprocal, 3).unwrap();
        assert_eq!(rr.values(), &[1.0, 0.5, 1.0 / 3.0]);
        let p2 = PositionWeights::make(&WeightKind::PrecisionAt(2), 3).unwrap();
        assert_eq!(p2.values(), &[0.5, 0.5, 0.0]);
        assert!(PositionWeights::make(&WeightKind::PrecisionAt(4), 3).is_err());
        assert!(PositionWeights::make(&WeightKind::Explicit(vec![1.0, 2.0]), 2).is_err());
        assert!(PositionWeights::new(vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn parse_weight_kinds() {
        assert_eq!("dcg".parse::<WeightKind>().unwrap(), WeightKind::Dcg);
        assert_eq!(
            "precision:5".parse::<WeightKind>().unwrap(),
            WeightKind::PrecisionAt(5)
        );
        assert_eq!(
            "1,1,0".parse::<WeightKind>().unwrap(),
            WeightKind::Explicit(vec![1.0, 1.0, 0.0])
        );
        assert!("bogus".parse::<WeightKind>().is_err());
    }

    #[test]
    fn ranking_utilities() {
        let w = PositionWeights::new(vec![1.0, 1.0, 0.0]).unwrap();
        let v = mv(&[1.0, 0.0, 0.0]);
        let abc = Ranking::new(vec![0, 1, 2]).unwrap();
        let bac = Ranking::new(vec![1, 0, 2]).unwrap();
        assert_eq!(ranking_utility(&abc, &v, &w).unwrap(), 1.0);
        assert_eq!(ranking_utility(&bac, &v, &w).unwrap(), 1.0);

        let dcg = PositionWeights::make(&WeightKind::Dcg, 3).unwrap();
        let u = ranking_utility(&abc, &mv(&[3.0, 2.0, 1.0]), &dcg).unwrap();
        assert_abs_diff_eq!(u, 4.761_859_507_142_915, epsilon = 1e-12);
        assert!(ranking_utility(&abc, &mv(&[1.0, 2.0]), &w).is_err());
    }

    #[test]
    fn ndcg_values() {
        assert_eq!(ndcg(2.0, 2.0).unwrap(), 1.0);
        assert_eq!(ndcg(0.0, 2.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            ndcg(35.0 / 24.0, 1.5).unwrap(),
            35.0 / 36.0,
            epsilon = 1e-15
        );
        assert!(ndcg(1.0, 0.0).is_err());
    }

    #[test]
    fn permutation_matrix_utility_equals_ranking_utility() {
        let dcg = PositionWeights::make(&WeightKind::Dcg, 4).unwrap();
        let e = mv(&[0.3, 2.0, 1.1, 0.7]);
        let r = Ranking::new(vec![2, 0, 3, 1]).unwrap();
        let m = MarginalRankMatrix::from_ranking(&r);
        assert_abs_diff_eq!(
            policy_utility(&m, &e, &dcg).unwrap(),
            ranking_utility(&r, &e, &dcg).unwrap(),
            epsilon = 1e-12
        );
    }
}
