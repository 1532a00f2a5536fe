//! Posterior merit distributions.
//!
//! Every model draws joint merit vectors and reports exact expected merits.
//! Only [`EmpiricalMeritDistribution`] exposes its support, which is what the
//! exact top-k computation needs; the parametric models are handled by
//! Monte-Carlo estimation.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// One merit value per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeritVector(Vec<f64>);

impl MeritVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDistribution("merit vector is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "merit value {v} is not finite"
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn agent_count(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for MeritVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A posterior over joint merit vectors.
pub trait MeritModel: Sync {
    fn agent_count(&self) -> usize;

    /// Writes one joint draw into `out` (length `agent_count()`).
    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]);

    fn expected_merits(&self) -> MeritVector;
}

/// One draw from `model`, reproducible from `seed`.
pub fn sample_merits<M: MeritModel + ?Sized>(model: &M, seed: u64) -> MeritVector {
    let mut rng = seed::rng(seed);
    let mut out = vec![0.0; model.agent_count()];
    model.sample_into(&mut rng, &mut out);
    MeritVector(out)
}

pub fn expected_merits<M: MeritModel + ?Sized>(model: &M) -> MeritVector {
    model.expected_merits()
}

/// A finitely supported distribution over merit vectors. Atoms may share
/// merit values across agents; ties are broken uniformly at random downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeritDistribution {
    atoms: Vec<(MeritVector, f64)>,
    cumulative: Vec<f64>,
}

impl EmpiricalMeritDistribution {
    pub fn new(atoms: Vec<(MeritVector, f64)>) -> Result<Self> {
        let Some(first) = atoms.first() else {
            return Err(Error::InvalidDistribution("empty support".into()));
        };
        let n = first.0.agent_count();
        let mut total = 0.0;
        let mut cumulative = Vec::with_capacity(atoms.len());
        for (v, p) in &atoms {
            if v.agent_count() != n {
                return Err(Error::DimensionMismatch {
                    context: "empirical support vector",
                    expected: n,
                    found: v.agent_count(),
                });
            }
            if !(*p > 0.0) || !p.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "atom probability {p} is not positive"
                )));
            }
            total += p;
            cumulative.push(total);
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "atom probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { atoms, cumulative })
    }

    pub fn point_mass(merits: Vec<f64>) -> Result<Self> {
        Self::new(vec![(MeritVector::new(merits)?, 1.0)])
    }

    /// Product of independent per-agent discrete marginals, each given as
    /// `(merit, probability)` pairs. The support is enumerated explicitly, so
    /// keep the product small.
    pub fn independent_product(marginals: &[Vec<(f64, f64)>]) -> Result<Self> {
        if marginals.is_empty() || marginals.iter().any(Vec::is_empty) {
            return Err(Error::InvalidDistribution("empty marginal".into()));
        }
        let mut atoms: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
        for marginal in marginals {
            let mut next = Vec::with_capacity(atoms.len() * marginal.len());
            for (prefix, p) in &atoms {
                for &(v, q) in marginal {
                    let mut values = prefix.clone();
                    values.push(v);
                    next.push((values, p * q));
                }
            }
            atoms = next;
        }
        let atoms = atoms
            .into_iter()
            .map(|(v, p)| Ok((MeritVector::new(v)?, p)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[(MeritVector, f64)] {
        &self.atoms
    }

    /// Applies `f` to every merit value of every atom.
    pub fn map_merits(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|(v, p)| {
                Ok((
                    MeritVector::new(v.values().iter().map(|&x| f(x)).collect())?,
                    *p,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms)
    }
}

impl MeritModel for EmpiricalMeritDistribution {
    fn agent_count(&self) -> usize {
        self.atoms[0].0.agent_count()
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let total = *self.cumulative.last().unwrap();
        let u: f64 = rng.random::<f64>() * total;
        let idx = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.atoms.len() - 1);
        out.copy_from_slice(self.atoms[idx].0.values());
    }

    fn expected_merits(&self) -> MeritVector {
        let mut mean = vec![0.0; self.agent_count()];
        for (v, p) in &self.atoms {
            for (m, x) in mean.iter_mut().zip(v.values()) {
                *m += p * x;
            }
        }
        MeritVector(mean)
    }
}

/// Independent Dirichlet posteriors over rating-level probabilities, one per
/// agent. An agent's merit is the mean rating under its sampled parameter.
#[derive(Debug, Clone)]
pub struct DirichletMultinomialModel {
    alphas: Vec<Vec<f64>>,
    gammas: Vec<Vec<Gamma<f64>>>,
}

impl DirichletMultinomialModel {
    /// Builds the model from posterior parameters, one vector per agent over
    /// rating levels `1..=R`.
    pub fn new(alphas: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = alphas.first() else {
            return Err(Error::InvalidDistribution("no agents".into()));
        };
        let levels = first.len();
        if levels < 2 {
            return Err(Error::InvalidDistribution(format!(
                "need at least 2 rating levels, got {levels}"
            )));
        }
        let mut gammas = Vec::with_capacity(alphas.len());
        for a in &alphas {
            if a.len() != levels {
                return Err(Error::DimensionMismatch {
                    context: "dirichlet parameter vector",
                    expected: levels,
                    found: a.len(),
                });
            }
            let row = a
                .iter()
                .map(|&x| {
                    if !(x > 0.0) || !x.is_finite() {
                        return Err(Error::param(
                            "alpha",
                            x,
                            "dirichlet parameters must be positive",
                        ));
                    }
                    Ok(Gamma::new(x, 1.0).expect("validated shape"))
                })
                .collect::<Result<Vec<_>>>()?;
            gammas.push(row);
        }
        Ok(Self { alphas, gammas })
    }

    /// Conjugate update `alpha' = prior + counts` for every agent.
    pub fn from_counts(prior: &[f64], counts: &[Vec<u64>]) -> Result<Self> {
        let alphas = counts
            .iter()
            .map(|c| dirichlet_posterior(prior, c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphas)
    }

    /// Further conjugate update of an existing posterior.
    pub fn updated(&self, counts: &[Vec<u64>]) -> Result<Self> {
        if counts.len() != self.alphas.len() {
            return Err(Error::DimensionMismatch {
                context: "count table",
                expected: self.alphas.len(),
                found: counts.len(),
            });
        }
        let alphas = self
            .alphas
            .iter()
            .zip(counts)
            .map(|(a, c)| dirichlet_posterior(a, c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphas)
    }

    pub fn alphas(&self) -> &[Vec<f64>] {
        &self.alphas
    }

    pub fn levels(&self) -> usize {
        self.alphas[0].len()
    }

    /// Posterior mean rating of one agent: `sum_r r * alpha'_r / sum alpha'`.
    pub fn expected_merit(&self, agent: usize) -> f64 {
        dirichlet_mean_rating(&self.alphas[agent])
    }
}

/// Componentwise `alpha + counts`.
pub fn dirichlet_posterior(prior: &[f64], counts: &[u64]) -> Result<Vec<f64>> {
    if prior.len() != counts.len() {
        return Err(Error::DimensionMismatch {
            context: "dirichlet counts",
            expected: prior.len(),
            found: counts.len(),
        });
    }
    Ok(prior
        .iter()
        .zip(counts)
        .map(|(a, &c)| a + c as f64)
        .collect())
}

/// Prior `alpha_r = s * p_r` from marginal rating frequencies `p`.
pub fn scaled_prior(scale: f64, marginals: &[f64]) -> Result<Vec<f64>> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::param("s", scale, "prior scale must be positive"));
    }
    marginals
        .iter()
        .map(|&p| {
            if !(p > 0.0) {
                Err(Error::param(
                    "p_r",
                    p,
                    "marginal rating frequency must be positive",
                ))
            } else {
                Ok(scale * p)
            }
        })
        .collect()
}

pub fn dirichlet_mean_rating(alpha: &[f64]) -> f64 {
    let total: f64 = alpha.iter().sum();
    alpha
        .iter()
        .enumerate()
        .map(|(r, a)| (r + 1) as f64 * a)
        .sum::<f64>()
        / total
}

impl MeritModel for DirichletMultinomialModel {
    fn agent_count(&self) -> usize {
        self.alphas.len()
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (agent, (slot, gammas)) in out.iter_mut().zip(&self.gammas).enumerate() {
            let mut total = 0.0;
            let mut weighted = 0.0;
            for (r, g) in gammas.iter().enumerate() {
                let x = g.sample(rng);
                total += x;
                weighted += (r + 1) as f64 * x;
            }
            *slot = if total > 0.0 {
                weighted / total
            } else {
                // every gamma draw underflowed; only reachable with tiny shapes
                self.expected_merit(agent)
            };
        }
    }

    fn expected_merits(&self) -> MeritVector {
        MeritVector(
            (0..self.alphas.len())
                .map(|i| self.expected_merit(i))
                .collect(),
        )
    }
}

/// Independent normal relevance per agent. Draws are not truncated.
#[derive(Debug, Clone)]
pub struct GaussianRelevanceModel {
    means: Vec<f64>,
    stddevs: Vec<f64>,
}

impl GaussianRelevanceModel {
    pub fn new(means: Vec<f64>, stddevs: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::InvalidDistribution("no agents".into()));
        }
        if means.len() != stddevs.len() {
            return Err(Error::DimensionMismatch {
                context: "gaussian stddevs",
                expected: means.len(),
                found: stddevs.len(),
            });
        }
        if let Some(&m) = means.iter().find(|m| !m.is_finite()) {
            return Err(Error::param("mean", m, "means must be finite"));
        }
        if let Some(&s) = stddevs.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(Error::param(
                "sigma",
                s,
                "standard deviations must be finite and >= 0",
            ));
        }
        Ok(Self { means, stddevs })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stddevs(&self) -> &[f64] {
        &self.stddevs
    }
}

impl MeritModel for GaussianRelevanceModel {
    fn agent_count(&self) -> usize {
        self.means.len()
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for ((slot, &mu), &sigma) in out.iter_mut().zip(&self.means).zip(&self.stddevs) {
            *slot = if sigma == 0.0 {
                mu
            } else {
                Normal::new(mu, sigma).expect("validated sigma").sample(rng)
            };
        }
    }

    fn expected_merits(&self) -> MeritVector {
        MeritVector(self.means.clone())
    }
}

/// Per-item standard deviation so that `max_u S(u,i) + gamma * sigma_i = 1 + eps`.
///
/// `scores` is indexed `[user][item]`. `gamma = +inf` yields all-zero sigmas.
pub fn gaussian_sigma_calibration(scores: &[Vec<f64>], gamma: f64, eps: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0) {
        return Err(Error::param("gamma", gamma, "must be positive"));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::param("epsilon", eps, "must be positive"));
    }
    let Some(first) = scores.first() else {
        return Err(Error::Dataset("score matrix has no users".into()));
    };
    let items = first.len();
    let mut max_score = vec![f64::NEG_INFINITY; items];
    for row in scores {
        if row.len() != items {
            return Err(Error::DimensionMismatch {
                context: "score matrix row",
                expected: items,
                found: row.len(),
            });
        }
        for (m, &s) in max_score.iter_mut().zip(row) {
            if !s.is_finite() {
                return Err(Error::param("score", s, "scores must be finite"));
            }
            *m = m.max(s);
        }
    }
    Ok(max_score
        .into_iter()
        .map(|m| ((1.0 + eps - m) / gamma).max(0.0))
        .collect())
}

/// Serializable description of a merit model, as read from model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Empirical { atoms: Vec<AtomSpec> },
    Dirichlet { alphas: Vec<Vec<f64>> },
    Gaussian { means: Vec<f64>, stddevs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub merits: Vec<f64>,
    pub prob: f64,
}

impl ModelSpec {
    pub fn build(self) -> Result<AnyModel> {
        Ok(match self {
            ModelSpec::Empirical { atoms } => AnyModel::Empirical(EmpiricalMeritDistribution::new(
                atoms
                    .into_iter()
                    .map(|a| Ok((MeritVector::new(a.merits)?, a.prob)))
                    .collect::<Result<Vec<_>>>()?,
            )?),
            ModelSpec::Dirichlet { alphas } => {
                AnyModel::Dirichlet(DirichletMultinomialModel::new(alphas)?)
            }
            ModelSpec::Gaussian { means, stddevs } => {
                AnyModel::Gaussian(GaussianRelevanceModel::new(means, stddevs)?)
            }
        })
    }
}

impl From<&EmpiricalMeritDistribution> for ModelSpec {
    fn from(d: &EmpiricalMeritDistribution) -> Self {
        ModelSpec::Empirical {
            atoms: d
                .atoms()
                .iter()
                .map(|(v, p)| AtomSpec {
                    merits: v.values().to_vec(),
                    prob: *p,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum AnyModel {
    Empirical(EmpiricalMeritDistribution),
    Dirichlet(DirichletMultinomialModel),
    Gaussian(GaussianRelevanceModel),
}

impl AnyModel {
    pub fn as_empirical(&self) -> Option<&EmpiricalMeritDistribution> {
        match self {
            AnyModel::Empirical(d) => Some(d),
            _ => None,
        }
    }
}

impl MeritModel for AnyModel {
    fn agent_count(&self) -> usize {
        match self {
            AnyModel::Empirical(m) => m.agent_count(),
            AnyModel::Dirichlet(m) => m.agent_count(),
            AnyModel::Gaussian(m) => m.agent_count(),
        }
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            AnyModel::Empirical(m) => m.sample_into(rng, out),
            AnyModel::Dirichlet(m) => m.sample_into(rng, out),
            AnyModel::Gaussian(m) => m.sample_into(rng, out),
        }
    }

    fn expected_merits(&self) -> MeritVector {
        match self {
            AnyModel::Empirical(m) => m.expected_merits(),
            AnyModel::Dirichlet(m) => m.expected_merits(),
            AnyModel::Gaussian(m) => m.expected_merits(),
        }
    }
}
