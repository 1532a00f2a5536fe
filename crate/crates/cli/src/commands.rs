use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use fairrank::experiments::{
    default_synthetic_movielens, genre_experiment, instance_tradeoff, load_movielens_dir, phi_grid,
    relevance_experiment, render, synthetic_scores, GenreExperimentConfig, RelevanceConfig,
    TradeoffMetadata, TradeoffTable,
};
use fairrank::fixtures::example2;
use fairrank::seed;
use fairrank::{
    dkw_sample_size, exact_topk, fairness_level, lp_policy, marginals_of_distribution,
    monte_carlo_topk, robustify, AnyModel, MarginalRankMatrix, MeritModel, MeritVector, ModelSpec,
    PositionWeights, RankingDistribution, SolverConfig, TopKMatrix, WeightKind,
};
use serde_json::json;
use thiserror::Error;

use crate::args::{
    AuditArgs, Command, ExposureArgs, InstanceArgs, MovielensArgs, SampleArgs, SolveArgs, TopkArgs,
    TradeoffArgs,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Data(#[from] fairrank::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io { .. } => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => write_file(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn check_phi(phi: f64) -> Result<()> {
    if (0.0..=1.0).contains(&phi) {
        Ok(())
    } else {
        Err(usage(format!("--phi must lie in [0, 1], got {phi}")))
    }
}

fn check_positive(flag: &str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(usage(format!("--{flag} must be positive, got {v}")))
    }
}

struct Instance {
    q: TopKMatrix,
    expected: MeritVector,
    default_weights: Option<PositionWeights>,
}

fn parse_list(flag: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| usage(format!("--{flag}: {e}")))
}

fn load_instance(args: &InstanceArgs) -> Result<Instance> {
    if args.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    if let Some(eps) = args.epsilon {
        check_positive("epsilon", eps)?;
    }
    if let Some(kappa) = args.kappa {
        check_positive("kappa", kappa)?;
        if args.epsilon.is_none() {
            return Err(usage("--kappa requires --epsilon"));
        }
    }
    let (model, default_weights): (Option<AnyModel>, _) = if args.example2 {
        let (d, w) = example2();
        (Some(AnyModel::Empirical(d)), Some(w))
    } else if let Some(path) = &args.model {
        let spec: ModelSpec = serde_json::from_str(&read(path)?)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
        (Some(spec.build()?), None)
    } else if args.q.is_some() {
        (None, None)
    } else {
        return Err(usage("no instance given: use --example2, --model or --q"));
    };

    let q = match (&args.q, &model) {
        (Some(path), _) => TopKMatrix::from_csv(&read(path)?)?,
        (None, Some(m)) if args.exact || args.example2 => {
            let d = m
                .as_empirical()
                .ok_or_else(|| usage("--exact needs an empirical model"))?;
            exact_topk(d)?
        }
        (None, Some(m)) => {
            let samples = match (args.kappa, args.epsilon) {
                (Some(kappa), Some(eps)) => dkw_sample_size(m.agent_count(), kappa, eps)?,
                _ => args.samples,
            };
            monte_carlo_topk(m, samples, args.seed)?
        }
        (None, None) => unreachable!("checked above"),
    };
    let q = match args.epsilon {
        Some(eps) => robustify(&q, eps)?,
        None => q,
    };
    let expected = match (&args.merits, &model) {
        (Some(list), _) => MeritVector::new(parse_list("merits", list)?)?,
        (None, Some(m)) => m.expected_merits(),
        (None, None) => return Err(usage("--q without a model needs --merits")),
    };
    Ok(Instance {
        q,
        expected,
        default_weights,
    })
}

fn weights_for(instance: &Instance, kind: &Option<WeightKind>) -> Result<PositionWeights> {
    let n = instance.q.n();
    Ok(match (kind, &instance.default_weights) {
        (Some(kind), _) => PositionWeights::make(kind, n)?,
        (None, Some(w)) => w.clone(),
        (None, None) => PositionWeights::make(&WeightKind::Dcg, n)?,
    })
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Topk(a) => topk(a),
        Command::Solve(a) => solve(a),
        Command::Audit(a) => audit(a),
        Command::Sample(a) => sample(a),
        Command::Tradeoff(a) => tradeoff(a),
        Command::Movielens(a) => movielens(a),
        Command::Exposure(a) => exposure(a),
    }
}

fn topk(a: TopkArgs) -> Result<()> {
    let instance = load_instance(&a.instance)?;
    emit(a.output.as_deref(), &instance.q.to_csv())
}

fn solve(a: SolveArgs) -> Result<()> {
    check_phi(a.phi)?;
    let instance = load_instance(&a.instance)?;
    let weights = weights_for(&instance, &a.weights)?;
    let policy = lp_policy(
        &instance.q,
        &instance.expected,
        &weights,
        a.phi,
        &SolverConfig::default(),
    )?;
    let report = fairness_level(&policy.solution.marginals, &instance.q)?;
    match a.out {
        Some(dir) => {
            fs::create_dir_all(&dir).map_err(|source| CliError::Io {
                path: dir.clone(),
                source,
            })?;
            write_file(
                &dir.join("marginals.csv"),
                &policy.solution.marginals.to_csv(),
            )?;
            write_file(
                &dir.join("lottery.json"),
                &with_newline(policy.lottery.to_json()),
            )?;
            write_file(&dir.join("report.json"), &with_newline(report.to_json()))?;
            emit(
                None,
                &format!(
                    "objective {}\nphi_star {}\nrankings {}\n",
                    policy.solution.objective,
                    report.phi_star,
                    policy.lottery.len()
                ),
            )
        }
        None => {
            let doc = json!({
                "phi": a.phi,
                "objective": policy.solution.objective,
                "marginals": policy.solution.marginals.matrix().to_rows(),
                "lottery": policy.lottery,
                "report": report,
            });
            emit(
                None,
                &with_newline(serde_json::to_string_pretty(&doc).expect("serializable")),
            )
        }
    }
}

fn audit(a: AuditArgs) -> Result<()> {
    let q = match &a.q {
        Some(path) => TopKMatrix::from_csv(&read(path)?)?,
        None => exact_topk(&example2().0)?,
    };
    let marginals = match (&a.marginals, &a.lottery) {
        (Some(path), _) => MarginalRankMatrix::from_csv(&read(path)?)?,
        (None, Some(path)) => {
            marginals_of_distribution(&RankingDistribution::from_json(&read(path)?)?)?
        }
        (None, None) => return Err(usage("--marginals or --lottery is required")),
    };
    let report = fairness_level(&marginals, &q)?;
    emit(a.output.as_deref(), &with_newline(report.to_json()))
}

fn sample(a: SampleArgs) -> Result<()> {
    let lottery = RankingDistribution::from_json(&read(&a.lottery)?)?;
    let mut rng = seed::rng(a.seed);
    let mut out = String::new();
    for _ in 0..a.count {
        let r = lottery.sample(&mut rng);
        let line: Vec<String> = r.agents().iter().map(usize::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    emit(None, &out)
}

fn tradeoff(a: TradeoffArgs) -> Result<()> {
    if a.steps == 0 {
        return Err(usage("--steps must be positive"));
    }
    let instance = load_instance(&a.instance)?;
    let weights = weights_for(&instance, &a.weights)?;
    let rows = instance_tradeoff(
        &instance.q,
        &instance.expected,
        &weights,
        &phi_grid(a.steps),
        &SolverConfig::default(),
    )?;
    let table = TradeoffTable {
        rows,
        metadata: TradeoffMetadata {
            seed: a.instance.seed,
            genre: None,
            n: instance.q.n(),
            subsample: None,
            runs: 1,
            mc_samples: None,
        },
    };
    table.validate()?;
    emit(a.output.as_deref(), &with_newline(render(&table, a.format)))
}

fn movielens(a: MovielensArgs) -> Result<()> {
    if a.steps == 0 || a.runs == 0 || a.samples == 0 || a.n_items == 0 {
        return Err(usage(
            "--steps, --runs, --samples and --n-items must be positive",
        ));
    }
    if !(a.subsample > 0.0 && a.subsample <= 1.0) {
        return Err(usage(format!(
            "--subsample must lie in (0, 1], got {}",
            a.subsample
        )));
    }
    check_positive("prior-scale", a.prior_scale)?;
    let dataset = match &a.data_dir {
        Some(dir) => load_movielens_dir(dir)?,
        None => default_synthetic_movielens(a.seed)?.dataset,
    };
    let config = GenreExperimentConfig {
        n_items: a.n_items,
        subsample: a.subsample,
        prior_scale: a.prior_scale,
        phi_grid: phi_grid(a.steps),
        mc_samples: a.samples,
        runs: a.runs,
        seed: a.seed,
        weights: a.weights,
        solver: SolverConfig::default(),
    };
    let table = genre_experiment(&dataset, &a.genre, &config)?;
    emit(a.output.as_deref(), &with_newline(render(&table, a.format)))
}

fn parse_scores(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = read(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            line.split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| {
                    CliError::Data(fairrank::Error::Parse {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: e.to_string(),
                    })
                })
        })
        .collect()
}

fn exposure(a: ExposureArgs) -> Result<()> {
    check_positive("gamma", a.gamma)?;
    check_positive("epsilon", a.epsilon)?;
    if a.top_t == 0 {
        return Err(usage("--top-t must be positive"));
    }
    let scores = match &a.scores {
        Some(path) => parse_scores(path)?,
        None => synthetic_scores(
            a.synthetic_users,
            a.synthetic_items,
            seed::derive_seed(a.seed, 0),
        ),
    };
    let config = RelevanceConfig {
        gamma: a.gamma,
        epsilon: a.epsilon,
        users_per_arm: a.users_per_arm,
        top_t: a.top_t,
        seed: a.seed,
        ..Default::default()
    };
    let report = relevance_experiment(&scores, &config)?;
    emit(a.output.as_deref(), &with_newline(report.to_json()))
}
