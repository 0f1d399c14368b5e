use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Scale;
use crate::convexity::{certify, Verdict};
use crate::error::{Error, Result};
use crate::pcm::{PCMatrix, ACCEPTABLE_INCONSISTENCY};
use crate::solvers::{solve, solve_lsm, Method, SolveOptions, SolveResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub scale: Scale,
    /// Matrix order.
    pub n: usize,
    pub trials: usize,
    /// Each upper entry is multiplied by `exp(e)`, `e ~ U(-delta, delta)`.
    pub perturb_delta: f64,
    /// Snap perturbed entries to the nearest scale value or reciprocal.
    pub snap: bool,
    pub seed: u64,
    /// Least-squares starts per trial.
    pub starts: usize,
}

pub const MAX_MONTE_CARLO_N: usize = 8;

impl MonteCarloConfig {
    pub fn new(scale: Scale, n: usize, trials: usize, seed: u64) -> Self {
        Self {
            scale,
            n,
            trials,
            perturb_delta: 0.5,
            snap: true,
            seed,
            starts: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if !(2..=MAX_MONTE_CARLO_N).contains(&self.n) {
            return Err(Error::InvalidConfig(format!(
                "matrix order must be between 2 and {MAX_MONTE_CARLO_N}, got {}",
                self.n
            )));
        }
        if !(self.perturb_delta.is_finite() && self.perturb_delta >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "perturbation half-width must be non-negative, got {}",
                self.perturb_delta
            )));
        }
        if self.starts == 0 {
            return Err(Error::InvalidConfig("starts must be at least 1".into()));
        }
        Ok(())
    }
}

/// One row of the per-trial CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub inconsistency: f64,
    pub acceptable: bool,
    pub certified: bool,
    pub max_entry: f64,
    pub lsm_objective: f64,
    pub lsm_converged: bool,
    pub clusters: usize,
    pub unique: bool,
    /// Largest sum-one weight difference between any two methods.
    pub weight_disagreement: f64,
}

/// Column order of [`MonteCarloReport::to_csv`].
pub const CSV_COLUMNS: [&str; 10] = [
    "trial",
    "inconsistency",
    "acceptable",
    "certified",
    "max_entry",
    "lsm_objective",
    "lsm_converged",
    "clusters",
    "unique",
    "weight_disagreement",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloAggregate {
    pub trials: usize,
    pub mean_inconsistency: f64,
    pub max_inconsistency: f64,
    pub fraction_acceptable: f64,
    pub fraction_certified: f64,
    pub fraction_unique: f64,
    pub mean_lsm_objective: f64,
    pub max_weight_disagreement: f64,
}

impl MonteCarloAggregate {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let count = records.len().max(1) as f64;
        let frac = |pred: fn(&TrialRecord) -> bool| {
            records.iter().filter(|r| pred(r)).count() as f64 / count
        };
        Self {
            trials: records.len(),
            mean_inconsistency: records.iter().map(|r| r.inconsistency).sum::<f64>() / count,
            max_inconsistency: records.iter().map(|r| r.inconsistency).fold(0.0, f64::max),
            fraction_acceptable: frac(|r| r.acceptable),
            fraction_certified: frac(|r| r.certified),
            fraction_unique: frac(|r| r.unique),
            mean_lsm_objective: records.iter().map(|r| r.lsm_objective).sum::<f64>() / count,
            max_weight_disagreement: records
                .iter()
                .map(|r| r.weight_disagreement)
                .fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub config: MonteCarloConfig,
    pub records: Vec<TrialRecord>,
    pub aggregate: MonteCarloAggregate,
}

impl MonteCarloReport {
    /// Per-trial CSV with the columns of [`CSV_COLUMNS`].
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r)
                .map_err(|e| Error::Serialization(e.to_string()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// JSON block with the configuration and the aggregates.
    pub fn aggregate_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Block<'a> {
            config: &'a MonteCarloConfig,
            aggregate: &'a MonteCarloAggregate,
        }
        serde_json::to_string_pretty(&Block {
            config: &self.config,
            aggregate: &self.aggregate,
        })
        .map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Random consistent matrix over the scale's span, perturbed and optionally
/// snapped. Trial `k` uses ChaCha stream `k` of the seed.
pub(crate) fn trial_matrix(cfg: &MonteCarloConfig, trial: usize) -> PCMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial as u64);
    let span = cfg.scale.top().ln();
    let t: Vec<f64> = (0..cfg.n)
        .map(|_| {
            if span > 0.0 {
                rng.random_range(-span..=span)
            } else {
                0.0
            }
        })
        .collect();
    let mut upper = Vec::with_capacity(cfg.n * (cfg.n - 1) / 2);
    for i in 0..cfg.n {
        for j in (i + 1)..cfg.n {
            let eps = if cfg.perturb_delta > 0.0 {
                rng.random_range(-cfg.perturb_delta..=cfg.perturb_delta)
            } else {
                0.0
            };
            let mut a = (t[i] - t[j] + eps).exp();
            if cfg.snap {
                a = cfg.scale.snap(a);
            }
            upper.push(a);
        }
    }
    PCMatrix::new(cfg.n, upper, None).expect("exp of finite values is positive")
}

fn run_trial(cfg: &MonteCarloConfig, trial: usize) -> Result<TrialRecord> {
    let a = trial_matrix(cfg, trial);
    let incons = a.inconsistency();
    let cert = certify(&a);
    let opts = SolveOptions::default()
        .with_starts(cfg.starts)
        .with_seed(cfg.seed.wrapping_add(trial as u64));
    let lsm = solve_lsm(&a, &opts)?;

    let mut results: Vec<SolveResult> = vec![lsm.clone()];
    for m in [Method::Wlsm, Method::Llsm, Method::Evm] {
        // a method that fails on this matrix simply does not vote
        if let Ok(r) = solve(&a, m, &opts) {
            results.push(r);
        }
    }
    let mut disagreement: f64 = 0.0;
    for (k, x) in results.iter().enumerate() {
        for y in &results[k + 1..] {
            disagreement = disagreement.max(x.weights.max_abs_diff(&y.weights));
        }
    }
    Ok(TrialRecord {
        trial,
        inconsistency: incons.global_value,
        acceptable: incons.global_value <= ACCEPTABLE_INCONSISTENCY,
        certified: cert.verdict == Verdict::UniqueGuaranteed,
        max_entry: a.max_entry(),
        lsm_objective: lsm.objective,
        lsm_converged: lsm.converged,
        clusters: lsm.minima_found.len(),
        unique: lsm.unique,
        weight_disagreement: disagreement,
    })
}

/// Runs every trial (in parallel) and aggregates. Records come back in
/// trial order, so the report is identical for any thread count.
pub fn run_monte_carlo(cfg: &MonteCarloConfig) -> Result<MonteCarloReport> {
    cfg.validate()?;
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| run_trial(cfg, k))
        .collect::<Result<_>>()?;
    let aggregate = MonteCarloAggregate::from_records(&records);
    Ok(MonteCarloReport {
        config: cfg.clone(),
        records,
        aggregate,
    })
}
