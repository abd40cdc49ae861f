//! Learning-curve experiments.
//!
//! For every noise exponent `α`, training size `n` and trial index, a trial
//! samples a training set, fits the OVO ranker and estimates its ranking
//! risks on a fresh test draw. Trials are independent and run in parallel;
//! each one derives its seeds from `(base_seed, α index, n index, trial)`
//! through [`rng::derive_seed`], so the rows do not depend on the worker
//! count or on scheduling. Rows are returned sorted by `(α, n, trial)`.

use std::io;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::LearnerSpec;
use crate::ovo::{estimate_ranking_risk, fit_ovo};
use crate::perm::TieBreakPolicy;
use crate::rng;
use crate::synth::{sample_dataset, spread_splits, PosteriorOracle};

/// `{10^i, 3·10^i : i = 1..4} ∪ {10^5}`.
pub fn default_n_list() -> Vec<usize> {
    let mut n = Vec::new();
    for i in 1..=4 {
        let p = 10usize.pow(i);
        n.push(p);
        n.push(3 * p);
    }
    n.push(100_000);
    n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub depth: usize,
    pub alpha_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub n_test: usize,
    pub learner: LearnerSpec,
    pub tie_break: TieBreakPolicy,
    pub base_seed: u64,
    /// Split point per level; `None` uses [`spread_splits`].
    pub splits: Option<Vec<f64>>,
    /// Record wall-clock fit time per trial. Off by default because timings
    /// make the output differ between runs.
    pub record_fit_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            depth: 2,
            alpha_list: vec![0.2, 0.8],
            n_list: default_n_list(),
            trials: 100,
            n_test: 1000,
            learner: LearnerSpec::Stump,
            tie_break: TieBreakPolicy::LowestLabelFirst,
            base_seed: 0,
            splits: None,
            record_fit_time: false,
        }
    }
}

fn config_error(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_list.is_empty() {
            return Err(config_error("alpha_list", "empty"));
        }
        if let Some(a) = self.alpha_list.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
            return Err(config_error("alpha_list", format!("{a} not in (0, 1]")));
        }
        if self.n_list.is_empty() {
            return Err(config_error("n_list", "empty"));
        }
        if self.n_list.contains(&0) {
            return Err(config_error("n_list", "training sizes must be positive"));
        }
        if self.trials == 0 {
            return Err(config_error("trials", "must be positive"));
        }
        if self.n_test == 0 {
            return Err(config_error("n_test", "must be positive"));
        }
        if let LearnerSpec::Linear { step_size, .. } = self.learner {
            if !(step_size > 0.0 && step_size.is_finite()) {
                return Err(config_error(
                    "learner",
                    format!("step_size {step_size} must be positive"),
                ));
            }
        }
        for &alpha in &self.alpha_list {
            self.oracle(alpha).map_err(|e| {
                config_error(
                    if self.splits.is_some() {
                        "splits"
                    } else {
                        "depth"
                    },
                    e.to_string(),
                )
            })?;
        }
        Ok(())
    }

    pub fn oracle(&self, alpha: f64) -> Result<PosteriorOracle> {
        let splits = self
            .splits
            .clone()
            .unwrap_or_else(|| spread_splits(self.depth));
        PosteriorOracle::with_splits(self.depth, alpha, splits)
    }

    pub fn row_count(&self) -> usize {
        self.alpha_list.len() * self.n_list.len() * self.trials
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub alpha: f64,
    pub n: usize,
    pub trial: usize,
    pub mismatch_rate: f64,
    pub mean_kendall: f64,
    pub cycle_rate: f64,
    /// Empty unless the config asks for timings.
    pub fit_seconds: Option<f64>,
}

/// Seed of one trial. Training and test draws use
/// `derive_seed(trial_seed, [0])` and `derive_seed(trial_seed, [1])`.
pub fn trial_seed(base_seed: u64, alpha_index: usize, n_index: usize, trial: usize) -> u64 {
    rng::derive_seed(
        base_seed,
        &[alpha_index as u64, n_index as u64, trial as u64],
    )
}

fn run_trial(
    cfg: &ExperimentConfig,
    oracle: &PosteriorOracle,
    (alpha_index, n_index, trial): (usize, usize, usize),
) -> Result<TrialRow> {
    let n = cfg.n_list[n_index];
    let seed = trial_seed(cfg.base_seed, alpha_index, n_index, trial);
    let train = sample_dataset(oracle, n, rng::derive_seed(seed, &[0]));
    let start = Instant::now();
    let ranker = fit_ovo(&train, cfg.learner, cfg.tie_break)?;
    let elapsed = start.elapsed().as_secs_f64();
    let report = estimate_ranking_risk(&ranker, oracle, cfg.n_test, rng::derive_seed(seed, &[1]))?;
    Ok(TrialRow {
        alpha: cfg.alpha_list[alpha_index],
        n,
        trial,
        mismatch_rate: report.mismatch_rate,
        mean_kendall: report.mean_kendall,
        cycle_rate: report.cycle_rate,
        fit_seconds: cfg.record_fit_time.then_some(elapsed),
    })
}

/// Runs every `(α, n, trial)` of `cfg` on `workers` threads (`None`: rayon's
/// default) and returns the rows sorted by `(α, n, trial)`.
pub fn run_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<TrialRow>> {
    cfg.validate()?;
    let oracles = cfg
        .alpha_list
        .iter()
        .map(|&a| cfg.oracle(a))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize, usize)> = (0..cfg.alpha_list.len())
        .flat_map(|a| {
            (0..cfg.n_list.len()).flat_map(move |n| (0..cfg.trials).map(move |t| (a, n, t)))
        })
        .collect();
    let run = || {
        jobs.par_iter()
            .map(|&job| run_trial(cfg, &oracles[job.0], job))
            .collect::<Result<Vec<_>>>()
    };
    let mut rows = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::param("workers", e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    rows.sort_by(|a, b| {
        a.alpha
            .total_cmp(&b.alpha)
            .then(a.n.cmp(&b.n))
            .then(a.trial.cmp(&b.trial))
    });
    Ok(rows)
}

/// CSV header: `alpha,n,trial,mismatch_rate,mean_kendall,cycle_rate,fit_seconds`.
pub fn write_rows_csv<W: io::Write>(rows: &[TrialRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record([
            "alpha",
            "n",
            "trial",
            "mismatch_rate",
            "mean_kendall",
            "cycle_rate",
            "fit_seconds",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows_csv<R: io::Read>(reader: R) -> Result<Vec<TrialRow>> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize()
        .collect::<std::result::Result<Vec<TrialRow>, _>>()?)
}

/// Five-number summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile by linear interpolation between order statistics at position
/// `p · (m − 1)` (the inclusive convention, same as numpy's default).
/// `sorted` must be non-empty and ascending.
pub fn quantile_inclusive(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("values", "no values to summarize"));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Ok(BoxStats {
            min: v[0],
            q1: quantile_inclusive(&v, 0.25),
            median: quantile_inclusive(&v, 0.5),
            q3: quantile_inclusive(&v, 0.75),
            max: v[v.len() - 1],
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Box statistics of every metric for one `(α, n)` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub alpha: f64,
    pub n: usize,
    pub trials: usize,
    pub mismatch_rate: BoxStats,
    pub mean_kendall: BoxStats,
    pub cycle_rate: BoxStats,
}

/// Groups rows by `(α, n)` in order of first appearance.
pub fn summarize(rows: &[TrialRow]) -> Result<Vec<GroupSummary>> {
    if rows.is_empty() {
        return Err(Error::param("rows", "no rows to summarize"));
    }
    let mut groups: Vec<((f64, usize), Vec<&TrialRow>)> = Vec::new();
    for row in rows {
        let key = (row.alpha, row.n);
        match groups
            .iter_mut()
            .find(|(k, _)| k.0.to_bits() == key.0.to_bits() && k.1 == key.1)
        {
            Some((_, members)) => members.push(row),
            None => groups.push((key, vec![row])),
        }
    }
    groups
        .into_iter()
        .map(|((alpha, n), members)| {
            let stats = |f: fn(&TrialRow) -> f64| {
                BoxStats::from_values(&members.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            Ok(GroupSummary {
                alpha,
                n,
                trials: members.len(),
                mismatch_rate: stats(|r| r.mismatch_rate)?,
                mean_kendall: stats(|r| r.mean_kendall)?,
                cycle_rate: stats(|r| r.cycle_rate)?,
            })
        })
        .collect()
}

/// One CSV line per `(α, n, metric)`:
/// `alpha,n,metric,trials,min,q1,median,q3,max`.
pub fn write_summary_csv<W: io::Write>(summary: &[GroupSummary], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "alpha", "n", "metric", "trials", "min", "q1", "median", "q3", "max",
    ])?;
    for g in summary {
        for (name, s) in [
            ("mismatch_rate", &g.mismatch_rate),
            ("mean_kendall", &g.mean_kendall),
            ("cycle_rate", &g.cycle_rate),
        ] {
            w.write_record([
                g.alpha.to_string(),
                g.n.to_string(),
                name.to_string(),
                g.trials.to_string(),
                s.min.to_string(),
                s.q1.to_string(),
                s.median.to_string(),
                s.q3.to_string(),
                s.max.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
