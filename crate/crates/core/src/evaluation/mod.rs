//! Fixed-target evaluation of ES structures: batches of seeded runs, ERT and
//! FCE aggregation, the ERT-first ordering, and comparison uncertainty.

mod cache;
mod uncertainty;

use std::cmp::Ordering;

use rayon::prelude::*;
use thiserror::Error;

pub use cache::{CacheError, CacheKey, CachedEvaluator, ResultsCache};
pub use uncertainty::{
    pool_distances, subsample_uncertainty, welch_uncertainty, SubsampleRow, UncertaintyError,
    PERCENTILE_STEP,
};

use crate::configuration::ConfigurationVector;
use crate::es::{self, EsError, Objective, RunOptions, RunRecord};

/// Default number of runs per structure.
pub const DEFAULT_RUNS: usize = 32;

/// Seed of run `index` of a batch started from `seed`.
pub fn run_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

/// Expected running time: total evaluations over all runs divided by the
/// number of successful runs, `None` without successes.
pub fn compute_ert(runs: &[RunRecord]) -> Option<f64> {
    let successes = runs.iter().filter(|r| r.succeeded()).count();
    if successes == 0 {
        return None;
    }
    let total: u64 = runs.iter().map(|r| r.evaluations_used).sum();
    Some(total as f64 / successes as f64)
}

/// Mean and population standard deviation.
pub(crate) fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregated fitness of one structure on one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessSummary {
    pub n: usize,
    pub ert: Option<f64>,
    /// Mean best-so-far error.
    pub fce: f64,
    /// Population-style deviation of the best errors.
    pub std_error: f64,
    /// Target the runs were measured against.
    pub target: f64,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("a fitness summary needs at least one run")]
pub struct EmptySummary;

impl FitnessSummary {
    pub fn from_runs(runs: Vec<RunRecord>, target: f64) -> Result<Self, EmptySummary> {
        if runs.is_empty() {
            return Err(EmptySummary);
        }
        let errors: Vec<f64> = runs.iter().map(|r| r.best_error).collect();
        let (fce, std_error) = mean_and_std(&errors);
        Ok(FitnessSummary {
            n: runs.len(),
            ert: compute_ert(&runs),
            fce,
            std_error,
            target,
            runs,
        })
    }

    /// Summary without run records, e.g. for synthetic comparisons.
    pub fn synthetic(ert: Option<f64>, fce: f64) -> Self {
        FitnessSummary {
            n: 0,
            ert,
            fce,
            std_error: 0.0,
            target: es::DEFAULT_TARGET,
            runs: Vec::new(),
        }
    }

    /// Worst possible fitness, used for failed evaluations.
    pub fn worst() -> Self {
        Self::synthetic(None, f64::INFINITY)
    }
}

/// ERT-first total preorder: `Less` means `a` is better.
pub fn fitness_cmp(a: &FitnessSummary, b: &FitnessSummary) -> Ordering {
    match (a.ert, b.ert) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.fce.total_cmp(&b.fce),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Ert,
    Fce,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonResult {
    pub winner: Winner,
    pub basis: Basis,
    /// Relative distance of the worse value to the better one.
    pub d: f64,
    /// Probability that both strategies are indistinguishable.
    pub uncertainty: f64,
}

fn relative_distance(better: f64, worse: f64) -> f64 {
    if better == worse {
        0.0
    } else if better > 0.0 {
        (worse - better) / better
    } else {
        f64::INFINITY
    }
}

fn relative_spread(values: impl Iterator<Item = f64>) -> Option<(f64, usize)> {
    let values: Vec<f64> = values.collect();
    let (mean, std) = mean_and_std(&values);
    (values.len() >= 2 && mean > 0.0 && std > 0.0 && std.is_finite())
        .then(|| (std / mean, values.len()))
}

fn uncertainty_of(d: f64, spread: Option<(f64, usize)>) -> f64 {
    if d == 0.0 {
        return 1.0;
    }
    match spread {
        Some((s_rel, n)) if d.is_finite() => welch_uncertainty(d, s_rel, n).unwrap_or(0.0),
        _ => 0.0,
    }
}

/// Compares two summaries over the same problem.
///
/// Both with ERT: lower ERT wins. Exactly one with ERT: it wins and the
/// distance is taken between the other's FCE and the target. Neither: lower
/// FCE wins.
pub fn compare(a: &FitnessSummary, b: &FitnessSummary) -> ComparisonResult {
    let winner = match fitness_cmp(a, b) {
        Ordering::Less => Winner::A,
        Ordering::Greater => Winner::B,
        Ordering::Equal => Winner::Tie,
    };
    let (better, worse) = if winner == Winner::B { (b, a) } else { (a, b) };
    let fce_spread = |s: &FitnessSummary| relative_spread(s.runs.iter().map(|r| r.best_error));
    let (basis, d, spread) = match (better.ert, worse.ert) {
        (Some(x), Some(y)) => (
            Basis::Ert,
            relative_distance(x, y),
            relative_spread(better.runs.iter().map(|r| r.evaluations_used as f64)),
        ),
        (Some(_), None) => (
            Basis::Ert,
            relative_distance(worse.target.min(worse.fce), worse.fce.max(worse.target)),
            fce_spread(worse),
        ),
        _ => (
            Basis::Fce,
            relative_distance(better.fce, worse.fce),
            fce_spread(better),
        ),
    };
    ComparisonResult {
        winner,
        basis,
        d,
        uncertainty: uncertainty_of(d, spread),
    }
}

/// Runs `cfg` `n` times on `problem` with seeds `options.seed + i`.
///
/// Runs execute on the current rayon pool; results are ordered by run index.
pub fn run_batch<O: Objective + ?Sized>(
    cfg: &ConfigurationVector,
    problem: &O,
    n: usize,
    options: &RunOptions,
) -> Result<FitnessSummary, EsError> {
    let runs = (0..n.max(1))
        .into_par_iter()
        .map(|i| {
            let opts = RunOptions {
                seed: run_seed(options.seed, i),
                ..*options
            };
            es::run(cfg, problem, &opts)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FitnessSummary::from_runs(runs, options.target).expect("at least one run"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(evals: u64, hit: Option<u64>, err: f64) -> RunRecord {
        RunRecord {
            config: ConfigurationVector::DEFAULT,
            function_id: "f".into(),
            dimension: 2,
            seed: 0,
            evaluations_used: evals,
            best_error: err,
            hit_index: hit,
            trajectory: Vec::new(),
        }
    }

    #[test]
    fn ert_examples() {
        let all: Vec<_> = (0..4).map(|_| record(100, Some(100), 0.0)).collect();
        assert_eq!(compute_ert(&all), Some(100.0));
        let mixed = [record(500, Some(500), 0.0), record(5000, None, 1.0)];
        assert_eq!(compute_ert(&mixed), Some(5500.0));
        assert_eq!(compute_ert(&[record(10, None, 1.0)]), None);
    }

    #[test]
    fn single_run_summary() {
        let s = FitnessSummary::from_runs(vec![record(10, None, 0.25)], 1e-8).unwrap();
        assert_eq!(s.fce, 0.25);
        assert_eq!(s.std_error, 0.0);
        assert_eq!(s.ert, None);
        assert!(FitnessSummary::from_runs(Vec::new(), 1e-8).is_err());
    }

    #[test]
    fn compare_examples() {
        let a = FitnessSummary::synthetic(Some(100.0), 1.0);
        let b = FitnessSummary::synthetic(Some(200.0), 0.0);
        let r = compare(&a, &b);
        assert_eq!((r.winner, r.basis), (Winner::A, Basis::Ert));
        assert_eq!(r.d, 1.0);

        let b = FitnessSummary::synthetic(None, 0.001);
        let a = FitnessSummary::synthetic(Some(1e5), 10.0);
        assert_eq!(compare(&a, &b).winner, Winner::A);
        assert_eq!(compare(&b, &a).winner, Winner::B);

        let a = FitnessSummary::synthetic(None, 3.0);
        let b = FitnessSummary::synthetic(None, 3.0);
        let r = compare(&a, &b);
        assert_eq!(
            (r.winner, r.basis, r.uncertainty),
            (Winner::Tie, Basis::Fce, 1.0)
        );
    }

    #[test]
    fn uncertainty_in_unit_interval() {
        let runs = |errs: &[f64]| {
            errs.iter()
                .map(|&e| record(100, None, e))
                .collect::<Vec<_>>()
        };
        let a = FitnessSummary::from_runs(runs(&[1.0, 2.0, 3.0, 2.0]), 1e-8).unwrap();
        let b = FitnessSummary::from_runs(runs(&[2.0, 3.0, 4.0, 3.0]), 1e-8).unwrap();
        let r = compare(&a, &b);
        assert_eq!(r.winner, Winner::A);
        assert!(r.uncertainty > 0.0 && r.uncertainty < 1.0);
    }
}
