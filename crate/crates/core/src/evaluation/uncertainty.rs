use rand::seq::index;
use rand::Rng;
use statrs::function::beta::beta_reg;
use thiserror::Error;

use super::mean_and_std;

/// Spacing of the distance percentiles reported by the subsampling study.
pub const PERCENTILE_STEP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UncertaintyError {
    #[error("at least 2 runs per strategy are needed, got {0}")]
    TooFewRuns(usize),
    #[error("relative distance must be a nonnegative number, got {0}")]
    InvalidDistance(f64),
    #[error("relative standard error must be positive and finite, got {0}")]
    InvalidSpread(f64),
    #[error("at least 2 strategy pools are needed, got {0}")]
    TooFewPools(usize),
    #[error("pool {pool} has {size} runs but subsamples of {needed} were requested")]
    PoolTooSmall {
        pool: usize,
        size: usize,
        needed: usize,
    },
    #[error("pool {0} has a nonpositive mean or zero spread")]
    DegeneratePool(usize),
    #[error("at least one fold is needed")]
    NoFolds,
}

/// Two-sided Welch tail probability that strategies at relative distance `d`
/// are indistinguishable, with relative standard error `s_rel` for the better
/// one and `(1 + d) * s_rel` for the worse, each estimated from `n` runs.
pub fn welch_uncertainty(d: f64, s_rel: f64, n: usize) -> Result<f64, UncertaintyError> {
    if n < 2 {
        return Err(UncertaintyError::TooFewRuns(n));
    }
    if !(d >= 0.0) || d.is_infinite() {
        return Err(UncertaintyError::InvalidDistance(d));
    }
    if !(s_rel > 0.0) || s_rel.is_infinite() {
        return Err(UncertaintyError::InvalidSpread(s_rel));
    }
    if d == 0.0 {
        return Ok(1.0);
    }
    let s_b = (1.0 + d) * s_rel;
    let s_e = ((s_rel * s_rel + s_b * s_b) / n as f64).sqrt();
    let t = d / s_e;
    let nu = (2 * n - 2) as f64;
    // 2 (1 - cdf(t)) = I_{nu / (nu + t^2)}(nu / 2, 1 / 2)
    let p = beta_reg(nu / 2.0, 0.5, nu / (nu + t * t));
    Ok(p.clamp(f64::MIN_POSITIVE, 1.0))
}

/// Sorted relative distances between the means of every pair of pools.
pub fn pool_distances(means: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for (i, &a) in means.iter().enumerate() {
        for &b in &means[i + 1..] {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            out.push((hi - lo) / lo);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Nearest-rank percentile of sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// One cell of the uncertainty-vs-runs table.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleRow {
    pub percentile: f64,
    pub distance: f64,
    pub n: usize,
    /// Relative standard error averaged over folds and pools.
    pub mean_s_rel: f64,
    /// Variance of the per-fold relative standard error.
    pub fold_variance: f64,
    pub uncertainty: f64,
}

/// Simulates running every strategy only `n` times by drawing `folds`
/// subsamples without replacement from each pool, then evaluates the
/// comparison uncertainty at the 5%, 10%, ..., 100% distance percentiles.
pub fn subsample_uncertainty<R: Rng + ?Sized>(
    pools: &[Vec<f64>],
    folds: usize,
    n_grid: &[usize],
    rng: &mut R,
) -> Result<Vec<SubsampleRow>, UncertaintyError> {
    if pools.len() < 2 {
        return Err(UncertaintyError::TooFewPools(pools.len()));
    }
    if folds == 0 {
        return Err(UncertaintyError::NoFolds);
    }
    if let Some(&n) = n_grid.iter().find(|&&n| n < 2) {
        return Err(UncertaintyError::TooFewRuns(n));
    }
    let needed = n_grid.iter().copied().max().unwrap_or(0);
    let mut means = Vec::with_capacity(pools.len());
    for (i, pool) in pools.iter().enumerate() {
        if pool.len() < needed {
            return Err(UncertaintyError::PoolTooSmall {
                pool: i,
                size: pool.len(),
                needed,
            });
        }
        let (mean, std) = mean_and_std(pool);
        if !(mean > 0.0) || !(std > 0.0) || !mean.is_finite() {
            return Err(UncertaintyError::DegeneratePool(i));
        }
        means.push(mean);
    }
    let distances = pool_distances(&means);
    let steps = (1.0 / PERCENTILE_STEP).round() as usize;

    let mut rows = Vec::with_capacity(n_grid.len() * steps);
    for &n in n_grid {
        let mut per_fold = Vec::with_capacity(folds);
        for _ in 0..folds {
            let mut total = 0.0;
            for pool in pools {
                let mut picked = index::sample(rng, pool.len(), n).into_vec();
                picked.sort_unstable();
                let sample: Vec<f64> = picked.iter().map(|&k| pool[k]).collect();
                let (mean, std) = mean_and_std(&sample);
                total += if mean > 0.0 { std / mean } else { 0.0 };
            }
            per_fold.push(total / pools.len() as f64);
        }
        let (mean_s_rel, fold_std) = mean_and_std(&per_fold);
        for k in 1..=steps {
            let q = k as f64 * PERCENTILE_STEP;
            let distance = percentile(&distances, q);
            let uncertainty = if mean_s_rel > 0.0 {
                welch_uncertainty(distance, mean_s_rel, n)?
            } else if distance == 0.0 {
                1.0
            } else {
                f64::MIN_POSITIVE
            };
            rows.push(SubsampleRow {
                percentile: q,
                distance,
                n,
                mean_s_rel,
                fold_variance: fold_std * fold_std,
                uncertainty,
            });
        }
    }
    Ok(rows)
}
