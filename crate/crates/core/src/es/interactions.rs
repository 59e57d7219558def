//! Population-size repairs that let every module combination run.

use crate::configuration::ConfigurationVector;

/// Population sizes after module interactions are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolved {
    pub lambda: usize,
    pub mu: usize,
    /// Offspring available for selection (`lambda - 2` under TPA).
    pub lambda_eff: usize,
    /// Minimum evaluations per generation before sequential selection may stop.
    pub seq_cutoff: usize,
}

/// Adjusts `(lambda, mu)` so that the active selection modules always have
/// enough candidates.
///
/// - pairwise selection needs `2 mu` candidates: `lambda` is raised to `2 mu`,
///   and when TPA's two reserved probes leave a pair short, `mu` drops to
///   `lambda_eff / 2`;
/// - sequential selection stops no earlier than `mu` evaluations, or `2 mu`
///   together with pairwise selection (bounded by `lambda_eff`).
pub fn resolve_interactions(cfg: &ConfigurationVector, lambda: usize, mu: usize) -> Resolved {
    let tpa_reserved = if cfg.tpa() { 2 } else { 0 };
    let mut mu = mu.max(1);
    let mut lambda = lambda.max(mu);

    if cfg.pairwise() {
        if lambda < 2 * mu {
            lambda = 2 * mu;
        }
        // TPA plus pairwise needs at least one full pair besides the probes
        lambda = lambda.max(tpa_reserved + 2);
        let lambda_eff = lambda - tpa_reserved;
        if lambda_eff < 2 * mu {
            mu = (lambda_eff / 2).max(1);
        }
    } else if cfg.tpa() {
        lambda = lambda.max(tpa_reserved + 1);
        mu = mu.min(lambda - tpa_reserved);
    }
    let lambda_eff = lambda - tpa_reserved;

    let seq_cutoff = if cfg.sequential() && cfg.pairwise() {
        (2 * mu).min(lambda_eff)
    } else {
        mu
    };

    Resolved {
        lambda,
        mu,
        lambda_eff,
        seq_cutoff,
    }
}
