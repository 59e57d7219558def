//! Parameter update after a completed generation: evolution paths,
//! covariance (with optional active update) and step size (CSA or TPA).

use nalgebra::{Cholesky, DMatrix, DVector};

use super::ops::Individual;
use super::params::{csa_factor, symmetrize, StrategyParams};

/// Probe length factor along the latest mean shift.
pub const TPA_ALPHA: f64 = 0.5;
/// Smoothing rate of the TPA success signal.
pub const TPA_SMOOTHING: f64 = 0.3;

/// `(x - mean) / sigma` for each individual.
pub fn scaled_steps(inds: &[Individual], mean: &DVector<f64>, sigma: f64) -> Vec<DVector<f64>> {
    inds.iter().map(|i| (&i.x - mean) / sigma).collect()
}

/// `sum_i w_i y_i y_i^T`.
pub fn weighted_outer_sum(weights: &[f64], ys: &[DVector<f64>]) -> DMatrix<f64> {
    let dim = ys.first().map_or(0, |y| y.len());
    let mut acc = DMatrix::zeros(dim, dim);
    for (w, y) in weights.iter().zip(ys) {
        acc += y * y.transpose() * *w;
    }
    acc
}

/// The `mu` worst evaluated offspring, worst first.
pub fn worst_offspring(offspring: &[Individual], mu: usize) -> Vec<Individual> {
    let mut sorted = offspring.to_vec();
    sorted.sort_by(|a, b| b.value().total_cmp(&a.value()));
    sorted.truncate(mu);
    sorted
}

/// Active-update subtraction `sum_i w_i y_worst_i y_worst_i^T`, with the
/// largest weight on the worst individual.
pub fn negative_term(
    params: &StrategyParams,
    offspring: &[Individual],
    old_mean: &DVector<f64>,
) -> DMatrix<f64> {
    let worst = worst_offspring(offspring, params.mu);
    weighted_outer_sum(
        &params.weights,
        &scaled_steps(&worst, old_mean, params.sigma),
    )
}

/// Positive rank-one plus rank-mu update of `params.c`, given the already
/// updated cumulation path.
pub fn positive_covariance(
    params: &StrategyParams,
    selected_ys: &[DVector<f64>],
    hsig: bool,
) -> DMatrix<f64> {
    let h = if hsig { 1.0 } else { 0.0 };
    let decay =
        1.0 - params.c_1 - params.c_mu + (1.0 - h) * params.c_1 * params.c_c * (2.0 - params.c_c);
    let rank_one = &params.p_c * params.p_c.transpose();
    let rank_mu = weighted_outer_sum(&params.weights, selected_ys);
    &params.c * decay + rank_one * params.c_1 + rank_mu * params.c_mu
}

/// Outcome of one [`adapt`] call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptReport {
    /// Active-update rate actually applied (0 when inactive or fully truncated).
    pub active_beta: f64,
    pub repaired: bool,
}

/// Which step-size rule and covariance variant to apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptOptions {
    pub active: bool,
    /// `Some(sign)` when TPA drives sigma: `+1` if the longer probe was better.
    pub tpa_sign: Option<f64>,
}

/// Applies one generation's update. `selected` are the ranked parents,
/// `offspring` all evaluated offspring (probes excluded), `new_mean` the
/// recombination result.
pub fn adapt(
    params: &mut StrategyParams,
    selected: &[Individual],
    offspring: &[Individual],
    new_mean: DVector<f64>,
    options: AdaptOptions,
) -> AdaptReport {
    let old_mean = params.mean.clone();
    let sigma = params.sigma;
    let n = params.dimension as f64;
    let y_w = (&new_mean - &old_mean) / sigma;

    let cs = params.c_sigma;
    params.p_sigma = &params.p_sigma * (1.0 - cs)
        + (&params.inv_sqrt_c * &y_w) * (cs * (2.0 - cs) * params.mu_eff).sqrt();
    let g = (params.generation + 1) as f64;
    let ps_norm = params.p_sigma.norm();
    let hsig =
        ps_norm / (1.0 - (1.0 - cs).powf(2.0 * g)).sqrt() / params.chi_n < 1.4 + 2.0 / (n + 1.0);
    let cc = params.c_c;
    let h = if hsig { 1.0 } else { 0.0 };
    params.p_c = &params.p_c * (1.0 - cc) + &y_w * (h * (cc * (2.0 - cc) * params.mu_eff).sqrt());

    let selected_ys = scaled_steps(selected, &old_mean, sigma);
    let mut c_new = positive_covariance(params, &selected_ys, hsig);
    let mut applied_beta = 0.0;
    if options.active {
        let negative = negative_term(params, offspring, &old_mean);
        let mut beta = params.active_beta;
        // shrink the rate until the result stays positive definite
        for _ in 0..30 {
            let mut candidate = &c_new - &negative * beta;
            symmetrize(&mut candidate);
            if Cholesky::new(candidate.clone()).is_some() {
                c_new = candidate;
                applied_beta = beta;
                break;
            }
            beta *= 0.5;
        }
    }
    symmetrize(&mut c_new);
    params.c = c_new;
    params.mean = new_mean;

    match options.tpa_sign {
        Some(sign) => {
            params.tpa_state = (1.0 - TPA_SMOOTHING) * params.tpa_state + TPA_SMOOTHING * sign;
            params.sigma *= (params.tpa_state / params.d_sigma).exp();
        }
        None => {
            params.sigma *= csa_factor(ps_norm, params.chi_n, cs, params.d_sigma);
        }
    }

    params.generation += 1;
    let mut repaired = false;
    if params.generation - params.last_eigen_generation >= params.eigen_interval {
        repaired = params.update_eigensystem();
    }
    AdaptReport {
        active_beta: applied_beta,
        repaired,
    }
}
