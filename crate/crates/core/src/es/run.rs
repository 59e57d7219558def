use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::adapt::{adapt, AdaptOptions, TPA_ALPHA};
use super::ops::{
    apply_threshold, evaluate_offspring, recombine, select, EvaluationFailure, Individual,
};
use super::params::{default_lambda, StrategyParams};
use super::restart::RestartState;
use super::{EsError, Objective, ObjectiveError, RunOptions, RunRecord, TerminationCriteria};
use crate::configuration::ConfigurationVector;
use crate::sampling::{Sampler, SamplerSpec};

/// Minimum raw-sample length for threshold convergence after `used` of
/// `local_budget` evaluations: `0.2 * diagonal * ((B - used) / B)^0.995`.
pub fn threshold_schedule(box_diagonal: f64, local_budget: u64, used: u64) -> f64 {
    if local_budget == 0 {
        return 0.0;
    }
    let remaining = local_budget.saturating_sub(used) as f64 / local_budget as f64;
    0.2 * box_diagonal * remaining.powf(0.995)
}

/// Why a local run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalStop {
    Condition,
    TolX,
    TolUpSigma,
    Stagnation,
    NoEffectAxis,
    NoEffectCoord,
}

/// Snapshot handed to observers after every completed generation.
pub struct GenerationInfo<'a> {
    /// Index of the local run (0 for the first).
    pub local_run: u32,
    pub params: &'a StrategyParams,
    /// Selected parents of this generation, best first.
    pub selected: &'a [Individual],
    pub evaluations: u64,
    pub best_error: f64,
}

enum Halt {
    Budget,
    Target,
    Failure(ObjectiveError),
}

impl std::fmt::Debug for Halt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Halt::Budget => f.write_str("budget exhausted"),
            Halt::Target => f.write_str("target reached"),
            Halt::Failure(e) => write!(f, "{e}"),
        }
    }
}

impl std::fmt::Display for Halt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

impl std::error::Error for Halt {}

/// Counts every objective call and tracks best-so-far values.
struct Tracker<'a, O: Objective + ?Sized> {
    objective: &'a O,
    budget: u64,
    target: f64,
    used: u64,
    best_value: f64,
    best_error: f64,
    hit_index: Option<u64>,
    trajectory: Vec<(u64, f64)>,
}

impl<'a, O: Objective + ?Sized> Tracker<'a, O> {
    fn evaluate(&mut self, x: &DVector<f64>) -> Result<f64, Halt> {
        if self.used >= self.budget {
            return Err(Halt::Budget);
        }
        let eval = self
            .objective
            .evaluate(x.as_slice())
            .map_err(Halt::Failure)?;
        self.used += 1;
        let value = if eval.value.is_finite() {
            eval.value
        } else {
            f64::INFINITY
        };
        let error = if eval.error.is_finite() {
            eval.error.max(0.0)
        } else {
            f64::INFINITY
        };
        if value < self.best_value {
            self.best_value = value;
        }
        if error < self.best_error {
            self.best_error = error;
            self.trajectory.push((self.used, error));
        }
        if error <= self.target && self.hit_index.is_none() {
            self.hit_index = Some(self.used);
            return Err(Halt::Target);
        }
        Ok(value)
    }
}

/// Runs one configured ES on `problem` until the budget is spent, the target
/// is reached, or a local restart criterion fires without a restart regime.
pub fn run<O: Objective + ?Sized>(
    cfg: &ConfigurationVector,
    problem: &O,
    options: &RunOptions,
) -> Result<RunRecord, EsError> {
    run_observed(cfg, problem, options, |_| {})
}

/// [`run`] with a callback after every completed generation.
pub fn run_observed<O, F>(
    cfg: &ConfigurationVector,
    problem: &O,
    options: &RunOptions,
    mut observer: F,
) -> Result<RunRecord, EsError>
where
    O: Objective + ?Sized,
    F: FnMut(&GenerationInfo<'_>),
{
    if options.budget == 0 {
        return Err(EsError::ZeroBudget);
    }
    let dim = problem.dimension();
    if dim == 0 {
        return Err(EsError::ZeroDimension);
    }
    let (lower, upper) = problem.bounds();
    let width = upper - lower;
    let box_diagonal = width * (dim as f64).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut sampler = Sampler::new(SamplerSpec {
        base: cfg.base_sampler(),
        mirrored: cfg.mirrored(),
        orthogonal: cfg.orthogonal(),
        dimension: dim,
        seed: rng.random(),
    })?;
    let mut tracker = Tracker {
        objective: problem,
        budget: options.budget,
        target: options.target,
        used: 0,
        best_value: f64::INFINITY,
        best_error: f64::INFINITY,
        hit_index: None,
        trajectory: Vec::new(),
    };
    let mut restarts = RestartState::new(cfg.restart(), default_lambda(dim), 0.2 * width);
    let mut plan = restarts.initial_plan();
    let mut local_run = 0u32;

    'runs: loop {
        let mean = DVector::from_iterator(dim, (0..dim).map(|_| rng.random_range(lower..=upper)));
        let mut params = StrategyParams::new(cfg, dim, plan.lambda, mean, plan.sigma0);
        let local_start = tracker.used;
        let local_budget = options.budget - local_start;
        let mut parents: Vec<Individual> = Vec::new();

        loop {
            if cfg.threshold() {
                params.threshold =
                    threshold_schedule(box_diagonal, local_budget, tracker.used - local_start);
            }
            let raw = sampler.next_batch(params.lambda_eff)?;
            let mut pop = Vec::with_capacity(raw.len());
            for z in raw {
                let z = thresholded(z, params.threshold, &mut rng);
                let x = params.candidate(&z);
                pop.push(Individual::new(z, x));
            }

            let f_best = tracker.best_value;
            match evaluate_offspring(
                &mut pop,
                |x| tracker.evaluate(x),
                cfg.sequential(),
                params.seq_cutoff,
                f_best,
            ) {
                Ok(_) => {}
                Err(EvaluationFailure { source, .. }) => match source {
                    Halt::Budget | Halt::Target => break 'runs,
                    Halt::Failure(source) => {
                        return Err(EsError::Objective {
                            evaluations: tracker.used,
                            source,
                        })
                    }
                },
            }

            let selected = select(&pop, &parents, params.mu, cfg.elitist(), cfg.pairwise())?;
            let new_mean = recombine(&selected, &params.weights);

            let tpa_sign = if cfg.tpa() {
                let shift = (&new_mean - &params.mean) * TPA_ALPHA;
                let longer = &new_mean + &shift;
                let shorter = &new_mean - &shift;
                let halt = |h: Halt, used: u64| match h {
                    Halt::Budget | Halt::Target => Ok(()),
                    Halt::Failure(source) => Err(EsError::Objective {
                        evaluations: used,
                        source,
                    }),
                };
                let f_long = match tracker.evaluate(&longer) {
                    Ok(f) => f,
                    Err(h) => {
                        halt(h, tracker.used)?;
                        break 'runs;
                    }
                };
                let f_short = match tracker.evaluate(&shorter) {
                    Ok(f) => f,
                    Err(h) => {
                        halt(h, tracker.used)?;
                        break 'runs;
                    }
                };
                Some(if f_long < f_short { 1.0 } else { -1.0 })
            } else {
                None
            };

            let generation_best = pop
                .iter()
                .map(Individual::value)
                .fold(f64::INFINITY, f64::min);
            adapt(
                &mut params,
                &selected,
                &pop,
                new_mean,
                AdaptOptions {
                    active: cfg.active_update(),
                    tpa_sign,
                },
            );
            restarts.stagnation_history.push(generation_best);

            observer(&GenerationInfo {
                local_run,
                params: &params,
                selected: &selected,
                evaluations: tracker.used,
                best_error: tracker.best_error,
            });

            if cfg.elitist() {
                parents = selected;
            }

            if local_stop(&params, &restarts.stagnation_history, &options.termination).is_some() {
                break;
            }
        }

        match restarts.next_plan(tracker.used - local_start, &mut rng) {
            Some(next) => {
                plan = next;
                local_run += 1;
            }
            None => break,
        }
    }

    Ok(RunRecord {
        config: *cfg,
        function_id: problem.id().to_string(),
        dimension: dim,
        seed: options.seed,
        evaluations_used: tracker.used,
        best_error: tracker.best_error,
        hit_index: tracker.hit_index,
        trajectory: tracker.trajectory,
    })
}

fn thresholded(z: DVector<f64>, threshold: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let mut z = z;
    loop {
        match apply_threshold(&z, threshold) {
            Ok(v) => return v,
            Err(_) => {
                z = DVector::from_iterator(
                    z.len(),
                    (0..z.len()).map(|_| rng.sample(StandardNormal)),
                );
            }
        }
    }
}

/// First local restart criterion that fires, if any.
fn local_stop(
    params: &StrategyParams,
    history: &[f64],
    criteria: &TerminationCriteria,
) -> Option<LocalStop> {
    if !params.sigma.is_finite() || params.condition_number() > criteria.max_condition {
        return Some(LocalStop::Condition);
    }
    let spread = params.max_axis_std();
    if spread < criteria.tol_x * params.sigma0 {
        return Some(LocalStop::TolX);
    }
    if spread > criteria.tol_up_sigma * params.sigma0 {
        return Some(LocalStop::TolUpSigma);
    }
    let window = (criteria.stagnation_base
        + criteria.stagnation_scale * params.dimension as f64 / params.lambda as f64)
        .ceil() as usize;
    if history.len() >= window {
        // range of the generation-best values over the window
        let recent = &history[history.len() - window..];
        let lo = recent.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi - lo > criteria.tol_fun) {
            return Some(LocalStop::Stagnation);
        }
    }
    if criteria.no_effect_axis {
        let axis = (params.generation as usize) % params.dimension;
        let step = params.b.column(axis) * (0.1 * params.sigma * params.d[axis]);
        if (&params.mean + step) == params.mean {
            return Some(LocalStop::NoEffectAxis);
        }
    }
    if criteria.no_effect_coord {
        let m = &params.mean;
        if (0..params.dimension)
            .any(|i| m[i] + 0.2 * params.sigma * params.c[(i, i)].sqrt() == m[i])
        {
            return Some(LocalStop::NoEffectCoord);
        }
    }
    None
}
