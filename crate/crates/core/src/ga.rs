//! (1, lambda) mutation-only GA with a self-adaptive mutation rate, searching
//! ES structures under the ERT-first fitness ordering.

use std::cmp::Ordering;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::configuration::{ConfigurationVector, SearchSpace, NUM_MODULES};
use crate::es::Objective;
use crate::evaluation::{fitness_cmp, CacheError, CachedEvaluator, FitnessSummary};

pub const DEFAULT_LAMBDA: usize = 12;
/// Structure evaluations per GA run.
pub const DEFAULT_BUDGET: usize = 240;
pub const RATE_LEARNING: f64 = 0.22;
pub const RATE_MIN: f64 = 1.0 / NUM_MODULES as f64;
pub const RATE_MAX: f64 = 0.5;
pub const INITIAL_RATE: f64 = 2.0 / NUM_MODULES as f64;

/// Logistic rate update for a given learning rate and normal deviate `g`,
/// clamped to `[RATE_MIN, RATE_MAX]`.
pub fn mutate_rate_with(p: f64, gamma: f64, g: f64) -> f64 {
    let p = p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
    let q = 1.0 / (1.0 + (1.0 - p) / p * (-gamma * g).exp());
    q.clamp(RATE_MIN, RATE_MAX)
}

pub fn mutate_rate<R: Rng + ?Sized>(p: f64, rng: &mut R) -> f64 {
    mutate_rate_with(p, RATE_LEARNING, rng.sample(StandardNormal))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GAIndividual {
    pub config: ConfigurationVector,
    pub rate: f64,
    pub fitness: FitnessSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub generation: usize,
    /// Best individual seen up to and including this generation.
    pub best: GAIndividual,
    /// Structure evaluations consumed so far.
    pub evaluations: usize,
}

impl fmt::Display for TraceEntry {
    /// `generation TAB config TAB ert|NA TAB fce`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ert = self
            .best
            .fitness
            .ert
            .map_or_else(|| "NA".to_string(), |e| e.to_string());
        write!(
            f,
            "{}\t{}\t{}\t{:e}",
            self.generation, self.best.config, ert, self.best.fitness.fce
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GARunTrace {
    pub entries: Vec<TraceEntry>,
    pub evaluations: usize,
}

impl GARunTrace {
    pub fn best(&self) -> Option<&GAIndividual> {
        self.entries.last().map(|e| &e.best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GAOptions {
    pub lambda: usize,
    pub budget: usize,
    pub seed: u64,
}

impl GAOptions {
    pub fn new(seed: u64) -> Self {
        GAOptions {
            lambda: DEFAULT_LAMBDA,
            budget: DEFAULT_BUDGET,
            seed,
        }
    }
}

/// Fitness oracle for ES structures.
pub trait StructureEvaluator: Sync {
    type Error;

    fn evaluate(&self, cfg: &ConfigurationVector) -> Result<FitnessSummary, Self::Error>;

    /// Evaluates several structures; the default runs them in parallel.
    fn evaluate_batch(
        &self,
        cfgs: &[ConfigurationVector],
    ) -> Vec<Result<FitnessSummary, Self::Error>>
    where
        Self::Error: Send,
    {
        cfgs.par_iter().map(|c| self.evaluate(c)).collect()
    }
}

impl<F, E> StructureEvaluator for F
where
    F: Fn(&ConfigurationVector) -> Result<FitnessSummary, E> + Sync,
{
    type Error = E;

    fn evaluate(&self, cfg: &ConfigurationVector) -> Result<FitnessSummary, E> {
        self(cfg)
    }
}

impl<O: Objective + ?Sized> StructureEvaluator for CachedEvaluator<'_, O> {
    type Error = CacheError;

    fn evaluate(&self, cfg: &ConfigurationVector) -> Result<FitnessSummary, CacheError> {
        CachedEvaluator::evaluate(self, cfg)
    }

    fn evaluate_batch(
        &self,
        cfgs: &[ConfigurationVector],
    ) -> Vec<Result<FitnessSummary, CacheError>> {
        CachedEvaluator::evaluate_batch(self, cfgs)
    }
}

/// Evaluates each distinct genome once; failures become the worst possible
/// fitness.
fn evaluate_all<V>(genomes: &[ConfigurationVector], evaluator: &V) -> Vec<FitnessSummary>
where
    V: StructureEvaluator + ?Sized,
    V::Error: Send,
{
    let mut unique: Vec<ConfigurationVector> = Vec::new();
    for g in genomes {
        if !unique.contains(g) {
            unique.push(*g);
        }
    }
    let scores: Vec<FitnessSummary> = evaluator
        .evaluate_batch(&unique)
        .into_iter()
        .map(|r| r.unwrap_or_else(|_| FitnessSummary::worst()))
        .collect();
    genomes
        .iter()
        .map(|g| scores[unique.iter().position(|u| u == g).unwrap()].clone())
        .collect()
}

/// One generation: `lambda` offspring copy the parent, mutate their rate and
/// then their genome; the best offspring (earliest on ties) is returned.
pub fn ga_step<V, R>(
    parent: &GAIndividual,
    lambda: usize,
    space: &SearchSpace,
    evaluator: &V,
    rng: &mut R,
) -> GAIndividual
where
    V: StructureEvaluator + ?Sized,
    V::Error: Send,
    R: Rng + ?Sized,
{
    let lambda = lambda.max(1);
    let mut offspring = Vec::with_capacity(lambda);
    for _ in 0..lambda {
        let rate = mutate_rate(parent.rate, rng);
        let config = space.mutate(&parent.config, rate, rng);
        offspring.push((config, rate));
    }
    let genomes: Vec<_> = offspring.iter().map(|o| o.0).collect();
    let fitness = evaluate_all(&genomes, evaluator);
    offspring
        .into_iter()
        .zip(fitness)
        .map(|((config, rate), fitness)| GAIndividual {
            config,
            rate,
            fitness,
        })
        .min_by(|a, b| fitness_cmp(&a.fitness, &b.fitness))
        .expect("at least one offspring")
}

/// Runs `budget / lambda` generations from a uniformly random genome.
pub fn ga_run<V>(space: &SearchSpace, evaluator: &V, options: &GAOptions) -> GARunTrace
where
    V: StructureEvaluator + ?Sized,
    V::Error: Send,
{
    let lambda = options.lambda.max(1);
    let generations = options.budget / lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut parent = GAIndividual {
        config: space.random(&mut rng),
        rate: INITIAL_RATE,
        fitness: FitnessSummary::worst(),
    };
    let mut best: Option<GAIndividual> = None;
    let mut entries = Vec::with_capacity(generations);
    let mut evaluations = 0;
    for generation in 0..generations {
        parent = ga_step(&parent, lambda, space, evaluator, &mut rng);
        evaluations += lambda;
        let improved = best
            .as_ref()
            .is_none_or(|b| fitness_cmp(&parent.fitness, &b.fitness) == Ordering::Less);
        if improved {
            best = Some(parent.clone());
        }
        entries.push(TraceEntry {
            generation,
            best: best.clone().expect("set in the first generation"),
            evaluations,
        });
    }
    GARunTrace {
        entries,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

    #[test]
    fn rate_fixed_points() {
        assert_eq!(mutate_rate_with(0.3, 0.0, 1.7), 0.3);
        assert!((mutate_rate_with(0.5, RATE_LEARNING, 0.0) - 0.5).abs() < 1e-15);
        assert_eq!(mutate_rate_with(0.5, RATE_LEARNING, 10.0), RATE_MAX);
        assert_eq!(mutate_rate_with(RATE_MIN, RATE_LEARNING, -10.0), RATE_MIN);
    }

    #[test]
    fn rate_median_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut draws: Vec<f64> = (0..100_000).map(|_| mutate_rate(0.2, &mut rng)).collect();
        draws.sort_by(f64::total_cmp);
        let median = draws[draws.len() / 2];
        assert!((median - 0.2).abs() <= 0.02, "{median}");
    }

    fn by_index(cfg: &ConfigurationVector) -> Result<FitnessSummary, ()> {
        Ok(FitnessSummary::synthetic(None, cfg.index() as f64))
    }

    #[test]
    fn step_is_comma_and_counts_lambda() {
        let space = SearchSpace::full();
        let calls = AtomicUsize::new(0);
        let eval = |c: &ConfigurationVector| {
            calls.fetch_add(1, AtomicOrdering::Relaxed);
            by_index(c)
        };
        let parent = GAIndividual {
            config: ConfigurationVector::DEFAULT,
            rate: 0.5,
            fitness: FitnessSummary::synthetic(Some(1.0), 0.0),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let child = ga_step(&parent, 12, &space, &eval, &mut rng);
        // the parent is better than anything without an ERT but is replaced
        assert_eq!(child.fitness.ert, None);
        assert!(calls.load(AtomicOrdering::Relaxed) <= 12);
    }

    #[test]
    fn failures_rank_last() {
        let space = SearchSpace::full();
        let eval = |c: &ConfigurationVector| {
            if c.index() % 2 == 0 {
                Err(())
            } else {
                by_index(c)
            }
        };
        let fit = evaluate_all(&[ConfigurationVector::DEFAULT], &eval);
        assert_eq!(fit[0].fce, f64::INFINITY);
        let trace = ga_run(&space, &eval, &GAOptions::new(1));
        assert!(trace.best().unwrap().fitness.fce.is_finite());
    }

    #[test]
    fn run_budget_and_monotone_trace() {
        let space = SearchSpace::full();
        let trace = ga_run(&space, &by_index, &GAOptions::new(5));
        assert_eq!(trace.entries.len(), 20);
        assert_eq!(trace.evaluations, 240);
        for w in trace.entries.windows(2) {
            assert_ne!(
                fitness_cmp(&w[1].best.fitness, &w[0].best.fitness),
                Ordering::Greater
            );
        }
        let one = ga_run(
            &space,
            &by_index,
            &GAOptions {
                lambda: 12,
                budget: 12,
                seed: 0,
            },
        );
        assert_eq!(one.entries.len(), 1);
        let line = trace.entries[0].to_string();
        assert_eq!(line.split('\t').count(), 4);
    }
}
