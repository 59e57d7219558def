use std::cmp::Ordering;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use modcma::benchmarks::suite_problem;
use modcma::configuration::{ConfigurationVector, SearchSpace};
use modcma::es::RunOptions;
use modcma::evaluation::{fitness_cmp, CachedEvaluator, FitnessSummary, ResultsCache};
use modcma::ga::{ga_run, ga_step, GAIndividual, GAOptions, INITIAL_RATE};

fn reduced() -> SearchSpace {
    SearchSpace::with_free_genes(ConfigurationVector::DEFAULT, &[0, 1, 2])
}

#[test]
fn reduced_space_matches_exhaustive_best() {
    let p = suite_problem(0, "sphere", 2).unwrap();
    let eval = CachedEvaluator::new(&p, 8, RunOptions::new(2000, 0), ResultsCache::in_memory());
    let all: Vec<FitnessSummary> = reduced()
        .enumerate()
        .map(|c| eval.evaluate(&c).unwrap())
        .collect();
    let best = all.iter().min_by(|a, b| fitness_cmp(a, b)).unwrap();
    let before = eval.new_runs();
    for seed in 0..5 {
        let trace = ga_run(&reduced(), &eval, &GAOptions::new(seed));
        let found = &trace.best().unwrap().fitness;
        assert_eq!(fitness_cmp(found, best), Ordering::Equal, "seed {seed}");
        assert!(trace
            .entries
            .iter()
            .all(|e| reduced().contains(&e.best.config)));
    }
    assert_eq!(eval.new_runs(), before);
}

#[test]
fn duplicate_offspring_are_evaluated_once() {
    let calls = AtomicUsize::new(0);
    let eval = |c: &ConfigurationVector| -> Result<FitnessSummary, ()> {
        calls.fetch_add(1, AtomicOrdering::Relaxed);
        Ok(FitnessSummary::synthetic(None, c.index() as f64))
    };
    // a single free binary gene: at most two distinct genomes per generation
    let space = SearchSpace::with_free_genes(ConfigurationVector::DEFAULT, &[4]);
    let parent = GAIndividual {
        config: ConfigurationVector::DEFAULT,
        rate: INITIAL_RATE,
        fitness: FitnessSummary::worst(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    ga_step(&parent, 12, &space, &eval, &mut rng);
    assert!(calls.load(AtomicOrdering::Relaxed) <= 2);
}

#[test]
fn comma_selection_replaces_a_better_parent() {
    let eval = |c: &ConfigurationVector| -> Result<FitnessSummary, ()> {
        Ok(FitnessSummary::synthetic(None, 1.0 + c.index() as f64))
    };
    let parent = GAIndividual {
        config: ConfigurationVector::DEFAULT,
        rate: 0.5,
        fitness: FitnessSummary::synthetic(Some(1.0), 0.0),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let next = ga_step(&parent, 12, &SearchSpace::full(), &eval, &mut rng);
    assert_eq!(next.fitness.ert, None);
    assert!(next.fitness.fce >= 1.0);
}

#[test]
fn trace_is_monotone_and_budgeted() {
    let eval = |c: &ConfigurationVector| -> Result<FitnessSummary, ()> {
        let g = c.genes();
        let ert = (g[0] == 1).then(|| 100.0 + c.index() as f64);
        Ok(FitnessSummary::synthetic(ert, (c.index() % 17) as f64))
    };
    for seed in 0..10 {
        let trace = ga_run(&SearchSpace::full(), &eval, &GAOptions::new(seed));
        assert_eq!((trace.entries.len(), trace.evaluations), (20, 240));
        for w in trace.entries.windows(2) {
            assert_ne!(
                fitness_cmp(&w[1].best.fitness, &w[0].best.fitness),
                Ordering::Greater
            );
        }
    }
    let short = ga_run(
        &SearchSpace::full(),
        &eval,
        &GAOptions {
            lambda: 12,
            budget: 12,
            seed: 0,
        },
    );
    assert_eq!(short.entries.len(), 1);
}
