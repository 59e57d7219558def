use std::sync::atomic::{AtomicU64, Ordering};

use modcma::benchmarks::{Function, Problem};
use modcma::configuration::{enumerate_all, ConfigurationVector};
use modcma::es::{self, Evaluation, Objective, ObjectiveError, RunOptions};

fn cfg(s: &str) -> ConfigurationVector {
    s.parse().unwrap()
}

fn sphere(dim: usize) -> Problem {
    Problem::with_dimension(Function::Sphere, dim, 17)
}

struct Counting<'a> {
    inner: &'a Problem,
    calls: AtomicU64,
}

impl Objective for Counting<'_> {
    fn id(&self) -> &str {
        self.inner.id()
    }
    fn dimension(&self) -> usize {
        self.inner.dimension
    }
    fn bounds(&self) -> (f64, f64) {
        self.inner.bounds
    }
    fn evaluate(&self, x: &[f64]) -> Result<Evaluation, ObjectiveError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        Objective::evaluate(self.inner, x)
    }
}

#[test]
fn default_solves_sphere_2d() {
    let p = sphere(2);
    let hits = (0..8)
        .filter(|&s| {
            es::run(&ConfigurationVector::DEFAULT, &p, &RunOptions::new(2000, s))
                .unwrap()
                .succeeded()
        })
        .count();
    assert!(hits >= 7, "{hits}");
}

#[test]
fn budget_of_one() {
    let p = sphere(3);
    let r = es::run(&ConfigurationVector::DEFAULT, &p, &RunOptions::new(1, 0)).unwrap();
    assert_eq!(r.evaluations_used, 1);
    assert!(es::run(&ConfigurationVector::DEFAULT, &p, &RunOptions::new(0, 0)).is_err());
}

#[test]
fn without_restarts_a_local_stop_ends_the_run() {
    // unreachable target: only a local criterion can end the run early
    let p = Problem::with_dimension(Function::Rastrigin, 2, 3);
    let opts = RunOptions::new(1_000_000, 4).with_target(-1.0);
    let r = es::run(&ConfigurationVector::DEFAULT, &p, &opts).unwrap();
    assert!(r.evaluations_used < 1_000_000);
    assert!(!r.succeeded());
}

#[test]
fn restarts_use_the_whole_budget() {
    let p = Problem::with_dimension(Function::Rastrigin, 2, 3);
    let opts = RunOptions::new(20_000, 4).with_target(-1.0);
    for c in ["00000000001", "00000000002"] {
        let r = es::run(&cfg(c), &p, &opts).unwrap();
        assert_eq!(r.evaluations_used, 20_000, "{c}");
    }
}

#[test]
fn runs_are_deterministic() {
    let p = Problem::with_dimension(Function::Rosenbrock, 5, 1);
    for c in ["00000000000", "11111111122", "01010101011", "10101010110"] {
        let a = es::run(&cfg(c), &p, &RunOptions::new(3000, 9)).unwrap();
        let b = es::run(&cfg(c), &p, &RunOptions::new(3000, 9)).unwrap();
        assert_eq!(a, b, "{c}");
    }
}

#[test]
fn accounting_matches_objective_calls() {
    let p = Problem::with_dimension(Function::Ellipsoid, 3, 2);
    for (i, c) in enumerate_all().step_by(97).enumerate() {
        let counting = Counting {
            inner: &p,
            calls: AtomicU64::new(0),
        };
        let r = es::run(&c, &counting, &RunOptions::new(1500, i as u64)).unwrap();
        assert_eq!(
            r.evaluations_used,
            counting.calls.load(Ordering::Relaxed),
            "{c}"
        );
        assert!(r.evaluations_used <= 1500);
        if let Some(h) = r.hit_index {
            assert!(h <= r.evaluations_used);
            assert!(r.best_error <= 1e-8);
        } else {
            assert!(r.best_error > 1e-8);
        }
        for w in r.trajectory.windows(2) {
            assert!(w[1].0 > w[0].0 && w[1].1 < w[0].1);
        }
    }
}

#[test]
fn every_configuration_runs() {
    let p = Problem::with_dimension(Function::Gallagher, 2, 5);
    for (i, c) in enumerate_all().enumerate().filter(|(i, _)| i % 7 == 0) {
        let r = es::run(&c, &p, &RunOptions::new(200, i as u64)).unwrap();
        assert!(r.best_error.is_finite(), "{c}");
    }
}

#[test]
fn covariance_stays_symmetric_and_positive() {
    let p = Problem::with_dimension(Function::RotatedEllipsoid, 5, 8);
    for c in ["00000000000", "10000000000", "11000001110", "10111111101"] {
        es::run_observed(&cfg(c), &p, &RunOptions::new(4000, 1), |info| {
            let m = &info.params.c;
            let asym = (m - m.transpose()).abs().max();
            assert!(asym <= 1e-12 * m.abs().max().max(1.0), "{c} {asym}");
            assert!(info.params.d.iter().all(|&v| v > 0.0), "{c}");
        })
        .unwrap();
    }
}

#[test]
fn elitist_parents_never_worsen() {
    let p = Problem::with_dimension(Function::Rastrigin, 2, 6);
    for seed in 0..10 {
        let mut last: Option<(u32, f64)> = None;
        es::run_observed(
            &cfg("01000000000"),
            &p,
            &RunOptions::new(2000, seed),
            |info| {
                let best = info.selected[0].value();
                if let Some((run, prev)) = last {
                    if run == info.local_run {
                        assert!(best <= prev, "seed {seed}: {best} > {prev}");
                    }
                }
                last = Some((info.local_run, best));
            },
        )
        .unwrap();
    }
}
