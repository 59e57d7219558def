//! Per-generation operators: threshold, evaluation, selection, recombination.

use std::cmp::Ordering;

use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    /// Raw sample after thresholding.
    pub z: DVector<f64>,
    pub x: DVector<f64>,
    /// Objective value; `None` until evaluated.
    pub f: Option<f64>,
}

impl Individual {
    pub fn new(z: DVector<f64>, x: DVector<f64>) -> Self {
        Individual { z, x, f: None }
    }

    pub fn value(&self) -> f64 {
        self.f.unwrap_or(f64::INFINITY)
    }
}

fn by_value(a: &Individual, b: &Individual) -> Ordering {
    a.value().total_cmp(&b.value())
}

/// A zero sample cannot be rescaled to a positive threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("zero-length sample cannot meet a positive threshold; resample")]
pub struct ResampleNeeded;

/// Enforces a minimum sample length by mirroring short samples across the
/// threshold: a sample of length `l < t` is rescaled to `2t - l`.
pub fn apply_threshold(z: &DVector<f64>, threshold: f64) -> Result<DVector<f64>, ResampleNeeded> {
    let length = z.norm();
    if threshold <= 0.0 || length >= threshold {
        return Ok(z.clone());
    }
    if length == 0.0 {
        return Err(ResampleNeeded);
    }
    Ok(z * ((2.0 * threshold - length) / length))
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("objective failed after {consumed} evaluations: {source}")]
pub struct EvaluationFailure<E: std::error::Error + 'static> {
    pub consumed: usize,
    #[source]
    pub source: E,
}

/// Evaluates `pop` in order. With sequential selection the generation stops
/// once at least `seq_cutoff` individuals are evaluated and one of them
/// improved on `f_best`. The population is truncated to the evaluated prefix.
pub fn evaluate_offspring<E, F>(
    pop: &mut Vec<Individual>,
    mut objective: F,
    seq_active: bool,
    seq_cutoff: usize,
    f_best: f64,
) -> Result<usize, EvaluationFailure<E>>
where
    E: std::error::Error + 'static,
    F: FnMut(&DVector<f64>) -> Result<f64, E>,
{
    let mut improved = false;
    let mut evaluated = 0;
    for ind in pop.iter_mut() {
        match objective(&ind.x) {
            Ok(f) => {
                let f = if f.is_nan() { f64::INFINITY } else { f };
                ind.f = Some(f);
                evaluated += 1;
                improved |= f < f_best;
            }
            Err(source) => {
                pop.truncate(evaluated);
                return Err(EvaluationFailure {
                    consumed: evaluated,
                    source,
                });
            }
        }
        if seq_active && evaluated >= seq_cutoff && improved {
            break;
        }
    }
    pop.truncate(evaluated);
    Ok(evaluated)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("selection needs {needed} candidates but only {available} remain")]
pub struct SelectionShortfall {
    pub needed: usize,
    pub available: usize,
}

/// Selects `mu` individuals, best first.
///
/// Pairwise selection first keeps the better member of each consecutive
/// (mirrored) pair; elitism pools the previous parents with the candidates.
pub fn select(
    offspring: &[Individual],
    parents: &[Individual],
    mu: usize,
    elitist: bool,
    pairwise: bool,
) -> Result<Vec<Individual>, SelectionShortfall> {
    let mut pool: Vec<Individual> = if pairwise {
        offspring
            .chunks(2)
            .map(|pair| match pair {
                [a, b] if by_value(b, a) == Ordering::Less => b.clone(),
                [a, ..] => a.clone(),
                [] => unreachable!(),
            })
            .collect()
    } else {
        offspring.to_vec()
    };
    if elitist {
        pool.extend(parents.iter().cloned());
    }
    if pool.len() < mu {
        return Err(SelectionShortfall {
            needed: mu,
            available: pool.len(),
        });
    }
    pool.sort_by(by_value);
    pool.truncate(mu);
    Ok(pool)
}

/// Weighted mean of the ranked parents' solutions.
pub fn recombine(parents: &[Individual], weights: &[f64]) -> DVector<f64> {
    let dim = parents[0].x.len();
    parents
        .iter()
        .zip(weights)
        .fold(DVector::zeros(dim), |acc, (p, &w)| acc + &p.x * w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn ind(f: f64) -> Individual {
        Individual {
            z: DVector::from_element(1, f),
            x: DVector::from_element(1, f),
            f: Some(f),
        }
    }

    #[test]
    fn threshold_examples() {
        let z = DVector::from_vec(vec![0.3, 0.4]);
        assert_eq!(apply_threshold(&z, 0.0).unwrap(), z);
        let out = apply_threshold(&z, 1.0).unwrap();
        assert!((out.norm() - 1.5).abs() < 1e-15);
        assert!((out.normalize() - z.normalize()).norm() < 1e-15);
        assert_eq!(apply_threshold(&z, 0.5).unwrap(), z);
        assert_eq!(
            apply_threshold(&DVector::zeros(2), 1.0),
            Err(ResampleNeeded)
        );
        assert_eq!(
            apply_threshold(&DVector::zeros(2), 0.0).unwrap(),
            DVector::zeros(2)
        );
    }

    fn unevaluated(n: usize) -> Vec<Individual> {
        (0..n)
            .map(|i| Individual::new(DVector::zeros(1), DVector::from_element(1, i as f64)))
            .collect()
    }

    #[test]
    fn sequential_stops_after_cutoff() {
        // value equals index; f_best = 2.5 so index 2 is the first improvement
        let values = [5.0, 4.0, 2.0, 1.0, 0.0, 9.0];
        let mut calls = 0;
        let mut pop = unevaluated(6);
        let n = evaluate_offspring::<Infallible, _>(
            &mut pop,
            |x| {
                calls += 1;
                Ok(values[x[0] as usize])
            },
            true,
            3,
            2.5,
        )
        .unwrap();
        assert_eq!((n, calls, pop.len()), (3, 3, 3));
    }

    #[test]
    fn sequential_waits_for_cutoff() {
        let mut pop = unevaluated(6);
        let n = evaluate_offspring::<Infallible, _>(&mut pop, |x| Ok(x[0]), true, 3, 0.5).unwrap();
        // improvement at index 0, stop at cutoff
        assert_eq!(n, 3);
    }

    #[test]
    fn evaluates_everything_otherwise() {
        let mut pop = unevaluated(6);
        assert_eq!(
            evaluate_offspring::<Infallible, _>(&mut pop, |x| Ok(x[0]), false, 3, 10.0).unwrap(),
            6
        );
        let mut pop = unevaluated(6);
        assert_eq!(
            evaluate_offspring::<Infallible, _>(&mut pop, |x| Ok(x[0]), true, 3, -1.0).unwrap(),
            6
        );
    }

    #[derive(Debug, Error)]
    #[error("boom")]
    struct Boom;

    #[test]
    fn failure_reports_consumed() {
        let mut pop = unevaluated(6);
        let err = evaluate_offspring(
            &mut pop,
            |x| if x[0] >= 4.0 { Err(Boom) } else { Ok(x[0]) },
            false,
            1,
            0.0,
        )
        .unwrap_err();
        assert_eq!(err.consumed, 4);
        assert_eq!(pop.len(), 4);
    }

    #[test]
    fn nan_is_worst() {
        let mut pop = unevaluated(2);
        evaluate_offspring::<Infallible, _>(&mut pop, |_| Ok(f64::NAN), false, 1, 0.0).unwrap();
        assert_eq!(pop[0].f, Some(f64::INFINITY));
    }

    #[test]
    fn pairwise_selection() {
        let pop: Vec<_> = [3.0, 1.0, 2.0, 5.0].into_iter().map(ind).collect();
        let sel = select(&pop, &[], 1, false, true).unwrap();
        assert_eq!(sel[0].f, Some(1.0));
        let sel = select(&pop, &[], 2, false, true).unwrap();
        assert_eq!(
            sel.iter().map(|i| i.value()).collect::<Vec<_>>(),
            vec![1.0, 2.0]
        );
        assert_eq!(
            select(&pop, &[], 3, false, true),
            Err(SelectionShortfall {
                needed: 3,
                available: 2
            })
        );
    }

    #[test]
    fn elitism_keeps_parent() {
        let parent = [ind(0.5)];
        let pop: Vec<_> = [1.0, 2.0, 3.0].into_iter().map(ind).collect();
        assert_eq!(
            select(&pop, &parent, 1, true, false).unwrap()[0].f,
            Some(0.5)
        );
        assert_eq!(
            select(&pop, &parent, 1, false, false).unwrap()[0].f,
            Some(1.0)
        );
    }

    #[test]
    fn recombination() {
        let parents: Vec<_> = [1.0, 2.0, 3.0, 6.0].into_iter().map(ind).collect();
        assert_eq!(recombine(&parents, &[0.25; 4])[0], 3.0);
        assert_eq!(recombine(&parents[..1], &[1.0])[0], 1.0);
    }
}
