//! Noiseless benchmark problems: ten functions spanning the five usual
//! subgroups, each instantiated with a seeded shift, offset and rotation.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::es::{Evaluation, Objective, ObjectiveError, DEFAULT_TARGET};
use crate::seed;

/// Dimensions every function is instantiated in.
pub const DIMENSIONS: [usize; 5] = [2, 3, 5, 10, 20];

/// Search box bound shared by all coordinates.
pub const BOUND: f64 = 5.0;

/// Default per-run budget factor: `budget = BUDGET_PER_DIMENSION * D`.
pub const BUDGET_PER_DIMENSION: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subgroup {
    Separable,
    LowConditioning,
    HighConditioning,
    MultimodalAdequate,
    MultimodalWeak,
}

impl Subgroup {
    pub const ALL: [Subgroup; 5] = [
        Subgroup::Separable,
        Subgroup::LowConditioning,
        Subgroup::HighConditioning,
        Subgroup::MultimodalAdequate,
        Subgroup::MultimodalWeak,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Subgroup::Separable => "separable",
            Subgroup::LowConditioning => "low-conditioning",
            Subgroup::HighConditioning => "high-conditioning",
            Subgroup::MultimodalAdequate => "multimodal-adequate",
            Subgroup::MultimodalWeak => "multimodal-weak",
        }
    }
}

impl fmt::Display for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    Sphere,
    Ellipsoid,
    Rastrigin,
    AttractiveSector,
    Rosenbrock,
    RotatedEllipsoid,
    Discus,
    RotatedRastrigin,
    Schaffers,
    Gallagher,
}

impl Function {
    pub const ALL: [Function; 10] = [
        Function::Sphere,
        Function::Ellipsoid,
        Function::Rastrigin,
        Function::AttractiveSector,
        Function::Rosenbrock,
        Function::RotatedEllipsoid,
        Function::Discus,
        Function::RotatedRastrigin,
        Function::Schaffers,
        Function::Gallagher,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Function::Sphere => "sphere",
            Function::Ellipsoid => "ellipsoid",
            Function::Rastrigin => "rastrigin",
            Function::AttractiveSector => "attractive-sector",
            Function::Rosenbrock => "rosenbrock",
            Function::RotatedEllipsoid => "rotated-ellipsoid",
            Function::Discus => "discus",
            Function::RotatedRastrigin => "rotated-rastrigin",
            Function::Schaffers => "schaffers",
            Function::Gallagher => "gallagher",
        }
    }

    pub fn subgroup(&self) -> Subgroup {
        match self {
            Function::Sphere | Function::Ellipsoid | Function::Rastrigin => Subgroup::Separable,
            Function::AttractiveSector | Function::Rosenbrock => Subgroup::LowConditioning,
            Function::RotatedEllipsoid | Function::Discus => Subgroup::HighConditioning,
            Function::RotatedRastrigin | Function::Schaffers => Subgroup::MultimodalAdequate,
            Function::Gallagher => Subgroup::MultimodalWeak,
        }
    }

    fn rotated(&self) -> bool {
        !matches!(self.subgroup(), Subgroup::Separable)
    }

    fn ordinal(&self) -> u64 {
        Function::ALL.iter().position(|f| f == self).unwrap() as u64
    }
}

impl FromStr for Function {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Function::ALL
            .iter()
            .copied()
            .find(|f| f.id() == s)
            .ok_or_else(|| BenchmarkError::UnknownFunction(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchmarkError {
    #[error("unknown function '{0}'")]
    UnknownFunction(String),
    #[error("dimension {0} is not one of 2, 3, 5, 10, 20")]
    UnsupportedDimension(usize),
    #[error("expected a {expected}-dimensional point, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Gaussian peaks of the Gallagher-style landscape, in the rotated frame.
#[derive(Debug, Clone, PartialEq)]
struct Peaks {
    centres: Vec<DVector<f64>>,
    scales: Vec<DVector<f64>>,
    heights: Vec<f64>,
}

const GALLAGHER_PEAKS: usize = 21;

/// One benchmark function instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub function: Function,
    pub function_id: String,
    pub dimension: usize,
    pub subgroup: Subgroup,
    pub x_opt: DVector<f64>,
    pub f_opt: f64,
    /// Orthogonal; the function is evaluated at `rotation^T (x - x_opt)`.
    pub rotation: DMatrix<f64>,
    pub bounds: (f64, f64),
    pub target_precision: f64,
    pub seed: u64,
    peaks: Option<Peaks>,
}

fn random_rotation(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

impl Problem {
    /// Instance of `function` in `dimension` dimensions; everything random is
    /// drawn from `instance_seed`.
    pub fn new(
        function: Function,
        dimension: usize,
        instance_seed: u64,
    ) -> Result<Self, BenchmarkError> {
        if !DIMENSIONS.contains(&dimension) {
            return Err(BenchmarkError::UnsupportedDimension(dimension));
        }
        Ok(Self::with_dimension(function, dimension, instance_seed))
    }

    /// Like [`new`](Self::new) without restricting the dimension (must be at least 2).
    pub fn with_dimension(function: Function, dimension: usize, instance_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed);
        let x_opt = DVector::from_iterator(
            dimension,
            (0..dimension).map(|_| rng.random_range(-4.0..4.0)),
        );
        let f_opt = (rng.random_range(-1000.0f64..1000.0) * 100.0).round() / 100.0;
        let rotation = if function.rotated() {
            random_rotation(dimension, &mut rng)
        } else {
            DMatrix::identity(dimension, dimension)
        };
        let peaks = (function == Function::Gallagher).then(|| {
            let mut centres = vec![DVector::zeros(dimension)];
            let mut heights = vec![10.0];
            let mut scales = Vec::new();
            let axis_scales = |alpha: f64, rng: &mut ChaCha8Rng| {
                let mut s: Vec<f64> = (0..dimension)
                    .map(|j| {
                        alpha.powf(j as f64 / (dimension - 1).max(1) as f64) / alpha.powf(0.25)
                    })
                    .collect();
                // random axis order
                for i in (1..s.len()).rev() {
                    let k = rng.random_range(0..=i);
                    s.swap(i, k);
                }
                DVector::from_vec(s)
            };
            scales.push(axis_scales(1000.0, &mut rng));
            for i in 1..GALLAGHER_PEAKS {
                let y = DVector::from_iterator(
                    dimension,
                    (0..dimension).map(|_| rng.random_range(-4.9..4.9)),
                );
                centres.push(rotation.transpose() * (y - &x_opt));
                heights.push(1.1 + 8.0 * (i - 1) as f64 / (GALLAGHER_PEAKS - 2) as f64);
                let k = rng.random_range(0..GALLAGHER_PEAKS - 1);
                let alpha = 1000f64.powf(2.0 * k as f64 / (GALLAGHER_PEAKS - 2) as f64);
                scales.push(axis_scales(alpha, &mut rng));
            }
            Peaks {
                centres,
                scales,
                heights,
            }
        });
        Problem {
            function,
            function_id: function.id().to_string(),
            dimension,
            subgroup: function.subgroup(),
            x_opt,
            f_opt,
            rotation,
            bounds: (-BOUND, BOUND),
            target_precision: DEFAULT_TARGET,
            seed: instance_seed,
            peaks,
        }
    }

    /// Same landscape without rotation (identity), keeping shift and offset.
    pub fn unrotated(&self) -> Self {
        let mut p = self.clone();
        p.rotation = DMatrix::identity(self.dimension, self.dimension);
        p
    }

    /// Default per-run budget for this dimension.
    pub fn default_budget(&self) -> u64 {
        BUDGET_PER_DIMENSION * self.dimension as u64
    }

    /// Value and error (`f(x) - f_opt`) at `x`.
    pub fn evaluate_point(&self, x: &[f64]) -> Result<Evaluation, BenchmarkError> {
        if x.len() != self.dimension {
            return Err(BenchmarkError::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        let shifted = DVector::from_column_slice(x) - &self.x_opt;
        let z = self.rotation.transpose() * shifted;
        let error = self.raw(&z);
        Ok(Evaluation {
            value: error + self.f_opt,
            error,
        })
    }

    /// Nonnegative landscape value in the rotated frame, zero at `z = 0`.
    fn raw(&self, z: &DVector<f64>) -> f64 {
        let d = self.dimension;
        let ill = |i: usize| 10f64.powf(6.0 * i as f64 / (d - 1).max(1) as f64);
        match self.function {
            Function::Sphere => z.norm_squared(),
            Function::Ellipsoid | Function::RotatedEllipsoid => {
                z.iter().enumerate().map(|(i, v)| ill(i) * v * v).sum()
            }
            Function::Discus => 1e6 * z[0] * z[0] + z.iter().skip(1).map(|v| v * v).sum::<f64>(),
            Function::Rastrigin | Function::RotatedRastrigin => {
                let cos: f64 = z.iter().map(|v| (2.0 * PI * v).cos()).sum();
                10.0 * (d as f64 - cos) + z.norm_squared()
            }
            Function::AttractiveSector => {
                let s: f64 = z
                    .iter()
                    .zip(self.x_opt.iter())
                    .map(|(zi, oi)| {
                        let scale = if zi * oi > 0.0 { 100.0 } else { 1.0 };
                        (scale * zi).powi(2)
                    })
                    .sum();
                s.powf(0.9)
            }
            Function::Rosenbrock => {
                let scale = ((d as f64).sqrt() / 8.0).max(1.0);
                let w: Vec<f64> = z.iter().map(|v| scale * v + 1.0).collect();
                w.windows(2)
                    .map(|p| 100.0 * (p[0] * p[0] - p[1]).powi(2) + (p[0] - 1.0).powi(2))
                    .sum()
            }
            Function::Schaffers => {
                let terms: f64 = z
                    .as_slice()
                    .windows(2)
                    .map(|p| {
                        let s = (p[0] * p[0] + p[1] * p[1]).sqrt();
                        s.sqrt() + s.sqrt() * (50.0 * s.powf(0.2)).sin().powi(2)
                    })
                    .sum();
                (terms / (d - 1) as f64).powi(2)
            }
            Function::Gallagher => {
                let peaks = self.peaks.as_ref().expect("gallagher instance has peaks");
                let best = peaks
                    .centres
                    .iter()
                    .zip(&peaks.scales)
                    .zip(&peaks.heights)
                    .map(|((c, s), h)| {
                        let q: f64 = z
                            .iter()
                            .zip(c.iter())
                            .zip(s.iter())
                            .map(|((zi, ci), si)| si * (zi - ci).powi(2))
                            .sum();
                        h * (-q / (2.0 * d as f64)).exp()
                    })
                    .fold(0.0, f64::max);
                (10.0 - best).powi(2)
            }
        }
    }
}

impl Objective for Problem {
    fn id(&self) -> &str {
        &self.function_id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> Result<Evaluation, ObjectiveError> {
        self.evaluate_point(x)
            .map_err(|e| ObjectiveError(e.to_string()))
    }
}

/// Seed of the instance of `function` in `dimension` dimensions of the suite.
pub fn instance_seed(suite_seed: u64, function: Function, dimension: usize) -> u64 {
    seed::derive(suite_seed, &[function.ordinal(), dimension as u64])
}

/// Looks up one suite problem by function id.
pub fn suite_problem(
    suite_seed: u64,
    function_id: &str,
    dimension: usize,
) -> Result<Problem, BenchmarkError> {
    let function: Function = function_id.parse()?;
    Problem::new(
        function,
        dimension,
        instance_seed(suite_seed, function, dimension),
    )
}

/// All functions in all dimensions.
pub fn make_suite(suite_seed: u64) -> Vec<Problem> {
    Function::ALL
        .iter()
        .flat_map(|&f| {
            DIMENSIONS
                .iter()
                .map(move |&d| Problem::with_dimension(f, d, instance_seed(suite_seed, f, d)))
        })
        .collect()
}

/// Tab-separated manifest: `function_id, dimension, subgroup, seed`.
pub fn suite_manifest(problems: &[Problem]) -> String {
    let mut out = String::new();
    for p in problems {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            p.function_id, p.dimension, p.subgroup, p.seed
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(p: &Problem, offset: &[f64]) -> Vec<f64> {
        p.x_opt.iter().zip(offset).map(|(a, b)| a + b).collect()
    }

    #[test]
    fn optimum_has_zero_error() {
        for p in make_suite(3) {
            let e = p.evaluate_point(p.x_opt.as_slice()).unwrap();
            assert_eq!(e.error, 0.0, "{}", p.function_id);
            assert_eq!(e.value, p.f_opt);
        }
    }

    #[test]
    fn sphere_and_ellipsoid_examples() {
        let sphere = Problem::new(Function::Sphere, 3, 1).unwrap();
        let e = sphere
            .evaluate_point(&point(&sphere, &[1.0, 0.0, 0.0]))
            .unwrap();
        assert!((e.error - 1.0).abs() < 1e-12);
        let ell = Problem::new(Function::Ellipsoid, 2, 1).unwrap();
        let e = ell.evaluate_point(&point(&ell, &[0.0, 1.0])).unwrap();
        assert!((e.error - 1e6).abs() < 1e-6);
    }

    #[test]
    fn suite_shape() {
        let suite = make_suite(1);
        assert_eq!(suite.len(), 50);
        for g in Subgroup::ALL {
            assert!(suite.iter().any(|p| p.subgroup == g));
        }
        let again = make_suite(1);
        assert!(suite.iter().zip(&again).all(|(a, b)| a.x_opt == b.x_opt));
        assert_ne!(make_suite(2)[0].x_opt, suite[0].x_opt);
        let manifest = suite_manifest(&suite);
        assert_eq!(manifest.lines().count(), 50);
        assert!(manifest.starts_with("sphere\t2\tseparable\t"));
    }

    #[test]
    fn rotations_are_orthogonal() {
        for p in make_suite(5) {
            let eye = DMatrix::<f64>::identity(p.dimension, p.dimension);
            let err = (&p.rotation.transpose() * &p.rotation - eye).abs().max();
            assert!(err <= 1e-10, "{} {}", p.function_id, err);
        }
    }

    #[test]
    fn rotation_harness() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for p in make_suite(9) {
            let flat = p.unrotated();
            for _ in 0..20 {
                let x = DVector::from_iterator(
                    p.dimension,
                    (0..p.dimension).map(|_| rng.random_range(-5.0..5.0)),
                );
                let u = p.rotation.transpose() * (&x - &p.x_opt) + &p.x_opt;
                let a = flat.evaluate_point(u.as_slice()).unwrap().error;
                let b = p.evaluate_point(x.as_slice()).unwrap().error;
                assert!(
                    (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                    "{} {a} {b}",
                    p.function_id
                );
            }
        }
    }

    #[test]
    fn errors_nonnegative_by_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for p in make_suite(4) {
            for _ in 0..200 {
                let x: Vec<f64> = (0..p.dimension)
                    .map(|_| rng.random_range(-5.0..5.0))
                    .collect();
                let e = p.evaluate_point(&x).unwrap();
                assert!(e.error >= 0.0 && e.value >= p.f_opt);
            }
        }
    }

    #[test]
    fn argument_errors() {
        let p = Problem::new(Function::Sphere, 2, 0).unwrap();
        assert_eq!(
            p.evaluate_point(&[0.0; 3]),
            Err(BenchmarkError::DimensionMismatch {
                expected: 2,
                got: 3
            })
        );
        assert!(Problem::new(Function::Sphere, 4, 0).is_err());
        assert!(suite_problem(0, "nope", 2).is_err());
        assert_eq!(
            suite_problem(0, "discus", 5).unwrap().subgroup,
            Subgroup::HighConditioning
        );
    }
}
