//! Mutation base vectors: Gaussian or quasi-Gaussian draws, optionally
//! orthogonalized and/or mirrored.

pub mod halton;
pub mod normal;
pub mod sobol;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub use crate::configuration::BaseSampler;
pub use normal::{inverse_normal_cdf, normal_cdf};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("batch size must be at least 1")]
    EmptyBatch,
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("{base:?} sampling supports at most {max} dimensions, requested {dimension}")]
    UnsupportedDimension {
        base: BaseSampler,
        dimension: usize,
        max: usize,
    },
    #[error("coordinate {index} = {value} is outside the open unit interval")]
    Domain { index: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerSpec {
    pub base: BaseSampler,
    pub mirrored: bool,
    pub orthogonal: bool,
    pub dimension: usize,
    pub seed: u64,
}

/// Deterministic low-discrepancy point at `index`, without any scrambling.
///
/// Sobol coordinates are cell midpoints and therefore always inside (0, 1);
/// Halton index 0 is the origin.
pub fn quasi_uniform(
    base: BaseSampler,
    dimension: usize,
    index: u64,
) -> Result<Vec<f64>, SamplingError> {
    match base {
        BaseSampler::Gaussian => Err(SamplingError::UnsupportedDimension {
            base,
            dimension,
            max: 0,
        }),
        BaseSampler::Sobol => {
            let table =
                sobol::SobolTable::new(dimension).ok_or(SamplingError::UnsupportedDimension {
                    base,
                    dimension,
                    max: sobol::MAX_DIMENSION,
                })?;
            let mut bits = vec![0u32; dimension];
            table.point_bits(index, &mut bits);
            Ok(bits.into_iter().map(sobol::to_unit).collect())
        }
        BaseSampler::Halton => Ok(halton::first_primes(dimension)
            .into_iter()
            .map(|p| halton::radical_inverse(index, p))
            .collect()),
    }
}

/// Coordinate-wise inverse standard-normal CDF.
pub fn gaussian_transform(u: &[f64]) -> Result<Vec<f64>, SamplingError> {
    u.iter()
        .enumerate()
        .map(|(index, &value)| {
            inverse_normal_cdf(value).ok_or(SamplingError::Domain { index, value })
        })
        .collect()
}

enum Base {
    Gaussian,
    Sobol {
        table: sobol::SobolTable,
        shift: Vec<u32>,
        index: u64,
        bits: Vec<u32>,
    },
    Halton {
        primes: Vec<u64>,
        index: u64,
    },
}

/// Stateful sample stream for one ES run.
pub struct Sampler {
    spec: SamplerSpec,
    rng: ChaCha8Rng,
    base: Base,
}

impl Sampler {
    pub fn new(spec: SamplerSpec) -> Result<Self, SamplingError> {
        if spec.dimension == 0 {
            return Err(SamplingError::ZeroDimension);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let base = match spec.base {
            BaseSampler::Gaussian => Base::Gaussian,
            BaseSampler::Sobol => {
                let table = sobol::SobolTable::new(spec.dimension).ok_or(
                    SamplingError::UnsupportedDimension {
                        base: spec.base,
                        dimension: spec.dimension,
                        max: sobol::MAX_DIMENSION,
                    },
                )?;
                // random digital shift per coordinate
                let shift = (0..spec.dimension).map(|_| rng.random::<u32>()).collect();
                Base::Sobol {
                    table,
                    shift,
                    index: 1,
                    bits: vec![0; spec.dimension],
                }
            }
            BaseSampler::Halton => Base::Halton {
                primes: halton::first_primes(spec.dimension),
                index: rng.random_range(1..(1u64 << 20)),
            },
        };
        Ok(Sampler { spec, rng, base })
    }

    pub fn spec(&self) -> &SamplerSpec {
        &self.spec
    }

    /// One raw (unmirrored, unorthogonalized) standard-normal draw.
    fn draw(&mut self) -> DVector<f64> {
        let d = self.spec.dimension;
        match &mut self.base {
            Base::Gaussian => {
                DVector::from_iterator(d, (0..d).map(|_| self.rng.sample(StandardNormal)))
            }
            Base::Sobol {
                table,
                shift,
                index,
                bits,
            } => {
                table.point_bits(*index, bits);
                *index += 1;
                DVector::from_iterator(
                    d,
                    bits.iter().zip(shift.iter()).map(|(&b, &s)| {
                        inverse_normal_cdf(sobol::to_unit(b ^ s))
                            .expect("sobol midpoints lie inside (0, 1)")
                    }),
                )
            }
            Base::Halton { primes, index } => {
                let i = *index;
                *index += 1;
                DVector::from_iterator(
                    d,
                    primes.iter().map(|&p| {
                        inverse_normal_cdf(halton::radical_inverse(i, p))
                            .expect("halton points with index >= 1 lie inside (0, 1)")
                    }),
                )
            }
        }
    }

    /// Emits `count` mutation base vectors.
    ///
    /// Fresh draws are orthogonalized in blocks of at most `D` when enabled;
    /// with mirroring each fresh vector `v` is followed by `-v`.
    pub fn next_batch(&mut self, count: usize) -> Result<Vec<DVector<f64>>, SamplingError> {
        if count == 0 {
            return Err(SamplingError::EmptyBatch);
        }
        let fresh_count = if self.spec.mirrored {
            count.div_ceil(2)
        } else {
            count
        };
        let mut fresh: Vec<DVector<f64>> = (0..fresh_count).map(|_| self.draw()).collect();
        if self.spec.orthogonal {
            let d = self.spec.dimension;
            for start in (0..fresh_count).step_by(d) {
                let end = (start + d).min(fresh_count);
                self.orthogonalize(&mut fresh[start..end]);
            }
        }
        if !self.spec.mirrored {
            return Ok(fresh);
        }
        let mut out = Vec::with_capacity(count);
        for v in fresh {
            let mirror = -&v;
            out.push(v);
            out.push(mirror);
        }
        out.truncate(count);
        Ok(out)
    }

    /// Gram-Schmidt (two passes) with every vector rescaled to its raw length.
    fn orthogonalize(&mut self, block: &mut [DVector<f64>]) {
        for i in 0..block.len() {
            let mut attempts = 0;
            loop {
                let raw_norm = block[i].norm();
                let mut v = block[i].clone();
                for _ in 0..2 {
                    for q in &block[..i] {
                        let q_unit = q / q.norm();
                        let proj = v.dot(&q_unit);
                        v -= q_unit * proj;
                    }
                }
                let norm = v.norm();
                if norm > 1e-8 * raw_norm.max(f64::MIN_POSITIVE) && raw_norm > 0.0 {
                    block[i] = v * (raw_norm / norm);
                    break;
                }
                attempts += 1;
                // degenerate draw: replace with a plain Gaussian vector
                let d = self.spec.dimension;
                block[i] =
                    DVector::from_iterator(d, (0..d).map(|_| self.rng.sample(StandardNormal)));
                assert!(attempts < 100, "cannot complete orthogonal basis");
            }
        }
    }
}
