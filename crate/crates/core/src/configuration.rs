//! ES-structure representations: the module catalog, the 11-gene
//! configuration vector and its textual codec, enumeration and mutation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

/// Number of switchable modules (genes) in a configuration.
pub const NUM_MODULES: usize = 11;

/// One switchable module and its available options.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModuleDescriptor {
    pub name: &'static str,
    pub option_labels: &'static [&'static str],
}

impl ModuleDescriptor {
    pub fn option_count(&self) -> u8 {
        self.option_labels.len() as u8
    }
}

const CATALOG: [ModuleDescriptor; NUM_MODULES] = [
    ModuleDescriptor {
        name: "Active Update",
        option_labels: &["off", "on"],
    },
    ModuleDescriptor {
        name: "Elitism",
        option_labels: &["(mu,lambda)", "(mu+lambda)"],
    },
    ModuleDescriptor {
        name: "Mirrored Sampling",
        option_labels: &["off", "on"],
    },
    ModuleDescriptor {
        name: "Orthogonal Sampling",
        option_labels: &["off", "on"],
    },
    ModuleDescriptor {
        name: "Sequential Selection",
        option_labels: &["off", "on"],
    },
    ModuleDescriptor {
        name: "Threshold Convergence",
        option_labels: &["off", "on"],
    },
    ModuleDescriptor {
        name: "TPA",
        option_labels: &["off", "on"],
    },
    ModuleDescriptor {
        name: "Pairwise Selection",
        option_labels: &["off", "on"],
    },
    ModuleDescriptor {
        name: "Recombination Weights",
        option_labels: &["log-rank", "1/mu"],
    },
    ModuleDescriptor {
        name: "Quasi-Gaussian Sampling",
        option_labels: &["off", "Sobol", "Halton"],
    },
    ModuleDescriptor {
        name: "Increasing Population",
        option_labels: &["off", "IPOP", "BIPOP"],
    },
];

/// The ordered table of modules that defines the configuration space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModuleCatalog {
    entries: &'static [ModuleDescriptor; NUM_MODULES],
}

impl ModuleCatalog {
    pub fn standard() -> Self {
        ModuleCatalog { entries: &CATALOG }
    }

    pub fn entries(&self) -> &'static [ModuleDescriptor; NUM_MODULES] {
        self.entries
    }

    pub fn option_counts(&self) -> [u8; NUM_MODULES] {
        let mut counts = [0; NUM_MODULES];
        for (c, e) in counts.iter_mut().zip(self.entries.iter()) {
            *c = e.option_count();
        }
        counts
    }

    /// Number of distinct configurations (product of option counts).
    pub fn space_size(&self) -> usize {
        self.entries
            .iter()
            .map(|e| e.option_count() as usize)
            .product()
    }
}

impl Default for ModuleCatalog {
    fn default() -> Self {
        Self::standard()
    }
}

fn option_count(position: usize) -> u8 {
    CATALOG[position].option_count()
}

/// Textual codec failures. Positions are 1-based, matching module numbering.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("configuration must have exactly {NUM_MODULES} digits, got {0}")]
    Length(usize),
    #[error("invalid character {character:?} at position {position}")]
    NotADigit { position: usize, character: char },
    #[error(
        "value {value} out of range at position {position} (module '{module}' has options 0-{max})"
    )]
    Range {
        position: usize,
        value: u8,
        max: u8,
        module: &'static str,
    },
}

/// Which base sampler module 10 selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseSampler {
    Gaussian,
    Sobol,
    Halton,
}

/// Restart regime selected by module 11.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RestartRegime {
    None,
    Ipop,
    Bipop,
}

/// Recombination weight scheme selected by module 9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightScheme {
    LogRank,
    Equal,
}

/// An ES structure: one option index per module, in catalog order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ConfigurationVector {
    genes: [u8; NUM_MODULES],
}

impl ConfigurationVector {
    /// The default CMA-ES (every module at option 0).
    pub const DEFAULT: ConfigurationVector = ConfigurationVector {
        genes: [0; NUM_MODULES],
    };

    /// Builds a vector from raw genes, checking every gene against the catalog.
    pub fn new(genes: [u8; NUM_MODULES]) -> Result<Self, CodecError> {
        for (i, &g) in genes.iter().enumerate() {
            check_gene(i, g)?;
        }
        Ok(ConfigurationVector { genes })
    }

    /// Parses the canonical 11-digit form.
    pub fn decode(text: &str) -> Result<Self, CodecError> {
        let chars: Vec<char> = text.chars().collect();
        if chars.len() != NUM_MODULES {
            return Err(CodecError::Length(chars.len()));
        }
        let mut genes = [0u8; NUM_MODULES];
        for (i, c) in chars.into_iter().enumerate() {
            let digit = c.to_digit(10).ok_or(CodecError::NotADigit {
                position: i + 1,
                character: c,
            })?;
            genes[i] = digit as u8;
            check_gene(i, genes[i])?;
        }
        Ok(ConfigurationVector { genes })
    }

    pub fn encode(&self) -> String {
        self.genes.iter().map(|g| char::from(b'0' + g)).collect()
    }

    pub fn genes(&self) -> &[u8; NUM_MODULES] {
        &self.genes
    }

    /// Gene at 0-based `index`.
    pub fn gene(&self, index: usize) -> u8 {
        self.genes[index]
    }

    /// Returns a copy with gene `index` (0-based) replaced.
    pub fn with_gene(mut self, index: usize, value: u8) -> Result<Self, CodecError> {
        check_gene(index, value)?;
        self.genes[index] = value;
        Ok(self)
    }

    pub fn active_update(&self) -> bool {
        self.genes[0] == 1
    }

    pub fn elitist(&self) -> bool {
        self.genes[1] == 1
    }

    pub fn mirrored(&self) -> bool {
        self.genes[2] == 1
    }

    pub fn orthogonal(&self) -> bool {
        self.genes[3] == 1
    }

    pub fn sequential(&self) -> bool {
        self.genes[4] == 1
    }

    pub fn threshold(&self) -> bool {
        self.genes[5] == 1
    }

    pub fn tpa(&self) -> bool {
        self.genes[6] == 1
    }

    pub fn pairwise(&self) -> bool {
        self.genes[7] == 1
    }

    pub fn weights(&self) -> WeightScheme {
        match self.genes[8] {
            0 => WeightScheme::LogRank,
            _ => WeightScheme::Equal,
        }
    }

    pub fn base_sampler(&self) -> BaseSampler {
        match self.genes[9] {
            0 => BaseSampler::Gaussian,
            1 => BaseSampler::Sobol,
            _ => BaseSampler::Halton,
        }
    }

    pub fn restart(&self) -> RestartRegime {
        match self.genes[10] {
            0 => RestartRegime::None,
            1 => RestartRegime::Ipop,
            _ => RestartRegime::Bipop,
        }
    }

    /// Mixed-radix rank of this vector in lexicographic order.
    pub fn index(&self) -> usize {
        self.genes.iter().enumerate().fold(0, |acc, (i, &g)| {
            acc * option_count(i) as usize + g as usize
        })
    }

    /// Inverse of [`index`](Self::index). `None` if `index` is outside the space.
    pub fn from_index(mut index: usize) -> Option<Self> {
        if index >= ModuleCatalog::standard().space_size() {
            return None;
        }
        let mut genes = [0u8; NUM_MODULES];
        for i in (0..NUM_MODULES).rev() {
            let radix = option_count(i) as usize;
            genes[i] = (index % radix) as u8;
            index /= radix;
        }
        Some(ConfigurationVector { genes })
    }

    /// Mutates every gene independently with probability `rate`.
    ///
    /// A gene chosen for mutation always changes: binary genes flip, ternary
    /// genes move to one of the two other options with equal probability.
    pub fn mutate<R: Rng + ?Sized>(&self, rate: f64, rng: &mut R) -> Self {
        self.mutate_masked(rate, &[true; NUM_MODULES], rng)
    }

    /// Like [`mutate`](Self::mutate) but only genes with `free[i]` set may change.
    pub fn mutate_masked<R: Rng + ?Sized>(
        &self,
        rate: f64,
        free: &[bool; NUM_MODULES],
        rng: &mut R,
    ) -> Self {
        let rate = rate.clamp(0.0, 1.0);
        let mut genes = self.genes;
        for (i, gene) in genes.iter_mut().enumerate() {
            // one uniform per position keeps the stream layout independent of the mask
            let u: f64 = rng.random();
            if !free[i] || u >= rate {
                continue;
            }
            let count = option_count(i);
            *gene = if count == 2 {
                1 - *gene
            } else {
                let shift = rng.random_range(1..count);
                (*gene + shift) % count
            };
        }
        ConfigurationVector { genes }
    }
}

fn check_gene(index: usize, value: u8) -> Result<(), CodecError> {
    let descriptor = &CATALOG[index];
    let max = descriptor.option_count() - 1;
    if value > max {
        return Err(CodecError::Range {
            position: index + 1,
            value,
            max,
            module: descriptor.name,
        });
    }
    Ok(())
}

impl fmt::Display for ConfigurationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

impl FromStr for ConfigurationVector {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConfigurationVector::decode(s)
    }
}

/// Every valid configuration exactly once, in lexicographic order.
pub fn enumerate_all() -> impl Iterator<Item = ConfigurationVector> {
    SearchSpace::full().enumerate()
}

/// A (possibly reduced) configuration space: genes outside `free` are pinned
/// to the value they have in `base`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchSpace {
    base: ConfigurationVector,
    free: [bool; NUM_MODULES],
}

impl SearchSpace {
    pub fn full() -> Self {
        SearchSpace {
            base: ConfigurationVector::DEFAULT,
            free: [true; NUM_MODULES],
        }
    }

    /// Only the listed 0-based gene positions vary; others stay as in `base`.
    pub fn with_free_genes(base: ConfigurationVector, free_positions: &[usize]) -> Self {
        let mut free = [false; NUM_MODULES];
        for &p in free_positions {
            if p < NUM_MODULES {
                free[p] = true;
            }
        }
        SearchSpace { base, free }
    }

    pub fn free_mask(&self) -> &[bool; NUM_MODULES] {
        &self.free
    }

    pub fn base(&self) -> ConfigurationVector {
        self.base
    }

    pub fn contains(&self, cfg: &ConfigurationVector) -> bool {
        (0..NUM_MODULES).all(|i| self.free[i] || cfg.genes[i] == self.base.genes[i])
    }

    pub fn size(&self) -> usize {
        (0..NUM_MODULES)
            .filter(|&i| self.free[i])
            .map(|i| option_count(i) as usize)
            .product()
    }

    /// Lexicographic enumeration of the space.
    pub fn enumerate(&self) -> SpaceIter {
        SpaceIter {
            space: *self,
            next: Some(self.first()),
        }
    }

    fn first(&self) -> ConfigurationVector {
        let mut genes = self.base.genes;
        for (i, g) in genes.iter_mut().enumerate() {
            if self.free[i] {
                *g = 0;
            }
        }
        ConfigurationVector { genes }
    }

    /// Uniform draw over the space.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> ConfigurationVector {
        let mut genes = self.base.genes;
        for (i, g) in genes.iter_mut().enumerate() {
            if self.free[i] {
                *g = rng.random_range(0..option_count(i));
            }
        }
        ConfigurationVector { genes }
    }

    pub fn mutate<R: Rng + ?Sized>(
        &self,
        cfg: &ConfigurationVector,
        rate: f64,
        rng: &mut R,
    ) -> ConfigurationVector {
        cfg.mutate_masked(rate, &self.free, rng)
    }
}

/// Mixed-radix counter over a [`SearchSpace`].
#[derive(Debug, Clone)]
pub struct SpaceIter {
    space: SearchSpace,
    next: Option<ConfigurationVector>,
}

impl Iterator for SpaceIter {
    type Item = ConfigurationVector;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.next?;
        let mut genes = current.genes;
        let mut carried = true;
        for i in (0..NUM_MODULES).rev() {
            if !self.space.free[i] {
                continue;
            }
            genes[i] += 1;
            if genes[i] < option_count(i) {
                carried = false;
                break;
            }
            genes[i] = 0;
        }
        self.next = if carried {
            None
        } else {
            Some(ConfigurationVector { genes })
        };
        Some(current)
    }
}
