//! The modular ES: one run of a configured strategy, with restarts.

pub mod adapt;
pub mod interactions;
pub mod ops;
pub mod params;
pub mod restart;
mod run;

use thiserror::Error;

pub use adapt::{adapt, AdaptOptions, AdaptReport, TPA_ALPHA, TPA_SMOOTHING};
pub use interactions::{resolve_interactions, Resolved};
pub use ops::{
    apply_threshold, evaluate_offspring, recombine, select, EvaluationFailure, Individual,
    ResampleNeeded, SelectionShortfall,
};
pub use params::{default_lambda, recombination_weights, StrategyParams};
pub use restart::{LocalPlan, RestartState};
pub use run::{run, run_observed, threshold_schedule, GenerationInfo, LocalStop};

use crate::configuration::ConfigurationVector;
use crate::sampling::SamplingError;

/// One objective evaluation: raw value plus distance to the optimum value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ObjectiveError(pub String);

/// A box-bounded minimization problem with known optimum value.
pub trait Objective: Sync {
    fn id(&self) -> &str;
    fn dimension(&self) -> usize;
    /// Lower and upper bound shared by every coordinate of the search box.
    fn bounds(&self) -> (f64, f64);
    fn evaluate(&self, x: &[f64]) -> Result<Evaluation, ObjectiveError>;
}

/// Thresholds of the local restart criteria.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminationCriteria {
    /// Maximum condition number of `C`.
    pub max_condition: f64,
    /// Stop when `sigma * max axis std` falls below this fraction of the initial sigma.
    pub tol_x: f64,
    /// Stop when `sigma * max axis std` exceeds this multiple of the initial sigma.
    pub tol_up_sigma: f64,
    /// Stop when the generation-best values of the stagnation window span at most this.
    pub tol_fun: f64,
    /// Stagnation window is `ceil(base + scale * D / lambda)` generations.
    pub stagnation_base: f64,
    pub stagnation_scale: f64,
    pub no_effect_axis: bool,
    pub no_effect_coord: bool,
}

impl Default for TerminationCriteria {
    fn default() -> Self {
        TerminationCriteria {
            max_condition: 1e14,
            tol_x: 1e-12,
            tol_up_sigma: 1e20,
            tol_fun: 1e-12,
            stagnation_base: 10.0,
            stagnation_scale: 30.0,
            no_effect_axis: true,
            no_effect_coord: true,
        }
    }
}

/// Exogenous settings of one ES run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub budget: u64,
    pub target: f64,
    pub seed: u64,
    pub termination: TerminationCriteria,
}

/// Default fixed-target precision.
pub const DEFAULT_TARGET: f64 = 1e-8;

impl RunOptions {
    pub fn new(budget: u64, seed: u64) -> Self {
        RunOptions {
            budget,
            target: DEFAULT_TARGET,
            seed,
            termination: TerminationCriteria::default(),
        }
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = target;
        self
    }
}

/// Result of one seeded ES run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: ConfigurationVector,
    pub function_id: String,
    pub dimension: usize,
    pub seed: u64,
    pub evaluations_used: u64,
    /// Best-so-far error at the end of the run.
    pub best_error: f64,
    /// First evaluation (1-based) whose error was within the target.
    pub hit_index: Option<u64>,
    /// `(evaluation, best error)` at every improvement; empty for cached records.
    pub trajectory: Vec<(u64, f64)>,
}

impl RunRecord {
    pub fn succeeded(&self) -> bool {
        self.hit_index.is_some()
    }
}

#[derive(Debug, Error)]
pub enum EsError {
    #[error("evaluation budget must be at least 1")]
    ZeroBudget,
    #[error("problem dimension must be at least 1")]
    ZeroDimension,
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Selection(#[from] SelectionShortfall),
    #[error("objective failed after {evaluations} evaluations: {source}")]
    Objective {
        evaluations: u64,
        #[source]
        source: ObjectiveError,
    },
}
