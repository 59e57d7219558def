pub mod benchmarks;
pub mod configuration;
pub mod es;
pub mod evaluation;
pub mod ga;
pub mod sampling;
pub mod seed;
