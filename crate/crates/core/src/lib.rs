//! Causal effect estimation from temporal data with stochastic latent
//! confounders.

pub mod aux;
pub mod bench;
pub mod effects;
pub mod error;
pub mod kernel;
pub mod pipeline;
pub mod representer;
pub mod rng;
pub mod scalar;
pub mod scm;
pub mod vi;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Dataset64 = scm::TimeSeriesDataset<f64>;
pub type Dataset32 = scm::TimeSeriesDataset<f32>;
pub type FitConfig64 = vi::FitConfig<f64>;
pub type FitConfig32 = vi::FitConfig<f32>;
pub type PipelineConfig64 = pipeline::PipelineConfig<f64>;
pub type PipelineConfig32 = pipeline::PipelineConfig<f32>;
pub type FittedModel64 = pipeline::FittedModel<f64>;
pub type FittedModel32 = pipeline::FittedModel<f32>;
pub type BenchConfig64 = bench::BenchConfig<f64>;
pub type BenchConfig32 = bench::BenchConfig<f32>;
