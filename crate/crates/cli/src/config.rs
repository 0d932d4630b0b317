use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use stochcausal::bench::BenchConfig;
use stochcausal::kernel::KernelFamily;
use stochcausal::pipeline::PipelineConfig;
use stochcausal::vi::LatentPrior;

/// Flat key/value run configuration read from a TOML file. Every key is
/// optional and overrides the library default; unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub outer_iters: Option<usize>,
    pub restarts: Option<usize>,
    pub q_steps: Option<usize>,
    pub q_learning_rate: Option<f64>,
    pub q_init_scale: Option<f64>,
    pub w_iters: Option<usize>,
    pub tol: Option<f64>,
    pub kernel: Option<KernelFamily>,
    pub lengthscale_scale: Option<f64>,
    pub latent_dim: Option<usize>,
    pub prior: Option<LatentPrior>,
    /// Sets every head's regularizer; the per-head keys below win over it.
    pub lambda: Option<f64>,
    pub lambda_y: Option<f64>,
    pub lambda_w: Option<f64>,
    pub lambda_x: Option<f64>,
    pub lambda_s: Option<f64>,
    pub lambda_z: Option<f64>,
    pub lambda_q: Option<f64>,
    pub noise_y: Option<f64>,
    pub noise_x: Option<f64>,
    pub noise_s: Option<f64>,
    pub noise_z: Option<f64>,
    pub noise_q: Option<f64>,
    pub aux_kernel: Option<KernelFamily>,
    pub aux_lengthscale_scale: Option<f64>,
    pub aux_delta: Option<f64>,
    pub standardize: Option<bool>,
    /// Monte-Carlo draws per effect estimate.
    pub mc_samples: Option<usize>,
    /// `bench` only: `desk` (reduced optimization budget) or `full`.
    pub budget: Option<Budget>,
    /// `bench` only: grid-search lengthscale and regularizer on the first
    /// replication.
    pub tune: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Desk,
    Full,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(RunConfig::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// `--seed` wins over the file, which wins over 0.
    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(0)
    }

    pub fn mc_samples(&self, flag: Option<usize>, default: usize) -> usize {
        flag.or(self.mc_samples).unwrap_or(default)
    }

    pub fn apply(&self, cfg: &mut PipelineConfig<f64>) {
        let f = &mut cfg.fit;
        set(&mut f.samples, self.samples);
        set(&mut f.outer_iters, self.outer_iters);
        set(&mut f.restarts, self.restarts);
        set(&mut f.q_steps, self.q_steps);
        set(&mut f.q_learning_rate, self.q_learning_rate);
        set(&mut f.q_init_scale, self.q_init_scale);
        set(&mut f.w_iters, self.w_iters);
        set(&mut f.tol, self.tol);
        set(&mut f.kernel, self.kernel);
        set(&mut f.lengthscale_scale, self.lengthscale_scale);
        set(&mut f.latent_dim, self.latent_dim);
        set(&mut f.prior, self.prior);
        let l = &mut f.lambda;
        for v in [&mut l.y, &mut l.w, &mut l.x, &mut l.s, &mut l.z, &mut l.q] {
            set(v, self.lambda);
        }
        set(&mut l.y, self.lambda_y);
        set(&mut l.w, self.lambda_w);
        set(&mut l.x, self.lambda_x);
        set(&mut l.s, self.lambda_s);
        set(&mut l.z, self.lambda_z);
        set(&mut l.q, self.lambda_q);
        let n = &mut f.noise;
        set(&mut n.y, self.noise_y);
        set(&mut n.x, self.noise_x);
        set(&mut n.s, self.noise_s);
        set(&mut n.z, self.noise_z);
        set(&mut n.q, self.noise_q);
        set(&mut cfg.aux.kernel, self.aux_kernel);
        set(&mut cfg.aux.lengthscale_scale, self.aux_lengthscale_scale);
        set(&mut cfg.aux.delta, self.aux_delta);
        set(&mut cfg.standardize, self.standardize);
    }

    pub fn pipeline(&self, seed: u64) -> PipelineConfig<f64> {
        let mut cfg = PipelineConfig::default();
        self.apply(&mut cfg);
        cfg.fit.seed = seed;
        cfg
    }

    pub fn bench(&self, budget: Option<Budget>) -> BenchConfig<f64> {
        let samples = self.samples.unwrap_or(PipelineConfig::<f64>::default().fit.samples);
        let mut cfg = match budget.or(self.budget).unwrap_or(Budget::Desk) {
            Budget::Desk => BenchConfig::desk(samples),
            Budget::Full => BenchConfig::default(),
        };
        self.apply(&mut cfg.pipeline);
        set(&mut cfg.mc_samples, self.mc_samples);
        if self.tune == Some(false) {
            cfg.tuning = None;
        }
        cfg
    }
}

fn set<V: Copy>(slot: &mut V, v: Option<V>) {
    if let Some(v) = v {
        *slot = v;
    }
}
