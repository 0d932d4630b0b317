//! Kernelized variational estimator.
//!
//! The six heads `f_y, f_w, f_x, f_s, f_z, f_q` are representer expansions
//! over the rows of the complete dataset (observed tuples paired with `L`
//! reparameterized latent draws). Heads `y, x, s, z` are updated in closed
//! form, `f_w` by damped Newton on its convex logistic objective, and `f_q`
//! by backtracked gradient steps; the scheme is restarted from several
//! random `f_q` initializations.

mod design;
mod fit;
mod gradient;
mod objective;
mod update;

use ndarray::{Array1, Array2, Array3, ArrayView1};
use serde::{Deserialize, Serialize};

pub use design::Design;
pub use fit::{fit, training_means};
pub use gradient::{grad_beta_q, grad_beta_w};
pub use objective::{empirical_risk, kl_gaussian_iso, objective_j, penalty};
pub use update::{closed_form_update, newton_beta_w, ClosedFormHead};

use crate::error::{input_err, Result};
use crate::kernel::KernelFamily;
use crate::representer::RepresenterFunction;
use crate::rng;
use crate::scalar::Scalar;
use crate::scm::TimeSeriesDataset;

/// How the latent confounder enters the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentPrior {
    /// No latent confounder: no `f_z`, no `f_q`, no KL term.
    Absent,
    /// `z_t ~ N(0, σ_z² I)` independently over time.
    Iid,
    /// `z_t ~ N(f_z(z_{t−1}), σ_z² I)`.
    Markov,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct NoiseScales<T> {
    pub y: T,
    pub x: T,
    pub s: T,
    pub z: T,
    pub q: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct Regularizers<T> {
    pub y: T,
    pub w: T,
    pub x: T,
    pub s: T,
    pub z: T,
    pub q: T,
}

impl<T: Scalar> Regularizers<T> {
    pub fn uniform(v: T) -> Self {
        Regularizers { y: v, w: v, x: v, s: v, z: v, q: v }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct FitConfig<T> {
    /// Monte-Carlo samples `L` per time step in the complete dataset.
    pub samples: usize,
    pub noise: NoiseScales<T>,
    pub lambda: Regularizers<T>,
    pub outer_iters: usize,
    /// Step size of the `f_q` updates, applied to the per-time-step objective.
    pub q_learning_rate: T,
    /// Gradient steps on `f_q` per outer iteration.
    pub q_steps: usize,
    pub restarts: usize,
    /// Iteration cap of the Newton solve for `f_w`.
    pub w_iters: usize,
    /// Relative change of `J` below which the outer loop stops.
    pub tol: T,
    pub kernel: KernelFamily,
    /// Multiplier applied to every median-heuristic lengthscale.
    pub lengthscale_scale: T,
    pub latent_dim: usize,
    pub prior: LatentPrior,
    /// Approximate standard deviation of the initial posterior means, drawn
    /// afresh at each restart.
    pub q_init_scale: T,
    pub seed: u64,
}

impl<T: Scalar> Default for FitConfig<T> {
    fn default() -> Self {
        FitConfig {
            samples: 5,
            noise: NoiseScales { y: T::one(), x: T::one(), s: T::one(), z: T::one(), q: T::one() },
            lambda: Regularizers::uniform(T::lit(1e-3)),
            outer_iters: 50,
            q_learning_rate: T::lit(1e-2),
            q_steps: 5,
            restarts: 3,
            w_iters: 200,
            tol: T::lit(1e-6),
            kernel: KernelFamily::Matern32,
            lengthscale_scale: T::one(),
            latent_dim: 1,
            prior: LatentPrior::Markov,
            q_init_scale: T::lit(0.1),
            seed: 0,
        }
    }
}

impl<T: Scalar> FitConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v.is_finite() && v > T::zero();
        let nn = |v: T| v.is_finite() && v >= T::zero();
        let n = &self.noise;
        let l = &self.lambda;
        if self.samples == 0 || self.restarts == 0 || self.latent_dim == 0 {
            return input_err("samples, restarts and latent_dim must be at least 1");
        }
        if ![n.y, n.x, n.s, n.z, n.q].into_iter().all(pos) {
            return input_err("noise scales must be positive");
        }
        if ![l.y, l.w, l.x, l.s, l.z, l.q].into_iter().all(nn) {
            return input_err("regularizers must be non-negative");
        }
        if !pos(self.q_learning_rate) || !pos(self.lengthscale_scale) || !nn(self.tol) || !nn(self.q_init_scale) {
            return input_err("learning rate and lengthscale multiplier must be positive");
        }
        Ok(())
    }

    /// Samples actually used: the no-confounder model has nothing to sample.
    pub fn effective_samples(&self) -> usize {
        if self.prior == LatentPrior::Absent {
            1
        } else {
            self.samples
        }
    }

    pub fn effective_latent_dim(&self) -> usize {
        if self.prior == LatentPrior::Absent {
            0
        } else {
            self.latent_dim
        }
    }
}

/// Observed sequences in the form the estimator consumes.
#[derive(Clone, Debug, PartialEq)]
pub struct Observations<T> {
    pub y: Array1<T>,
    /// Treatments as 0/1 reals.
    pub w: Array1<T>,
    pub s: Array2<T>,
    pub x: Array2<T>,
    /// Values before the first row.
    pub s0: Array1<T>,
    pub y0: T,
    pub w0: T,
}

impl<T: Scalar> Observations<T> {
    pub fn from_dataset(ds: &TimeSeriesDataset<T>) -> Result<Self> {
        ds.validate()?;
        Ok(Observations {
            y: ds.y.clone(),
            w: ds.w.iter().map(|&w| T::from_u8(w).expect("binary")).collect(),
            s: ds.s.clone(),
            x: ds.x.clone(),
            s0: ds.initial.s.clone(),
            y0: ds.initial.y,
            w0: T::from_u8(ds.initial.w).expect("binary"),
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn d_s(&self) -> usize {
        self.s.ncols()
    }

    pub fn d_x(&self) -> usize {
        self.x.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.len();
        if t == 0 || self.w.len() != t || self.s.nrows() != t || self.x.nrows() != t || self.s0.len() != self.d_s() {
            return input_err("observation sequences have inconsistent shapes");
        }
        Ok(())
    }

    /// `[y, w, s, x]` per time step: the inputs of `f_q`.
    pub fn posterior_inputs(&self) -> Array2<T> {
        let (d_s, d_x) = (self.d_s(), self.d_x());
        let mut out = Array2::zeros((self.len(), 2 + d_s + d_x));
        for t in 0..self.len() {
            let mut row = out.row_mut(t);
            row[0] = self.y[t];
            row[1] = self.w[t];
            for j in 0..d_s {
                row[2 + j] = self.s[[t, j]];
            }
            for j in 0..d_x {
                row[2 + d_s + j] = self.x[[t, j]];
            }
        }
        out
    }

    /// `s_{t−1}` per time step: the inputs of `f_s`.
    pub fn lagged_s(&self) -> Array2<T> {
        let mut out = Array2::zeros(self.s.raw_dim());
        out.row_mut(0).assign(&self.s0);
        for t in 1..self.len() {
            out.row_mut(t).assign(&self.s.row(t - 1));
        }
        out
    }
}

/// Observations plus frozen reparameterization noise `ε_t^l`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompleteDataset<T> {
    /// `(T, L, d_z)`; drawn once, never redrawn.
    pub eps: Array3<T>,
    /// `z_t^l = f_q(y_t, w_t, s_t, x_t) + σ_q ε_t^l`, shape `(T, L, d_z)`.
    pub z: Array3<T>,
}

impl<T: Scalar> CompleteDataset<T> {
    pub fn new(t_len: usize, samples: usize, d_z: usize, seed: u64) -> Self {
        let mut r = rng::stream(seed, &[rng::NOISE]);
        let eps = Array3::from_shape_fn((t_len, samples, d_z), |_| rng::normal::<T, _>(&mut r));
        let z = Array3::zeros(eps.raw_dim());
        CompleteDataset { eps, z }
    }

    pub fn samples(&self) -> usize {
        self.eps.dim().1
    }

    pub fn t_len(&self) -> usize {
        self.eps.dim().0
    }

    pub fn d_z(&self) -> usize {
        self.eps.dim().2
    }

    /// Recomputes `z` from posterior means `m` (`T × d_z`).
    pub fn refresh_from_means(&mut self, means: &Array2<T>, sigma_q: T) {
        let (t_len, samples, d_z) = self.eps.dim();
        for t in 0..t_len {
            for l in 0..samples {
                for k in 0..d_z {
                    self.z[[t, l, k]] = means[[t, k]] + sigma_q * self.eps[[t, l, k]];
                }
            }
        }
    }

    /// Recomputes `z` from the model's current `f_q`.
    pub fn refresh(&mut self, model: &VariationalModel<T>, obs: &Observations<T>) -> Result<()> {
        if let Some(means) = model.posterior_means(obs)? {
            self.refresh_from_means(&means, model.config.noise.q);
        }
        Ok(())
    }
}

/// Fitted heads. Inputs: `f_y: [w, z, s]`, `f_w, f_x: [z, s]`, `f_s: s_{t−1}`,
/// `f_z: z_{t−1}`, `f_q: [y, w, s, x]` (z omitted under [`LatentPrior::Absent`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct VariationalModel<T> {
    pub f_y: RepresenterFunction<T>,
    pub f_w: RepresenterFunction<T>,
    pub f_x: RepresenterFunction<T>,
    pub f_s: RepresenterFunction<T>,
    pub f_z: Option<RepresenterFunction<T>>,
    pub f_q: Option<RepresenterFunction<T>>,
    pub config: FitConfig<T>,
    /// `J` after every outer iteration of the selected restart.
    pub trace: Vec<T>,
}

impl<T: Scalar> VariationalModel<T> {
    pub fn prior(&self) -> LatentPrior {
        self.config.prior
    }

    pub fn d_z(&self) -> usize {
        self.config.effective_latent_dim()
    }

    /// `f_q` at every observed tuple, or `None` without a latent confounder.
    pub fn posterior_means(&self, obs: &Observations<T>) -> Result<Option<Array2<T>>> {
        match &self.f_q {
            Some(fq) => Ok(Some(fq.eval_batch(obs.posterior_inputs().view())?)),
            None => Ok(None),
        }
    }

    /// `f_y(w, z, s)` for one input.
    pub fn outcome(&self, w: T, z: ArrayView1<'_, T>, s: ArrayView1<'_, T>) -> Result<T> {
        let mut u = Vec::with_capacity(1 + z.len() + s.len());
        u.push(w);
        u.extend(z.iter().copied());
        u.extend(s.iter().copied());
        Ok(self.f_y.eval(&u)?[0])
    }

    pub fn posterior_mean(&self, y: T, w: T, s: ArrayView1<'_, T>, x: ArrayView1<'_, T>) -> Result<Option<Array1<T>>> {
        let Some(fq) = &self.f_q else { return Ok(None) };
        let mut u = Vec::with_capacity(2 + s.len() + x.len());
        u.push(y);
        u.push(w);
        u.extend(s.iter().copied());
        u.extend(x.iter().copied());
        fq.eval(&u).map(Some)
    }
}
