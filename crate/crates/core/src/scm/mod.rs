//! Ground-truth structural causal models and the time-series data they emit.
//!
//! Every generator follows the same lag-1 recursion, starting from
//! `z₀ = 0, s₀ = 0`:
//!
//! ```text
//! z_t = f_z(z_{t−1}) + σ_z e_t        s_t = f_s(s_{t−1}) + σ_s o_t
//! x_t = f_x(z_t, s_t) + σ_x r_t       w_t = 1[φ(f_w(z_t, s_t)) ≥ u_t]
//! y_t = f_y(w_t, z_t, s_t) + σ_y v_t
//! ```

mod csv;
mod dataset;
mod illustration;
mod td;

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2};

pub use self::csv::{format_real, header as csv_header, read_csv, write_csv};
pub use dataset::{DatasetMeta, InitialState, TimeSeriesDataset};
pub use illustration::{illustration_true_ate, make_illustration, make_symmetric_linear, IllustrationParams, OutcomeKind};
pub use td::{make_td, TdDepth, TdDims};

pub use crate::scalar::logistic;

use crate::error::{input_err, Error, Result};
use crate::rng::{self, normal, uniform};
use crate::scalar::Scalar;

/// A structural function: reads its input slice and writes its output slice.
pub type StepFn<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScmNoise<T> {
    pub z: T,
    pub s: T,
    pub x: T,
    pub y: T,
}

/// Ground-truth generator.
///
/// Input layouts: `f_z: z`, `f_s: s`, `f_x, f_w: [z, s]`, `f_y: [w, z, s]`.
#[derive(Clone)]
pub struct GroundTruthScm<T> {
    pub name: String,
    pub d_z: usize,
    pub d_s: usize,
    pub d_x: usize,
    pub f_z: StepFn<T>,
    pub f_s: StepFn<T>,
    pub f_x: StepFn<T>,
    pub f_w: StepFn<T>,
    pub f_y: StepFn<T>,
    pub noise: ScmNoise<T>,
    /// Seed the structural functions were drawn from, when they are random.
    pub seed: Option<u64>,
    pub illustration: Option<IllustrationParams>,
}

impl<T> fmt::Debug for GroundTruthScm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroundTruthScm")
            .field("name", &self.name)
            .field("d_z", &self.d_z)
            .field("d_s", &self.d_s)
            .field("d_x", &self.d_x)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> GroundTruthScm<T> {
    pub fn validate(&self) -> Result<()> {
        if self.d_z == 0 || self.d_s == 0 || self.d_x == 0 {
            return input_err("generator dimensions must be at least 1");
        }
        let n = self.noise;
        if [n.z, n.s, n.x, n.y].iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return input_err("noise scales must be finite and non-negative");
        }
        Ok(())
    }

    /// Replaces `f_w` with a constant logit.
    pub fn with_constant_treatment_logit(mut self, logit: T) -> Self {
        self.f_w = Arc::new(move |_, out| out[0] = logit);
        self
    }
}

fn check<T: Scalar>(vals: &[T], head: &'static str, t: usize) -> Result<()> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Generator { head, t })
    }
}

/// Draws a length-`t_len` series.
///
/// Exogenous draws are taken per step in the order `e, o, r, u, v`. The
/// counterfactual `y_cf` reuses the same draws with the treatment flipped.
pub fn simulate<T: Scalar>(model: &GroundTruthScm<T>, t_len: usize, seed: u64) -> Result<TimeSeriesDataset<T>> {
    model.validate()?;
    if t_len == 0 {
        return input_err("series length must be at least 1");
    }
    let (d_z, d_s, d_x) = (model.d_z, model.d_s, model.d_x);
    let mut rng = rng::stream(seed, &[rng::NOISE]);
    let mut z = Array2::<T>::zeros((t_len, d_z));
    let mut s = Array2::<T>::zeros((t_len, d_s));
    let mut x = Array2::<T>::zeros((t_len, d_x));
    let mut y = Array1::<T>::zeros(t_len);
    let mut y_cf = Array1::<T>::zeros(t_len);
    let mut w = vec![0u8; t_len];

    let mut z_prev = vec![T::zero(); d_z];
    let mut s_prev = vec![T::zero(); d_s];
    let mut z_t = vec![T::zero(); d_z];
    let mut s_t = vec![T::zero(); d_s];
    let mut x_t = vec![T::zero(); d_x];
    let mut zs = vec![T::zero(); d_z + d_s];
    let mut wzs = vec![T::zero(); 1 + d_z + d_s];
    let mut scalar = [T::zero()];

    for t in 0..t_len {
        (model.f_z)(&z_prev, &mut z_t);
        for v in z_t.iter_mut() {
            *v += model.noise.z * normal::<T, _>(&mut rng);
        }
        check(&z_t, "f_z", t + 1)?;
        (model.f_s)(&s_prev, &mut s_t);
        for v in s_t.iter_mut() {
            *v += model.noise.s * normal::<T, _>(&mut rng);
        }
        check(&s_t, "f_s", t + 1)?;

        zs[..d_z].copy_from_slice(&z_t);
        zs[d_z..].copy_from_slice(&s_t);
        (model.f_x)(&zs, &mut x_t);
        for v in x_t.iter_mut() {
            *v += model.noise.x * normal::<T, _>(&mut rng);
        }
        check(&x_t, "f_x", t + 1)?;

        (model.f_w)(&zs, &mut scalar);
        check(&scalar, "f_w", t + 1)?;
        let u: T = uniform(&mut rng);
        let w_t = u8::from(logistic(scalar[0]) >= u);

        let v: T = normal(&mut rng);
        wzs[1..].copy_from_slice(&zs);
        for (arm, target) in [(w_t, &mut y), (1 - w_t, &mut y_cf)] {
            wzs[0] = T::from_u8(arm).expect("0 or 1");
            (model.f_y)(&wzs, &mut scalar);
            check(&scalar, "f_y", t + 1)?;
            target[t] = scalar[0] + model.noise.y * v;
        }

        w[t] = w_t;
        z.row_mut(t).assign(&Array1::from(z_t.clone()));
        s.row_mut(t).assign(&Array1::from(s_t.clone()));
        x.row_mut(t).assign(&Array1::from(x_t.clone()));
        z_prev.copy_from_slice(&z_t);
        s_prev.copy_from_slice(&s_t);
    }

    Ok(TimeSeriesDataset {
        y,
        w,
        x,
        s,
        z_true: Some(z),
        y_cf: Some(y_cf),
        initial: InitialState::zeros(d_s),
        meta: DatasetMeta { generator: model.name.clone(), seed: Some(seed), offset: 0 },
    })
}
