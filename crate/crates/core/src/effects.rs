//! Interventional outcomes, effect paths and the evaluation metrics.
//!
//! `E[y_t | do(w = w̄), x]` is estimated by forward sampling `(s, z)` given the
//! covariate path and averaging `f_y(w̄_t, z_t, s_t)`. Both arms of an effect
//! path share every draw, so identical paths give an exactly zero effect and
//! swapping the arms negates it bit for bit.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aux::{sample_chain, AuxHeads, ChainDraw, ChainStart};
use crate::error::{input_err, Error, Result};
use crate::rng::{self, normal};
use crate::scalar::Scalar;
use crate::scm::GroundTruthScm;
use crate::vi::VariationalModel;

/// Something that can draw confounder paths and evaluate outcome means.
pub trait Interventional<T: Scalar> {
    fn draw<R: Rng>(&self, x: ArrayView2<'_, T>, rng: &mut R) -> Result<ChainDraw<T>>;
    /// Mean outcome under treatment `w` at confounders `(z, s)`.
    fn outcome(&self, w: T, z: ArrayView1<'_, T>, s: ArrayView1<'_, T>) -> Result<T>;
}

/// A fitted variational model with its auxiliary chain.
#[derive(Clone, Copy, Debug)]
pub struct FittedChain<'a, T> {
    pub model: &'a VariationalModel<T>,
    pub heads: &'a AuxHeads<T>,
    pub start: &'a ChainStart<T>,
}

impl<T: Scalar> Interventional<T> for FittedChain<'_, T> {
    fn draw<R: Rng>(&self, x: ArrayView2<'_, T>, rng: &mut R) -> Result<ChainDraw<T>> {
        sample_chain(self.heads, self.model, x, self.start, rng)
    }

    fn outcome(&self, w: T, z: ArrayView1<'_, T>, s: ArrayView1<'_, T>) -> Result<T> {
        self.model.outcome(w, z, s)
    }
}

/// The generator itself: confounders drawn from their structural equations
/// (the covariates carry no extra information and only fix the length).
impl<T: Scalar> Interventional<T> for GroundTruthScm<T> {
    fn draw<R: Rng>(&self, x: ArrayView2<'_, T>, rng: &mut R) -> Result<ChainDraw<T>> {
        let t_len = x.nrows();
        let mut z = Array2::zeros((t_len, self.d_z));
        let mut s = Array2::zeros((t_len, self.d_s));
        let mut z_prev = vec![T::zero(); self.d_z];
        let mut s_prev = vec![T::zero(); self.d_s];
        let mut z_t = z_prev.clone();
        let mut s_t = s_prev.clone();
        for t in 0..t_len {
            (self.f_z)(&z_prev, &mut z_t);
            (self.f_s)(&s_prev, &mut s_t);
            z_t.iter_mut().for_each(|v| *v += self.noise.z * normal::<T, _>(rng));
            s_t.iter_mut().for_each(|v| *v += self.noise.s * normal::<T, _>(rng));
            if z_t.iter().chain(&s_t).any(|v| !v.is_finite()) {
                return Err(Error::Sampling { t });
            }
            z.row_mut(t).assign(&ArrayView1::from(&z_t));
            s.row_mut(t).assign(&ArrayView1::from(&s_t));
            z_prev.copy_from_slice(&z_t);
            s_prev.copy_from_slice(&s_t);
        }
        Ok(ChainDraw { s, w: Array1::zeros(t_len), y: Array1::zeros(t_len), z })
    }

    fn outcome(&self, w: T, z: ArrayView1<'_, T>, s: ArrayView1<'_, T>) -> Result<T> {
        let mut u = Vec::with_capacity(1 + z.len() + s.len());
        u.push(w);
        u.extend(z.iter().copied());
        u.extend(s.iter().copied());
        let mut out = [T::zero()];
        (self.f_y)(&u, &mut out);
        Ok(out[0])
    }
}

fn check_path<T: Scalar>(x: ArrayView2<'_, T>, w: &[u8]) -> Result<()> {
    if w.len() != x.nrows() {
        return input_err(format!("treatment path has length {}, covariates have {} rows", w.len(), x.nrows()));
    }
    if w.iter().any(|&v| v > 1) {
        return input_err("treatment paths must be binary");
    }
    Ok(())
}

fn bit<T: Scalar>(w: u8) -> T {
    if w == 1 { T::one() } else { T::zero() }
}

/// Per-sample `f_y` along each path, reduced in sample order.
fn simulate_arms<T: Scalar, M: Interventional<T>>(
    model: &M,
    x: ArrayView2<'_, T>,
    paths: &[&[u8]],
    samples: usize,
    seed: u64,
    mut visit: impl FnMut(usize, &[Array1<T>]),
) -> Result<()> {
    if samples == 0 {
        return input_err("Monte-Carlo sample count must be at least 1");
    }
    for p in paths {
        check_path(x, p)?;
    }
    let t_len = x.nrows();
    let mut outs: Vec<Array1<T>> = vec![Array1::zeros(t_len); paths.len()];
    for m in 0..samples {
        let mut r = rng::stream(seed, &[rng::MONTE_CARLO, m as u64]);
        let draw = model.draw(x, &mut r)?;
        for (out, path) in outs.iter_mut().zip(paths) {
            for t in 0..t_len {
                let v = model.outcome(bit(path[t]), draw.z.row(t), draw.s.row(t))?;
                if !v.is_finite() {
                    return Err(Error::Sampling { t });
                }
                out[t] = v;
            }
        }
        visit(m, &outs);
    }
    Ok(())
}

/// `(1/M) Σ_m f_y(w̄_t, z_t^m, s_t^m)` for every `t`.
pub fn expected_outcome_do<T: Scalar, M: Interventional<T>>(
    model: &M,
    x: ArrayView2<'_, T>,
    w: &[u8],
    samples: usize,
    seed: u64,
) -> Result<Array1<T>> {
    let mut acc = Array1::zeros(x.nrows());
    simulate_arms(model, x, &[w], samples, seed, |_, outs| acc += &outs[0])?;
    Ok(acc / T::from_usize_lossy(samples))
}

/// An effect path with Monte-Carlo standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EffectPath<T> {
    pub ep: Array1<T>,
    /// Standard error of each `EP_t` over the Monte-Carlo draws.
    pub stderr: Array1<T>,
}

/// Standard error of the mean of `v`; zero for fewer than two values.
fn stderr_of<T: Scalar>(v: ArrayView1<'_, T>) -> T {
    let n = v.len();
    if n < 2 {
        return T::zero();
    }
    let nn = T::from_usize_lossy(n);
    let mean = v.sum() / nn;
    let var = v.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (nn - T::one());
    (var / nn).sqrt()
}

/// The path plus the per-sample arm differences (`M × T`).
fn effect_path_draws<T: Scalar, M: Interventional<T>>(
    model: &M,
    x: ArrayView2<'_, T>,
    w1: &[u8],
    w2: &[u8],
    samples: usize,
    seed: u64,
) -> Result<(EffectPath<T>, Array2<T>)> {
    let t_len = x.nrows();
    let mut sum1 = Array1::<T>::zeros(t_len);
    let mut sum2 = Array1::<T>::zeros(t_len);
    let mut diffs = Array2::<T>::zeros((samples, t_len));
    simulate_arms(model, x, &[w1, w2], samples, seed, |m, outs| {
        sum1 += &outs[0];
        sum2 += &outs[1];
        diffs.row_mut(m).assign(&(&outs[0] - &outs[1]));
    })?;
    let mm = T::from_usize_lossy(samples);
    let ep = &sum1 / mm - &sum2 / mm;
    let stderr = Array1::from_iter(diffs.columns().into_iter().map(stderr_of));
    Ok((EffectPath { ep, stderr }, diffs))
}

/// `EP_t = E[y_t | do(w̄₁), x] − E[y_t | do(w̄₂), x]` under common random numbers.
pub fn effect_path<T: Scalar, M: Interventional<T>>(
    model: &M,
    x: ArrayView2<'_, T>,
    w1: &[u8],
    w2: &[u8],
    samples: usize,
    seed: u64,
) -> Result<EffectPath<T>> {
    Ok(effect_path_draws(model, x, w1, w2, samples, seed)?.0)
}

fn check_window(len: usize, t1: usize, t2: usize) -> Result<()> {
    if t1 < 1 || t1 > t2 || t2 > len {
        return input_err(format!("window [{t1}, {t2}] is invalid for a path of length {len}"));
    }
    Ok(())
}

/// Mean of `ep` over the inclusive, 1-based window `[t1, t2]`.
pub fn ate<T: Scalar>(ep: ArrayView1<'_, T>, t1: usize, t2: usize) -> Result<T> {
    check_window(ep.len(), t1, t2)?;
    let w = ep.slice(ndarray::s![t1 - 1..t2]);
    Ok(w.sum() / T::from_usize_lossy(w.len()))
}

pub fn eps_ate<T: Scalar>(true_ate: T, est_ate: T) -> T {
    (true_ate - est_ate).abs()
}

/// Mean squared effect-path error over the inclusive, 1-based window.
pub fn eps_pehe<T: Scalar>(true_ep: ArrayView1<'_, T>, est_ep: ArrayView1<'_, T>, t1: usize, t2: usize) -> Result<T> {
    if true_ep.len() != est_ep.len() {
        return input_err(format!("effect paths differ in length ({} vs {})", true_ep.len(), est_ep.len()));
    }
    check_window(true_ep.len(), t1, t2)?;
    let sq: T = (t1 - 1..t2).map(|t| (true_ep[t] - est_ep[t]) * (true_ep[t] - est_ep[t])).sum();
    Ok(sq / T::from_usize_lossy(t2 - t1 + 1))
}

/// Everything needed to report and reproduce one effect estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CausalEstimate<T> {
    /// Inclusive, 1-based window `[t1, t2]` over the supplied covariate path.
    pub window: (usize, usize),
    pub w1: Vec<u8>,
    pub w2: Vec<u8>,
    /// Effect path over the window.
    pub ep: Array1<T>,
    pub ep_stderr: Array1<T>,
    pub ate: T,
    pub ate_stderr: T,
    pub mc_samples: usize,
    pub seed: u64,
}

/// Effect path and ATE of `w̄₁` versus `w̄₂` over a window.
pub fn estimate<T: Scalar, M: Interventional<T>>(
    model: &M,
    x: ArrayView2<'_, T>,
    w1: &[u8],
    w2: &[u8],
    window: (usize, usize),
    samples: usize,
    seed: u64,
) -> Result<CausalEstimate<T>> {
    let (t1, t2) = window;
    check_window(x.nrows(), t1, t2)?;
    let (path, diffs) = effect_path_draws(model, x, w1, w2, samples, seed)?;
    let window_means: Array1<T> = diffs
        .rows()
        .into_iter()
        .map(|r| r.slice(ndarray::s![t1 - 1..t2]).sum() / T::from_usize_lossy(t2 - t1 + 1))
        .collect();
    Ok(CausalEstimate {
        window,
        w1: w1.to_vec(),
        w2: w2.to_vec(),
        ate: ate(path.ep.view(), t1, t2)?,
        ate_stderr: stderr_of(window_means.view()),
        ep: path.ep.slice(ndarray::s![t1 - 1..t2]).to_owned(),
        ep_stderr: path.stderr.slice(ndarray::s![t1 - 1..t2]).to_owned(),
        mc_samples: samples,
        seed,
    })
}

#[cfg(test)]
mod tests;
