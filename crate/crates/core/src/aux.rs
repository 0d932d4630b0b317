//! Auxiliary conditionals `p̃(s|x)`, `p̃(w|s,x)`, `p̃(y|s,x,w)` used to forward
//! sample confounders given the covariate path.
//!
//! Each is a classical representer expansion over lag-augmented inputs:
//! `g_s(s_{t−1}, x_t)`, `g_w(w_{t−1}, s_t, x_t)`, `g_y(y_{t−1}, s_t, x_t, w_t)`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input_err, Error, Result};
use crate::kernel::{gram_sym, logistic_newton, median_heuristic, solve_spd, KernelFamily, KernelSpec};
use crate::representer::RepresenterFunction;
use crate::rng::{normal, uniform};
use crate::scalar::{logistic, Scalar};
use crate::vi::{Observations, VariationalModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxKind {
    SgivenX,
    WgivenSX,
    YgivenSXW,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct AuxConfig<T> {
    pub kernel: KernelFamily,
    pub lengthscale_scale: T,
    /// Ridge / logistic regularizer `δ`, shared by the three heads.
    pub delta: T,
}

impl<T: Scalar> Default for AuxConfig<T> {
    fn default() -> Self {
        AuxConfig { kernel: KernelFamily::Matern32, lengthscale_scale: T::one(), delta: T::one() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AuxHead<T> {
    pub kind: AuxKind,
    pub function: RepresenterFunction<T>,
    /// Residual standard deviation; zero for the treatment head.
    pub noise_scale: T,
    pub delta: T,
}

impl<T: Scalar> AuxHead<T> {
    pub fn predict(&self, u: &[T]) -> Result<Array1<T>> {
        self.function.eval(u)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AuxHeads<T> {
    pub s: AuxHead<T>,
    pub w: AuxHead<T>,
    pub y: AuxHead<T>,
}

/// Lag-augmented inputs of one head, one row per time step.
pub fn aux_inputs<T: Scalar>(kind: AuxKind, obs: &Observations<T>) -> Array2<T> {
    let (t_len, d_s, d_x) = (obs.len(), obs.d_s(), obs.d_x());
    let width = match kind {
        AuxKind::SgivenX => d_s + d_x,
        AuxKind::WgivenSX => 1 + d_s + d_x,
        AuxKind::YgivenSXW => 2 + d_s + d_x,
    };
    let mut out = Array2::zeros((t_len, width));
    for t in 0..t_len {
        let mut row = Vec::with_capacity(width);
        match kind {
            AuxKind::SgivenX => {
                row.extend(if t == 0 { obs.s0.to_vec() } else { obs.s.row(t - 1).to_vec() });
                row.extend(obs.x.row(t).iter().copied());
            }
            AuxKind::WgivenSX => {
                row.push(if t == 0 { obs.w0 } else { obs.w[t - 1] });
                row.extend(obs.s.row(t).iter().copied());
                row.extend(obs.x.row(t).iter().copied());
            }
            AuxKind::YgivenSXW => {
                row.push(if t == 0 { obs.y0 } else { obs.y[t - 1] });
                row.extend(obs.s.row(t).iter().copied());
                row.extend(obs.x.row(t).iter().copied());
                row.push(obs.w[t]);
            }
        }
        out.row_mut(t).assign(&Array1::from(row));
    }
    out
}

fn spec_for<T: Scalar>(cfg: &AuxConfig<T>, inputs: ArrayView2<'_, T>) -> Result<KernelSpec<T>> {
    let med = median_heuristic(inputs)?;
    KernelSpec::new(cfg.kernel, med.value * cfg.lengthscale_scale, T::one())
}

fn check_fit_input<T: Scalar>(obs: &Observations<T>, cfg: &AuxConfig<T>) -> Result<()> {
    obs.validate()?;
    if obs.len() < 2 {
        return input_err("auxiliary heads need at least two time steps");
    }
    if !(cfg.delta > T::zero()) || !cfg.delta.is_finite() {
        return input_err("auxiliary regularizer must be positive");
    }
    Ok(())
}

fn ridge<T: Scalar>(kind: AuxKind, obs: &Observations<T>, cfg: &AuxConfig<T>, target: ArrayView2<'_, T>) -> Result<AuxHead<T>> {
    check_fit_input(obs, cfg)?;
    let inputs = aux_inputs(kind, obs);
    let spec = spec_for(cfg, inputs.view())?;
    let k = gram_sym(&spec, inputs.view())?;
    let offset = target.mean_axis(Axis(0)).expect("nonempty");
    let centered = &target - &offset.view().insert_axis(Axis(0));
    let mut system = k.clone();
    for i in 0..system.nrows() {
        system[[i, i]] += cfg.delta;
    }
    let alpha = solve_spd(system.view(), centered.view())?;
    let function = RepresenterFunction::new(spec, inputs, alpha, offset)?;
    let resid = &function.eval_with_gram(&k) - &target;
    let noise_scale = (resid.iter().map(|&r| r * r).sum::<T>() / T::from_usize_lossy(resid.len())).sqrt();
    Ok(AuxHead { kind, function, noise_scale, delta: cfg.delta })
}

/// Kernel ridge regression of `s_t` on `(s_{t−1}, x_t)`.
pub fn fit_s_given_x<T: Scalar>(obs: &Observations<T>, cfg: &AuxConfig<T>) -> Result<AuxHead<T>> {
    ridge(AuxKind::SgivenX, obs, cfg, obs.s.view())
}

/// Kernel ridge regression of `y_t` on `(y_{t−1}, s_t, x_t, w_t)`.
pub fn fit_y_given_sxw<T: Scalar>(obs: &Observations<T>, cfg: &AuxConfig<T>) -> Result<AuxHead<T>> {
    ridge(AuxKind::YgivenSXW, obs, cfg, obs.y.view().insert_axis(Axis(1)))
}

/// Kernel logistic regression of `w_t` on `(w_{t−1}, s_t, x_t)`, minimizing
/// `Σ Xent(w_t, c + g_w) + δ‖g_w‖²` with an unpenalized intercept `c`.
pub fn fit_w_given_sx<T: Scalar>(obs: &Observations<T>, cfg: &AuxConfig<T>) -> Result<AuxHead<T>> {
    check_fit_input(obs, cfg)?;
    let inputs = aux_inputs(AuxKind::WgivenSX, obs);
    let spec = spec_for(cfg, inputs.view())?;
    let k = gram_sym(&spec, inputs.view())?;
    let n = inputs.nrows();
    let fit = logistic_newton(&k, &obs.w, None, T::one(), cfg.delta, Array1::zeros(n), 200, T::lit(1e-7))?;
    let function = RepresenterFunction::new(spec, inputs, fit.beta.insert_axis(Axis(1)), Array1::from_elem(1, fit.offset))?;
    Ok(AuxHead { kind: AuxKind::WgivenSX, function, noise_scale: T::zero(), delta: cfg.delta })
}

pub fn fit_aux_heads<T: Scalar>(obs: &Observations<T>, cfg: &AuxConfig<T>) -> Result<AuxHeads<T>> {
    Ok(AuxHeads { s: fit_s_given_x(obs, cfg)?, w: fit_w_given_sx(obs, cfg)?, y: fit_y_given_sxw(obs, cfg)? })
}

/// Lagged values the chain starts from.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainStart<T> {
    pub y: T,
    pub w: T,
    pub s: Array1<T>,
}

impl<T: Scalar> ChainStart<T> {
    pub fn of(obs: &Observations<T>) -> Self {
        ChainStart { y: obs.y0, w: obs.w0, s: obs.s0.clone() }
    }
}

/// One forward-sampled path of the confounders and factual variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainDraw<T> {
    pub s: Array2<T>,
    pub w: Array1<T>,
    pub y: Array1<T>,
    /// `T × d_z`; zero columns without a latent confounder.
    pub z: Array2<T>,
}

/// Forward-samples `(s, w, y, z)` given the covariate path `x`.
///
/// Per step: `s_t ~ N(g_s, σ̂_s²)`, `w_t ~ Bernoulli(φ(g_w))`,
/// `y_t ~ N(g_y, σ̂_y²)`, `z_t ~ N(f_q(y_t, w_t, s_t, x_t), σ_q² I)`.
/// Draws are taken per step in the order `s, w, y, z`.
pub fn sample_chain<T: Scalar, R: Rng + ?Sized>(
    heads: &AuxHeads<T>,
    model: &VariationalModel<T>,
    x: ArrayView2<'_, T>,
    start: &ChainStart<T>,
    rng: &mut R,
) -> Result<ChainDraw<T>> {
    let t_len = x.nrows();
    let d_s = start.s.len();
    let d_x = x.ncols();
    let d_z = model.d_z();
    if heads.s.function.d_in() != d_s + d_x || heads.w.function.d_in() != 1 + d_s + d_x {
        return input_err("covariate path does not match the fitted heads");
    }
    let mut s = Array2::zeros((t_len, d_s));
    let mut w = Array1::zeros(t_len);
    let mut y = Array1::zeros(t_len);
    let mut z = Array2::zeros((t_len, d_z));
    let mut s_prev = start.s.clone();
    let (mut w_prev, mut y_prev) = (start.w, start.y);
    let mut buf = Vec::with_capacity(2 + d_s + d_x);
    for t in 0..t_len {
        let x_t = x.row(t);
        buf.clear();
        buf.extend(s_prev.iter().copied());
        buf.extend(x_t.iter().copied());
        let mut s_t = heads.s.predict(&buf)?;
        for v in s_t.iter_mut() {
            *v += heads.s.noise_scale * normal::<T, _>(rng);
        }

        buf.clear();
        buf.push(w_prev);
        buf.extend(s_t.iter().copied());
        buf.extend(x_t.iter().copied());
        let p = logistic(heads.w.predict(&buf)?[0]);
        let u: T = uniform(rng);
        let w_t = if p >= u { T::one() } else { T::zero() };

        buf.clear();
        buf.push(y_prev);
        buf.extend(s_t.iter().copied());
        buf.extend(x_t.iter().copied());
        buf.push(w_t);
        let y_t = heads.y.predict(&buf)?[0] + heads.y.noise_scale * normal::<T, _>(rng);

        if let Some(mut m) = model.posterior_mean(y_t, w_t, s_t.view(), x_t)? {
            for v in m.iter_mut() {
                *v += model.config.noise.q * normal::<T, _>(rng);
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Sampling { t });
            }
            z.row_mut(t).assign(&m);
        }
        if !y_t.is_finite() || s_t.iter().any(|v| !v.is_finite()) {
            return Err(Error::Sampling { t });
        }
        s.row_mut(t).assign(&s_t);
        w[t] = w_t;
        y[t] = y_t;
        s_prev = s_t;
        w_prev = w_t;
        y_prev = y_t;
    }
    Ok(ChainDraw { s, w, y, z })
}
