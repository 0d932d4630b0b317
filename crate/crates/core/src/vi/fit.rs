//! Alternating optimization with random restarts.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::objective::{penalty, predict, risk_from, Predictions};
use super::update::{closed_form_on, newton_on};
use super::gradient::grad_means_q;
use super::{ClosedFormHead, CompleteDataset, Design, FitConfig, LatentPrior, Observations, VariationalModel};
use crate::error::{Error, Result};
use crate::kernel::{median_heuristic, KernelSpec};
use crate::representer::RepresenterFunction;
use crate::rng;
use crate::scalar::Scalar;

/// Inputs beyond this many rows are subsampled (evenly strided) before the
/// median heuristic.
const MEDIAN_ROWS: usize = 1000;
const MAX_HALVINGS: usize = 30;

fn spec_for<T: Scalar>(cfg: &FitConfig<T>, inputs: ArrayView2<'_, T>) -> Result<KernelSpec<T>> {
    let n = inputs.nrows();
    let med = if n > MEDIAN_ROWS {
        let stride = n.div_ceil(MEDIAN_ROWS);
        median_heuristic(inputs.slice(ndarray::s![..;stride, ..]))?
    } else if n >= 2 {
        median_heuristic(inputs)?
    } else {
        return KernelSpec::new(cfg.kernel, cfg.lengthscale_scale, T::one());
    };
    KernelSpec::new(cfg.kernel, med.value * cfg.lengthscale_scale, T::one())
}

fn j_on<T: Scalar>(model: &VariationalModel<T>, obs: &Observations<T>, d: &Design<T>) -> Result<T> {
    let p = predict(model, d)?;
    Ok(risk_from(model, obs, d, &p) + penalty(model))
}

/// Re-anchors the `z`-dependent heads at the current draws and minimizes `J`
/// over each of them in turn.
fn update_heads<T: Scalar>(model: &mut VariationalModel<T>, obs: &Observations<T>, cd: &CompleteDataset<T>) -> Result<T> {
    let d = Design::new(obs, cd, model.prior());
    model.f_y = closed_form_on(ClosedFormHead::Y, model, obs, &d)?;
    model.f_x = closed_form_on(ClosedFormHead::X, model, obs, &d)?;
    if model.prior() == LatentPrior::Markov {
        model.f_z = Some(closed_form_on(ClosedFormHead::Z, model, obs, &d)?);
    }
    model.f_w = newton_on(model, obs, &d)?;
    j_on(model, obs, &d)
}

/// Backtracked steps on `β^q` along the functional gradient `∂J/∂m + 2λ_q β^q`
/// (the `β`-gradient without its leading `K_q`); `lr` persists across calls,
/// growing after accepted steps and shrinking on rejected ones.
fn step_posterior<T: Scalar>(
    model: &mut VariationalModel<T>,
    obs: &Observations<T>,
    cd: &mut CompleteDataset<T>,
    j: T,
    lr: &mut T,
) -> Result<T> {
    let cfg = model.config.clone();
    let t_len = T::from_usize_lossy(obs.len());
    let lr_max = cfg.q_learning_rate * T::lit(1e3);
    // Only f_q moves here: the other heads' penalties, the f_s fit and the
    // f_q Gram stay fixed across trials.
    let k_q = model.f_q.as_ref().expect("posterior head present").anchor_gram();
    let mut fixed = model.clone();
    fixed.f_q = None;
    let fixed_penalty = penalty(&fixed);
    let s_pred = model.f_s.eval_batch(obs.lagged_s().view())?;
    let trial_j = |m: &VariationalModel<T>, cd: &CompleteDataset<T>, means: Array2<T>| -> Result<T> {
        let fq = m.f_q.as_ref().expect("posterior head present");
        let d = Design::new(obs, cd, cfg.prior);
        let z = match (&m.f_z, &d.u_zprev) {
            (Some(fz), Some(u)) => Some(fz.eval_batch(u.view())?),
            _ => None,
        };
        let p = Predictions {
            y: m.f_y.eval_batch(d.u_y.view())?,
            w: m.f_w.eval_batch(d.u_zs.view())?,
            x: m.f_x.eval_batch(d.u_zs.view())?,
            s: s_pred.clone(),
            m: Some(means),
            z,
        };
        Ok(risk_from(m, obs, &d, &p) + fixed_penalty + cfg.lambda.q * fq.rkhs_norm_sq_with(&k_q))
    };
    let mut j = j;
    for _ in 0..cfg.q_steps {
        let fq = model.f_q.as_ref().expect("posterior head present");
        let mut g = grad_means_q(model, obs, cd)?;
        g.scaled_add(T::lit(2.0) * cfg.lambda.q, &fq.beta);
        let gsq: T = (&g * &k_q.dot(&g)).sum();
        if !(gsq > T::zero()) {
            break;
        }
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let step = *lr / t_len;
            let mut trial = model.clone();
            let fq = trial.f_q.as_mut().expect("posterior head present");
            fq.beta.scaled_add(-step, &g);
            let mut means = k_q.dot(&fq.beta);
            means += &fq.offset.view().insert_axis(Axis(0));
            let mut cd_trial = cd.clone();
            cd_trial.refresh_from_means(&means, cfg.noise.q);
            let jt = trial_j(&trial, &cd_trial, means)?;
            if jt.is_finite() && jt <= j - T::lit(1e-4) * step * gsq {
                *model = trial;
                *cd = cd_trial;
                j = jt;
                *lr = (*lr * T::lit(2.0)).min(lr_max);
                accepted = true;
                break;
            }
            *lr *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    Ok(j)
}

fn initial_model<T: Scalar>(obs: &Observations<T>, cfg: &FitConfig<T>, restart: usize, cd: &mut CompleteDataset<T>) -> Result<VariationalModel<T>> {
    let d_z = cfg.effective_latent_dim();
    let u_q = obs.posterior_inputs();
    let f_q = if cfg.prior == LatentPrior::Absent {
        None
    } else {
        let spec = spec_for(cfg, u_q.view())?;
        let mut r = rng::stream(cfg.seed, &[rng::RESTART, restart as u64]);
        let beta = Array2::from_shape_fn((obs.len(), d_z), |_| rng::normal::<T, _>(&mut r));
        let mut fq = RepresenterFunction::new(spec, u_q, beta, Array1::zeros(d_z))?;
        // Scale so the initial means have standard deviation near q_init_scale.
        let k = fq.anchor_gram();
        let row_sq = k.iter().map(|&v| v * v).sum::<T>() / T::from_usize_lossy(obs.len());
        fq.beta *= cfg.q_init_scale / row_sq.sqrt();
        let means = fq.eval_batch(fq.anchors.view())?;
        cd.refresh_from_means(&means, cfg.noise.q);
        Some(fq)
    };
    let d = Design::new(obs, cd, cfg.prior);
    let f_z = match &d.u_zprev {
        Some(u) => Some(RepresenterFunction::zeros(spec_for(cfg, u.view())?, u.clone(), d_z)?),
        None => None,
    };
    let zs_spec = spec_for(cfg, d.u_zs.view())?;
    let mut model = VariationalModel {
        f_y: RepresenterFunction::zeros(spec_for(cfg, d.u_y.view())?, d.u_y.clone(), 1)?,
        f_w: RepresenterFunction::zeros(zs_spec.clone(), d.u_zs.clone(), 1)?,
        f_x: RepresenterFunction::zeros(zs_spec, d.u_zs.clone(), obs.d_x())?,
        f_s: RepresenterFunction::zeros(spec_for(cfg, d.u_s.view())?, d.u_s.clone(), obs.d_s())?,
        f_z,
        f_q,
        config: cfg.clone(),
        trace: Vec::new(),
    };
    model.f_s = closed_form_on(ClosedFormHead::S, &model, obs, &d)?;
    Ok(model)
}

fn run_restart<T: Scalar>(obs: &Observations<T>, cfg: &FitConfig<T>, restart: usize) -> Result<(VariationalModel<T>, T)> {
    let mut cd = CompleteDataset::new(obs.len(), cfg.effective_samples(), cfg.effective_latent_dim(), cfg.seed);
    let mut model = initial_model(obs, cfg, restart, &mut cd)?;
    let mut j = update_heads(&mut model, obs, &cd)?;
    if cfg.prior == LatentPrior::Absent {
        model.trace.push(j);
        return Ok((model, j));
    }
    let mut lr = cfg.q_learning_rate;
    let mut prev = j;
    for _ in 0..cfg.outer_iters {
        step_posterior(&mut model, obs, &mut cd, j, &mut lr)?;
        j = update_heads(&mut model, obs, &cd)?;
        if !j.is_finite() {
            return Err(Error::Fit("objective became non-finite".into()));
        }
        model.trace.push(j);
        if (prev - j).abs() <= cfg.tol * j.abs().max(T::one()) {
            break;
        }
        prev = j;
    }
    Ok((model, j))
}

/// Fits the estimator, keeping the restart with the lowest final `J`.
pub fn fit<T: Scalar>(obs: &Observations<T>, cfg: &FitConfig<T>) -> Result<VariationalModel<T>> {
    cfg.validate()?;
    obs.validate()?;
    if obs.len() < 2 {
        return Err(Error::Input("need at least two time steps to fit".into()));
    }
    let restarts = if cfg.prior == LatentPrior::Absent { 1 } else { cfg.restarts };
    let mut best: Option<(VariationalModel<T>, T)> = None;
    let mut last_err = None;
    for k in 0..restarts {
        match run_restart(obs, cfg, k) {
            Ok((m, j)) if j.is_finite() => {
                if best.as_ref().is_none_or(|(_, bj)| j < *bj) {
                    best = Some((m, j));
                }
            }
            Ok(_) => last_err = Some(Error::Fit("objective became non-finite".into())),
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((m, _)) => Ok(m),
        None => Err(Error::Fit(format!(
            "all {restarts} restarts failed; last error: {}",
            last_err.map(|e| e.to_string()).unwrap_or_default()
        ))),
    }
}

/// Posterior means at the training tuples, `T × d_z`.
pub fn training_means<T: Scalar>(model: &VariationalModel<T>) -> Option<Array2<T>> {
    let fq = model.f_q.as_ref()?;
    let k = fq.anchor_gram();
    let mut m = k.dot(&fq.beta);
    m += &fq.offset.view().insert_axis(Axis(0));
    Some(m)
}
