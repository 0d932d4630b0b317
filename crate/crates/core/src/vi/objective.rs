//! Empirical risk and the regularized objective `J`.

use ndarray::{Array2, ArrayView1};

use super::{CompleteDataset, Design, LatentPrior, Observations, VariationalModel};
use crate::error::{input_err, Result};
use crate::scalar::{xent_logit, Scalar};

/// `KL(N(μ_q, σ_q² I) ‖ N(μ_p, σ_p² I))`.
pub fn kl_gaussian_iso<T: Scalar>(mu_q: ArrayView1<'_, T>, sigma_q: T, mu_p: ArrayView1<'_, T>, sigma_p: T) -> Result<T> {
    if !(sigma_q > T::zero() && sigma_p > T::zero()) {
        return input_err("KL needs positive standard deviations");
    }
    if mu_q.len() != mu_p.len() {
        return input_err("KL means differ in dimension");
    }
    let d = T::from_usize_lossy(mu_q.len());
    let dist: T = mu_q.iter().zip(mu_p.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok(kl_parts(dist, d, sigma_q, sigma_p))
}

fn kl_parts<T: Scalar>(dist_sq: T, d: T, sigma_q: T, sigma_p: T) -> T {
    let two = T::lit(2.0);
    let vp = sigma_p * sigma_p;
    dist_sq / (two * vp) + d * sigma_q * sigma_q / (two * vp) + d * (sigma_p / sigma_q).ln() - d / two
}

/// Every head evaluated on a design.
#[derive(Clone, Debug)]
pub(crate) struct Predictions<T> {
    pub y: Array2<T>,
    pub w: Array2<T>,
    pub x: Array2<T>,
    pub s: Array2<T>,
    /// Posterior means `f_q`, `T × d_z`.
    pub m: Option<Array2<T>>,
    /// Prior means `f_z(z_{t−1})`, `TL × d_z`.
    pub z: Option<Array2<T>>,
}

pub(crate) fn predict<T: Scalar>(model: &VariationalModel<T>, d: &Design<T>) -> Result<Predictions<T>> {
    let m = match &model.f_q {
        Some(fq) => Some(fq.eval_batch(d.u_q.view())?),
        None => None,
    };
    let z = match (&model.f_z, &d.u_zprev) {
        (Some(fz), Some(u)) => Some(fz.eval_batch(u.view())?),
        _ => None,
    };
    Ok(Predictions {
        y: model.f_y.eval_batch(d.u_y.view())?,
        w: model.f_w.eval_batch(d.u_zs.view())?,
        x: model.f_x.eval_batch(d.u_zs.view())?,
        s: model.f_s.eval_batch(d.u_s.view())?,
        m,
        z,
    })
}

pub(crate) fn risk_from<T: Scalar>(model: &VariationalModel<T>, obs: &Observations<T>, d: &Design<T>, p: &Predictions<T>) -> T {
    let cfg = &model.config;
    let two = T::lit(2.0);
    let (t_len, samples) = (d.t_len, d.samples);
    let inv_l = T::one() / T::from_usize_lossy(samples);
    let (vy, vx, vs) = (cfg.noise.y * cfg.noise.y, cfg.noise.x * cfg.noise.x, cfg.noise.s * cfg.noise.s);
    let mut per_sample = T::zero();
    for l in 0..samples {
        for t in 0..t_len {
            let r = l * t_len + t;
            let ry = obs.y[t] - p.y[[r, 0]];
            per_sample += ry * ry / (two * vy);
            per_sample += xent_logit(obs.w[t], p.w[[r, 0]]);
            let mut sx = T::zero();
            for k in 0..obs.d_x() {
                let e = obs.x[[t, k]] - p.x[[r, k]];
                sx += e * e;
            }
            per_sample += sx / (two * vx);
        }
    }
    let mut kl = T::zero();
    if let Some(m) = &p.m {
        let d_z = T::from_usize_lossy(d.d_z);
        let sigma_z = cfg.noise.z;
        for l in 0..samples {
            for t in 0..t_len {
                let r = l * t_len + t;
                let mut dist = T::zero();
                for k in 0..d.d_z {
                    let mu_p = match (&p.z, cfg.prior) {
                        (Some(fz), LatentPrior::Markov) => fz[[r, k]],
                        _ => T::zero(),
                    };
                    let e = m[[t, k]] - mu_p;
                    dist += e * e;
                }
                kl += kl_parts(dist, d_z, cfg.noise.q, sigma_z);
            }
        }
    }
    let mut ss = T::zero();
    for t in 0..t_len {
        for j in 0..obs.d_s() {
            let e = obs.s[[t, j]] - p.s[[t, j]];
            ss += e * e;
        }
    }
    (per_sample + kl) * inv_l + ss / (two * vs)
}

/// `L̂`: the Monte-Carlo estimate of the negative evidence lower bound on the
/// complete dataset (the `s`-chain term is sample-free and not averaged).
pub fn empirical_risk<T: Scalar>(model: &VariationalModel<T>, obs: &Observations<T>, cd: &CompleteDataset<T>) -> Result<T> {
    let d = Design::new(obs, cd, model.prior());
    let p = predict(model, &d)?;
    Ok(risk_from(model, obs, &d, &p))
}

/// `Σ_i λ_i ‖f_i‖²_H`.
pub fn penalty<T: Scalar>(model: &VariationalModel<T>) -> T {
    let lam = &model.config.lambda;
    let mut total = lam.y * model.f_y.rkhs_norm_sq()
        + lam.w * model.f_w.rkhs_norm_sq()
        + lam.x * model.f_x.rkhs_norm_sq()
        + lam.s * model.f_s.rkhs_norm_sq();
    if let Some(fz) = &model.f_z {
        total += lam.z * fz.rkhs_norm_sq();
    }
    if let Some(fq) = &model.f_q {
        total += lam.q * fq.rkhs_norm_sq();
    }
    total
}

/// `J = L̂ + Σ_i λ_i ‖f_i‖²`. `cd.z` must be current with respect to `f_q`.
pub fn objective_j<T: Scalar>(model: &VariationalModel<T>, obs: &Observations<T>, cd: &CompleteDataset<T>) -> Result<T> {
    Ok(empirical_risk(model, obs, cd)? + penalty(model))
}
