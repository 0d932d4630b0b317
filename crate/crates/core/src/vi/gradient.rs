//! Gradients of `J` with respect to the coefficients of `f_w` and `f_q`.

use ndarray::{Array1, Array2, Axis};

use super::objective::predict;
use super::{CompleteDataset, Design, LatentPrior, Observations, VariationalModel};
use crate::error::{input_err, Result};
use crate::kernel::gram;
use crate::scalar::{logistic, Scalar};

/// `∂J/∂β^w = (1/L) Kᵀ(φ(f_w) − w) + 2λ_w K_ν β^w`.
pub fn grad_beta_w<T: Scalar>(model: &VariationalModel<T>, obs: &Observations<T>, cd: &CompleteDataset<T>) -> Result<Array2<T>> {
    let d = Design::new(obs, cd, model.prior());
    let fw = &model.f_w;
    let cross = gram(&fw.spec, d.u_zs.view(), fw.anchors.view())?;
    let a = fw.eval_with_gram(&cross);
    let inv_l = T::one() / T::from_usize_lossy(d.samples);
    let resid: Array1<T> = (0..d.rows()).map(|r| (logistic(a[[r, 0]]) - obs.w[r % d.t_len]) * inv_l).collect();
    let mut g = cross.t().dot(&resid).insert_axis(Axis(1));
    g.scaled_add(T::lit(2.0) * model.config.lambda.w, &fw.anchor_gram().dot(&fw.beta));
    Ok(g)
}

/// `∂J/∂β^q`, differentiating through the reparameterized draws
/// `z_t^l = f_q(o_t) + σ_q ε_t^l` into every head that consumes `z`, and
/// through the posterior mean inside the KL term. The other heads' anchors
/// are held fixed.
pub fn grad_beta_q<T: Scalar>(model: &VariationalModel<T>, obs: &Observations<T>, cd: &CompleteDataset<T>) -> Result<Array2<T>> {
    let Some(fq) = &model.f_q else {
        return input_err("model has no posterior head");
    };
    let gz = grad_means_q(model, obs, cd)?;
    let d = Design::new(obs, cd, model.prior());
    let cross = gram(&fq.spec, d.u_q.view(), fq.anchors.view())?;
    let mut g = cross.t().dot(&gz);
    g.scaled_add(T::lit(2.0) * model.config.lambda.q, &fq.anchor_gram().dot(&fq.beta));
    Ok(g)
}

/// `∂J/∂m` for the posterior means `m_t = f_q(o_t)`, without the `f_q`
/// penalty. `T × d_z`.
pub(crate) fn grad_means_q<T: Scalar>(model: &VariationalModel<T>, obs: &Observations<T>, cd: &CompleteDataset<T>) -> Result<Array2<T>> {
    if model.f_q.is_none() {
        return input_err("model has no posterior head");
    }
    let cfg = &model.config;
    let d = Design::new(obs, cd, model.prior());
    let p = predict(model, &d)?;
    let (t_len, samples, d_z) = (d.t_len, d.samples, d.d_z);
    let d_s = obs.d_s();
    let d_x = obs.d_x();
    let inv_l = T::one() / T::from_usize_lossy(samples);
    let vy = cfg.noise.y * cfg.noise.y;
    let vx = cfg.noise.x * cfg.noise.x;
    let vz = cfg.noise.z * cfg.noise.z;

    // dJ/dz_t summed over samples, and dJ/dm_t through the KL mean term.
    let mut gz = Array2::<T>::zeros((t_len, d_z));
    let mut jy = Array2::zeros((1 + d_z + d_s, 1));
    let mut jw = Array2::zeros((d_z + d_s, 1));
    let mut jx = Array2::zeros((d_z + d_s, d_x));
    let mut jz = Array2::zeros((d_z, d_z));
    let m = p.m.as_ref().expect("posterior head present");
    for l in 0..samples {
        for t in 0..t_len {
            let r = l * t_len + t;
            let cy = (p.y[[r, 0]] - obs.y[t]) / vy * inv_l;
            model.f_y.input_jacobian(d.u_y.row(r).as_slice().expect("contiguous"), &mut jy);
            let cw = (logistic(p.w[[r, 0]]) - obs.w[t]) * inv_l;
            let u_zs = d.u_zs.row(r);
            let u_zs = u_zs.as_slice().expect("contiguous");
            model.f_w.input_jacobian(u_zs, &mut jw);
            model.f_x.input_jacobian(u_zs, &mut jx);
            for k in 0..d_z {
                let mut g = cy * jy[[1 + k, 0]] + cw * jw[[k, 0]];
                for j in 0..d_x {
                    g += (p.x[[r, j]] - obs.x[[t, j]]) / vx * inv_l * jx[[k, j]];
                }
                gz[[t, k]] += g;
            }
            if cfg.prior == LatentPrior::Markov && t > 0 {
                let (Some(fz), Some(pz), Some(u)) = (&model.f_z, &p.z, &d.u_zprev) else {
                    return input_err("Markov model without a transition head");
                };
                fz.input_jacobian(u.row(r).as_slice().expect("contiguous"), &mut jz);
                for i in 0..d_z {
                    let mut g = T::zero();
                    for k in 0..d_z {
                        g += jz[[i, k]] * (m[[t, k]] - pz[[r, k]]);
                    }
                    gz[[t - 1, i]] -= g / vz * inv_l;
                }
            }
        }
    }
    for l in 0..samples {
        for t in 0..t_len {
            let r = l * t_len + t;
            for k in 0..d_z {
                let mu_p = match (&p.z, cfg.prior) {
                    (Some(pz), LatentPrior::Markov) => pz[[r, k]],
                    _ => T::zero(),
                };
                gz[[t, k]] += (m[[t, k]] - mu_p) / vz * inv_l;
            }
        }
    }
    Ok(gz)
}
