//! Exact coordinate updates: closed forms for the Gaussian heads, Newton for `f_w`.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{CompleteDataset, Design, LatentPrior, Observations, VariationalModel};
use crate::error::{input_err, Result};
use crate::kernel::{gram_sym, logistic_newton, solve_regularized, KernelSpec};
use crate::representer::RepresenterFunction;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedFormHead {
    Y,
    X,
    S,
    Z,
}

/// Minimizer of `J` over one Gaussian head with all other heads held fixed.
///
/// The result is anchored at the head's inputs on the complete dataset, its
/// offset is the target mean, and its coefficients solve the first-order
/// condition `(Σ_l K_lᵀK_l + 2σ²λ L K) β = Σ_l K_lᵀ(ψ − c)`.
pub fn closed_form_update<T: Scalar>(
    head: ClosedFormHead,
    model: &VariationalModel<T>,
    obs: &Observations<T>,
    cd: &CompleteDataset<T>,
) -> Result<RepresenterFunction<T>> {
    let d = Design::new(obs, cd, model.prior());
    closed_form_on(head, model, obs, &d)
}

pub(crate) fn closed_form_on<T: Scalar>(
    head: ClosedFormHead,
    model: &VariationalModel<T>,
    obs: &Observations<T>,
    d: &Design<T>,
) -> Result<RepresenterFunction<T>> {
    let cfg = &model.config;
    let two = T::lit(2.0);
    match head {
        ClosedFormHead::Y => {
            let target = obs.y.view().insert_axis(Axis(1)).to_owned();
            let lam = two * cfg.noise.y * cfg.noise.y * cfg.lambda.y;
            regress(&model.f_y.spec, &d.u_y, d.samples, target.view(), lam)
        }
        ClosedFormHead::X => {
            let lam = two * cfg.noise.x * cfg.noise.x * cfg.lambda.x;
            regress(&model.f_x.spec, &d.u_zs, d.samples, obs.x.view(), lam)
        }
        ClosedFormHead::S => {
            let lam = two * cfg.noise.s * cfg.noise.s * cfg.lambda.s;
            regress(&model.f_s.spec, &d.u_s, 1, obs.s.view(), lam)
        }
        ClosedFormHead::Z => {
            let (Some(fz), Some(fq), Some(u), LatentPrior::Markov) = (&model.f_z, &model.f_q, &d.u_zprev, cfg.prior)
            else {
                return input_err("the transition head exists only under the Markov prior");
            };
            let means = fq.eval_batch(d.u_q.view())?;
            let lam = two * cfg.noise.z * cfg.noise.z * cfg.lambda.z;
            regress(&fz.spec, u, d.samples, means.view(), lam)
        }
    }
}

fn regress<T: Scalar>(
    spec: &KernelSpec<T>,
    inputs: &Array2<T>,
    samples: usize,
    target: ArrayView2<'_, T>,
    lambda_eff: T,
) -> Result<RepresenterFunction<T>> {
    let t_len = target.nrows();
    if inputs.nrows() != t_len * samples {
        return input_err("design rows do not match targets");
    }
    let offset = target.mean_axis(Axis(0)).expect("nonempty targets");
    let centered = &target - &offset.view().insert_axis(Axis(0));
    let k = gram_sym(spec, inputs.view())?;
    let blocks: Vec<_> = (0..samples)
        .map(|l| k.slice(ndarray::s![l * t_len..(l + 1) * t_len, ..]))
        .collect();
    let beta = solve_regularized(&blocks, k.view(), lambda_eff, centered.view())?;
    RepresenterFunction::new(spec.clone(), inputs.clone(), beta, offset)
}

/// Minimizes `J` over `f_w` by Newton's method with Armijo backtracking,
/// warm-started from the current coefficients when the anchors agree.
pub fn newton_beta_w<T: Scalar>(
    model: &VariationalModel<T>,
    obs: &Observations<T>,
    cd: &CompleteDataset<T>,
) -> Result<RepresenterFunction<T>> {
    let d = Design::new(obs, cd, model.prior());
    newton_on(model, obs, &d)
}

pub(crate) fn newton_on<T: Scalar>(model: &VariationalModel<T>, obs: &Observations<T>, d: &Design<T>) -> Result<RepresenterFunction<T>> {
    let cfg = &model.config;
    let n = d.rows();
    let k = gram_sym(&model.f_w.spec, d.u_zs.view())?;
    let labels: Array1<T> = (0..n).map(|r| obs.w[r % d.t_len]).collect();
    let start = if model.f_w.n_anchors() == n { model.f_w.beta.column(0).to_owned() } else { Array1::zeros(n) };
    let weight = T::one() / T::from_usize_lossy(d.samples);
    let beta = logistic_newton(&k, &labels, Some(T::zero()), weight, cfg.lambda.w, start, cfg.w_iters, T::lit(1e-6))?.beta;
    RepresenterFunction::new(model.f_w.spec.clone(), d.u_zs.clone(), beta.insert_axis(Axis(1)), Array1::zeros(1))
}
