//! Regularized kernel logistic regression by Newton's method.

use ndarray::{s, Array1, Array2, Axis};

use super::solve_spd;
use crate::error::{Error, Result};
use crate::scalar::{logistic, xent_logit, Scalar};

/// Fitted coefficients and offset.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticFit<T> {
    pub beta: Array1<T>,
    pub offset: T,
}

/// Minimizer of `weight · Σ_r Xent(w_r, c + (Kβ)_r) + λ βᵀKβ` for a symmetric
/// Gram `K`. The offset `c` is held at `offset` when given, otherwise fitted
/// jointly (unpenalized).
///
/// Starts from `beta0`, takes Newton steps with Armijo backtracking and stops
/// once the largest gradient entry is at most `gtol`, the Newton decrement
/// falls below `1e−12·|J|`, or `max_iter` steps have been taken.
#[allow(clippy::too_many_arguments)]
pub fn logistic_newton<T: Scalar>(
    k: &Array2<T>,
    labels: &Array1<T>,
    offset: Option<T>,
    weight: T,
    lambda: T,
    beta0: Array1<T>,
    max_iter: usize,
    gtol: T,
) -> Result<LogisticFit<T>> {
    let two = T::lit(2.0);
    let n = k.nrows();
    let fit_offset = offset.is_none();
    let objective = |beta: &Array1<T>, c: T| {
        let kb = k.dot(beta);
        let pen: T = beta.iter().zip(kb.iter()).map(|(&b, &v)| b * v).sum();
        let a = kb.mapv(|v| v + c);
        let xent: T = labels.iter().zip(a.iter()).map(|(&w, &ai)| xent_logit(w, ai)).sum();
        (xent * weight + lambda * pen, a)
    };
    let mut beta = beta0;
    let mut c = offset.unwrap_or_else(T::zero);
    let (mut j, mut a) = objective(&beta, c);
    if !j.is_finite() {
        beta.fill(T::zero());
        (j, a) = objective(&beta, c);
    }
    let m = n + usize::from(fit_offset);
    for _ in 0..max_iter {
        let p = a.mapv(logistic);
        let resid = (&p - labels) * weight;
        let r = &resid + &(&beta * (two * lambda));
        let mut grad = Array1::zeros(m);
        grad.slice_mut(s![..n]).assign(&k.dot(&r));
        if fit_offset {
            grad[n] = resid.sum();
        }
        let gmax = grad.iter().map(|g| g.abs()).fold(T::zero(), T::max);
        if gmax <= gtol {
            break;
        }
        let d = p.mapv(|pi| pi * (T::one() - pi) * weight);
        let (step_beta, step_c) = if fit_offset || !(lambda > T::zero()) {
            full_newton_step(k, &d, lambda, &grad, fit_offset)?
        } else {
            (reduced_newton_step(k, &d, lambda, &r)?, T::zero())
        };
        // gᵀΔ evaluated through predictions to avoid cancellation between
        // large entries of Δ.
        let decrease = r.dot(&k.dot(&step_beta)) + resid.sum() * step_c;
        // Newton decrement: the predicted reduction of J by a full step.
        if !(decrease > T::zero()) || decrease <= T::lit(2e-12) * j.abs().max(T::one()) {
            break;
        }
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &beta - &(&step_beta * t);
            let ct = c - step_c * t;
            let (jt, at) = objective(&trial, ct);
            if jt.is_finite() && jt <= j - T::lit(1e-4) * t * decrease {
                let stalled = j - jt <= T::epsilon() * j.abs().max(T::one());
                beta = trial;
                c = ct;
                a = at;
                j = jt;
                accepted = !stalled;
                break;
            }
            t *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    if !j.is_finite() {
        return Err(Error::Fit("logistic objective diverged".into()));
    }
    Ok(LogisticFit { beta, offset: c })
}

/// Newton step on the full (optionally offset-augmented) Hessian
/// `K D K + 2λK`.
fn full_newton_step<T: Scalar>(k: &Array2<T>, d: &Array1<T>, lambda: T, grad: &Array1<T>, fit_offset: bool) -> Result<(Array1<T>, T)> {
    let n = k.nrows();
    let m = grad.len();
    let kd = k * &d.view().insert_axis(Axis(0));
    let mut hess = Array2::zeros((m, m));
    {
        let mut top = hess.slice_mut(s![..n, ..n]);
        top.assign(&kd.dot(k));
        top.scaled_add(T::lit(2.0) * lambda, k);
    }
    if fit_offset {
        let kd1 = kd.sum_axis(Axis(1));
        hess.slice_mut(s![..n, n]).assign(&kd1);
        hess.slice_mut(s![n, ..n]).assign(&kd1);
        hess[[n, n]] = d.sum();
    }
    // Light damping keeps the step bounded along near-null directions of K,
    // where it would otherwise be amplified without changing predictions.
    let mu = T::lit(1e-9) * (0..m).map(|i| hess[[i, i]]).sum::<T>() / T::from_usize_lossy(m);
    for i in 0..m {
        hess[[i, i]] += mu;
    }
    let step = solve_spd(hess.view(), grad.view().insert_axis(Axis(1)))?.remove_axis(Axis(1));
    let step_c = if fit_offset { step[n] } else { T::zero() };
    Ok((step.slice(s![..n]).to_owned(), step_c))
}

/// Newton step with the `K` factor cancelled: `(DK + 2λI) Δ = r`, solved in
/// the symmetric form `(2λI + D^½ K D^½) v = D^½ K r`,
/// `Δ = (r − D^½ v) / 2λ`.
fn reduced_newton_step<T: Scalar>(k: &Array2<T>, d: &Array1<T>, lambda: T, r: &Array1<T>) -> Result<Array1<T>> {
    let two_l = T::lit(2.0) * lambda;
    let sq = d.mapv(|v| v.sqrt());
    let mut b = k * &sq.view().insert_axis(Axis(0)) * &sq.view().insert_axis(Axis(1));
    for i in 0..b.nrows() {
        b[[i, i]] += two_l;
    }
    let rhs = k.dot(r) * &sq;
    let v = solve_spd(b.view(), rhs.view().insert_axis(Axis(1)))?.remove_axis(Axis(1));
    Ok((r - &(&sq * &v)) / two_l)
}
