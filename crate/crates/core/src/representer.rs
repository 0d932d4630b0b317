//! Finite kernel expansions `f(u) = c + Σ_j κ(u, ν_j) β_j`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result};
use crate::kernel::{gram, gram_sym, sq_dist, KernelSpec};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RepresenterFunction<T> {
    pub spec: KernelSpec<T>,
    /// One anchor input per row.
    pub anchors: Array2<T>,
    /// One coefficient row per anchor, one column per output dimension.
    pub beta: Array2<T>,
    /// Constant added to every output (target mean removed before solving).
    pub offset: Array1<T>,
}

impl<T: Scalar> RepresenterFunction<T> {
    pub fn new(spec: KernelSpec<T>, anchors: Array2<T>, beta: Array2<T>, offset: Array1<T>) -> Result<Self> {
        spec.validate()?;
        if anchors.nrows() == 0 {
            return input_err("representer function needs at least one anchor");
        }
        if beta.nrows() != anchors.nrows() {
            return input_err(format!("{} coefficient rows for {} anchors", beta.nrows(), anchors.nrows()));
        }
        if offset.len() != beta.ncols() {
            return input_err(format!("offset has {} entries, expected {}", offset.len(), beta.ncols()));
        }
        Ok(RepresenterFunction { spec, anchors, beta, offset })
    }

    /// The zero function over the given anchors.
    pub fn zeros(spec: KernelSpec<T>, anchors: Array2<T>, d_out: usize) -> Result<Self> {
        let n = anchors.nrows();
        Self::new(spec, anchors, Array2::zeros((n, d_out)), Array1::zeros(d_out))
    }

    pub fn d_in(&self) -> usize {
        self.anchors.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.beta.ncols()
    }

    pub fn n_anchors(&self) -> usize {
        self.anchors.nrows()
    }

    pub fn eval(&self, u: &[T]) -> Result<Array1<T>> {
        if u.len() != self.d_in() {
            return input_err(format!("input has dimension {}, expected {}", u.len(), self.d_in()));
        }
        let mut out = self.offset.clone();
        self.eval_into(u, out.as_slice_mut().expect("contiguous"));
        Ok(out)
    }

    /// Adds `Σ_j κ(u, ν_j) β_j` to `out`; `u` must already have the anchor dimension.
    pub(crate) fn eval_into(&self, u: &[T], out: &mut [T]) {
        for (nu, b) in self.anchors.outer_iter().zip(self.beta.outer_iter()) {
            let k = self.spec.eval_sq(sq_dist(u, nu.as_slice().expect("standard layout")));
            for (o, &bj) in out.iter_mut().zip(b.iter()) {
                *o += k * bj;
            }
        }
    }

    /// Evaluates every row of `inputs`.
    pub fn eval_batch(&self, inputs: ArrayView2<'_, T>) -> Result<Array2<T>> {
        let k = gram(&self.spec, inputs, self.anchors.view())?;
        Ok(self.eval_with_gram(&k))
    }

    /// Evaluates from a precomputed cross-Gram against the anchors.
    pub fn eval_with_gram(&self, cross: &Array2<T>) -> Array2<T> {
        let mut out = cross.dot(&self.beta);
        out += &self.offset.view().insert_axis(Axis(0));
        out
    }

    /// Jacobian `∂f/∂u` at `u` as a `d_in × d_out` matrix.
    pub fn input_jacobian(&self, u: &[T], out: &mut Array2<T>) {
        out.fill(T::zero());
        let d_in = self.d_in();
        for (nu, b) in self.anchors.outer_iter().zip(self.beta.outer_iter()) {
            let nu = nu.as_slice().expect("standard layout");
            let g = self.spec.grad_factor_sq(sq_dist(u, nu));
            if g == T::zero() {
                continue;
            }
            for i in 0..d_in {
                let gi = g * (u[i] - nu[i]);
                for (o, &bj) in out.row_mut(i).iter_mut().zip(b.iter()) {
                    *o += gi * bj;
                }
            }
        }
    }

    pub fn anchor_gram(&self) -> Array2<T> {
        gram_sym(&self.spec, self.anchors.view()).expect("anchors are nonempty")
    }

    /// `‖f‖² = tr(βᵀ K β)` given the anchor Gram `K`.
    pub fn rkhs_norm_sq_with(&self, anchor_gram: &Array2<T>) -> T {
        let kb = anchor_gram.dot(&self.beta);
        self.beta.iter().zip(kb.iter()).map(|(&a, &b)| a * b).sum()
    }

    pub fn rkhs_norm_sq(&self) -> T {
        self.rkhs_norm_sq_with(&self.anchor_gram())
    }
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;
    use crate::kernel::KernelFamily;

    fn f() -> RepresenterFunction<f64> {
        let spec = KernelSpec::new(KernelFamily::Rbf, 0.8, 1.3).unwrap();
        RepresenterFunction::new(
            spec,
            array![[0.0, 1.0], [1.0, -0.5], [0.3, 0.3]],
            array![[1.0, 0.0], [-2.0, 0.5], [0.25, 1.0]],
            array![0.1, -0.2],
        )
        .unwrap()
    }

    #[test]
    fn eval_agrees_with_batch() {
        let f = f();
        let pts = array![[0.2, 0.2], [1.5, -1.0]];
        let batch = f.eval_batch(pts.view()).unwrap();
        for (i, p) in pts.outer_iter().enumerate() {
            let single = f.eval(p.as_slice().unwrap()).unwrap();
            for j in 0..2 {
                assert!((single[j] - batch[[i, j]]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let f = f();
        let u = [0.4, 0.1];
        let mut jac = Array2::zeros((2, 2));
        f.input_jacobian(&u, &mut jac);
        let h = 1e-6;
        for i in 0..2 {
            let (mut up, mut um) = (u, u);
            up[i] += h;
            um[i] -= h;
            let fd = (f.eval(&up).unwrap() - f.eval(&um).unwrap()) / (2.0 * h);
            for j in 0..2 {
                assert!((jac[[i, j]] - fd[j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn shape_validation() {
        let spec = KernelSpec::new(KernelFamily::Rbf, 1.0, 1.0).unwrap();
        assert!(RepresenterFunction::new(spec.clone(), array![[0.0]], array![[1.0], [2.0]], array![0.0]).is_err());
        assert!(RepresenterFunction::new(spec.clone(), Array2::zeros((0, 1)), Array2::zeros((0, 1)), array![0.0]).is_err());
        let f = RepresenterFunction::zeros(spec, array![[0.0]], 1).unwrap();
        assert!(f.eval(&[0.0, 1.0]).is_err());
        assert_eq!(f.rkhs_norm_sq(), 0.0);
    }

    #[test]
    fn penalty_is_quadratic_in_beta() {
        let mut g = f();
        let p1 = g.rkhs_norm_sq();
        g.beta *= 2.0;
        assert!((g.rkhs_norm_sq() - 4.0 * p1).abs() < 1e-12 * p1.abs().max(1.0));
    }
}
