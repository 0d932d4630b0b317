use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2};

use crate::error::{input_err, Error, Result};
use crate::scalar::Scalar;

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;
const REFINEMENT_STEPS: usize = 2;

/// Dot product with eight independent accumulators, so the reduction can
/// pipeline.
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// Lower-triangular factor `L` with `A = L Lᵀ`, stored row-major.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    n: usize,
    factor: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factorizes a symmetric matrix. Returns the failing pivot on breakdown.
    pub fn factor(a: ArrayView2<'_, T>) -> std::result::Result<Self, (usize, T)> {
        let n = a.nrows();
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                let s = a[[i, j]] - dot(ri, rj);
                if i == j {
                    if !(s > T::zero()) || !s.is_finite() {
                        return Err((i, s));
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Cholesky { n, factor: l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A X = B` for every column of `b`.
    pub fn solve(&self, b: ArrayView2<'_, T>) -> Array2<T> {
        let n = self.n;
        let l = &self.factor;
        let mut cols = b.t().as_standard_layout().into_owned();
        for mut col in cols.rows_mut() {
            let x = col.as_slice_mut().expect("standard layout");
            for i in 0..n {
                x[i] = (x[i] - dot(&l[i * n..i * n + i], &x[..i])) / l[i * n + i];
            }
            for i in (0..n).rev() {
                let mut s = x[i];
                for k in (i + 1)..n {
                    s -= l[k * n + i] * x[k];
                }
                x[i] = s / l[i * n + i];
            }
        }
        cols.t().as_standard_layout().into_owned()
    }

    /// `ln det A`.
    pub fn log_det(&self) -> T {
        (0..self.n).map(|i| self.factor[i * self.n + i].ln()).sum::<T>() * T::lit(2.0)
    }
}

/// Solves `A X = B` for symmetric positive semi-definite `A`.
///
/// The diagonal is loaded with `ε · tr(A)/n`, starting at `ε = 1e−10` and
/// escalating tenfold up to `1e−4`; the solution is then polished with a
/// couple of iterative-refinement steps against the unloaded `A`.
pub fn solve_spd<T: Scalar>(a: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> Result<Array2<T>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return input_err(format!(
            "solve: system is {}x{} but right-hand side has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        ));
    }
    if n == 0 {
        return input_err("solve: empty system");
    }
    let trace: T = (0..n).map(|i| a[[i, i]]).sum();
    let scale = if trace > T::zero() { trace / T::from_usize_lossy(n) } else { T::one() };
    let mut eps = JITTER_START;
    let mut worst = (0usize, T::zero());
    while eps <= JITTER_MAX * 1.000_001 {
        let mut loaded = a.to_owned();
        let shift = T::lit(eps) * scale;
        for i in 0..n {
            loaded[[i, i]] += shift;
        }
        match Cholesky::factor(loaded.view()) {
            Ok(chol) => {
                let mut x = chol.solve(b);
                for _ in 0..REFINEMENT_STEPS {
                    let mut r = b.to_owned();
                    general_mat_mul(-T::one(), &a, &x, T::one(), &mut r);
                    let dx = chol.solve(r.view());
                    x += &dx;
                }
                if x.iter().all(|v| v.is_finite()) {
                    return Ok(x);
                }
            }
            Err(pivot) => worst = pivot,
        }
        eps *= 10.0;
    }
    let max_diag = (0..n).map(|i| a[[i, i]].abs()).fold(T::zero(), T::max);
    let pivot = worst.1.abs().max(T::min_positive_value());
    Err(Error::Numerical { condition: (max_diag / pivot).as_f64() })
}

/// Coefficients of a representer expansion fitted to several design blocks.
///
/// Returns `β = (Σ_l K_lᵀ K_l + λ · L · K)⁻¹ Σ_l K_lᵀ ψ` where `L` is the
/// number of blocks, each `K_l` is an `n × p` cross-Gram, `K` the `p × p`
/// anchor Gram and `ψ` an `n × d` target matrix shared by all blocks.
pub fn solve_regularized<T: Scalar>(
    terms: &[ArrayView2<'_, T>],
    full_gram: ArrayView2<'_, T>,
    lambda: T,
    targets: ArrayView2<'_, T>,
) -> Result<Array2<T>> {
    if terms.is_empty() {
        return input_err("solve_regularized: no Gram blocks");
    }
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return input_err(format!("solve_regularized: lambda must be finite and non-negative, got {lambda}"));
    }
    let p = full_gram.nrows();
    if full_gram.ncols() != p {
        return input_err("solve_regularized: anchor Gram is not square");
    }
    for (l, k) in terms.iter().enumerate() {
        if k.ncols() != p {
            return input_err(format!("solve_regularized: block {l} has {} columns, expected {p}", k.ncols()));
        }
        if k.nrows() != targets.nrows() {
            return input_err(format!(
                "solve_regularized: block {l} has {} rows but targets have {}",
                k.nrows(),
                targets.nrows()
            ));
        }
    }
    let d = targets.ncols();
    let mut system = Array2::<T>::zeros((p, p));
    let mut rhs = Array2::<T>::zeros((p, d));
    for k in terms {
        general_mat_mul(T::one(), &k.t(), k, T::one(), &mut system);
        general_mat_mul(T::one(), &k.t(), &targets, T::one(), &mut rhs);
    }
    let reg = lambda * T::from_usize_lossy(terms.len());
    system.scaled_add(reg, &full_gram);
    symmetrize(&mut system);
    solve_spd(system.view(), rhs.view())
}

fn symmetrize<T: Scalar>(m: &mut Array2<T>) {
    let n = m.nrows();
    let half = T::lit(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (m[[i, j]] + m[[j, i]]) * half;
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
}
