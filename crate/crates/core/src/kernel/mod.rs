//! Kernel evaluation, Gram assembly and regularized solves.

mod logistic;
mod solve;

pub use logistic::{logistic_newton, LogisticFit};
pub use solve::{solve_regularized, solve_spd, Cholesky};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Matern32,
    Rbf,
    RationalQuadratic,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [KernelFamily::Matern32, KernelFamily::Rbf, KernelFamily::RationalQuadratic];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Matern32 => "matern32",
            KernelFamily::Rbf => "rbf",
            KernelFamily::RationalQuadratic => "rq",
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "matern32" | "matern" => Ok(KernelFamily::Matern32),
            "rbf" => Ok(KernelFamily::Rbf),
            "rq" | "rational_quadratic" | "rationalquadratic" => Ok(KernelFamily::RationalQuadratic),
            other => Err(format!("unknown kernel family `{other}`")),
        }
    }
}

/// A stationary kernel `κ(a, b) = k(‖a − b‖)`.
///
/// * RBF: `var · exp(−r² / 2ℓ²)`
/// * Matérn 3/2: `var · (1 + √3 r/ℓ) · exp(−√3 r/ℓ)`
/// * rational quadratic: `var · (1 + r² / 2αℓ²)^(−α)`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KernelSpec<T> {
    pub family: KernelFamily,
    pub lengthscale: T,
    pub variance: T,
    /// Shape parameter, only read by the rational quadratic family.
    pub alpha: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn new(family: KernelFamily, lengthscale: T, variance: T) -> Result<Self> {
        Self::with_alpha(family, lengthscale, variance, T::one())
    }

    pub fn with_alpha(family: KernelFamily, lengthscale: T, variance: T, alpha: T) -> Result<Self> {
        let spec = KernelSpec { family, lengthscale, variance, alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: T| v.is_finite() && v > T::zero();
        if !ok(self.lengthscale) || !ok(self.variance) || !ok(self.alpha) {
            return input_err(format!(
                "kernel hyperparameters must be positive and finite (lengthscale={}, variance={}, alpha={})",
                self.lengthscale, self.variance, self.alpha
            ));
        }
        Ok(())
    }

    /// `κ(a, b)`, checking dimensions.
    pub fn eval(&self, a: &[T], b: &[T]) -> Result<T> {
        if a.len() != b.len() {
            return input_err(format!("kernel inputs differ in dimension ({} vs {})", a.len(), b.len()));
        }
        Ok(self.eval_sq(sq_dist(a, b)))
    }

    /// Kernel value as a function of the squared distance.
    #[inline]
    pub fn eval_sq(&self, r2: T) -> T {
        let l2 = self.lengthscale * self.lengthscale;
        match self.family {
            KernelFamily::Rbf => self.variance * (-r2 / (T::lit(2.0) * l2)).exp(),
            KernelFamily::Matern32 => {
                let u = T::lit(3.0f64.sqrt()) * r2.sqrt() / self.lengthscale;
                self.variance * (T::one() + u) * (-u).exp()
            }
            KernelFamily::RationalQuadratic => {
                let base = T::one() + r2 / (T::lit(2.0) * self.alpha * l2);
                self.variance * base.powf(-self.alpha)
            }
        }
    }

    /// Scalar `g(r²)` such that `∇_a κ(a, b) = g · (a − b)`.
    ///
    /// For Matérn 3/2 the limit at `a = b` is finite, so coincident points
    /// need no special case.
    #[inline]
    pub fn grad_factor_sq(&self, r2: T) -> T {
        let l2 = self.lengthscale * self.lengthscale;
        match self.family {
            KernelFamily::Rbf => -self.variance * (-r2 / (T::lit(2.0) * l2)).exp() / l2,
            KernelFamily::Matern32 => {
                let u = T::lit(3.0f64.sqrt()) * r2.sqrt() / self.lengthscale;
                -self.variance * T::lit(3.0) / l2 * (-u).exp()
            }
            KernelFamily::RationalQuadratic => {
                let base = T::one() + r2 / (T::lit(2.0) * self.alpha * l2);
                -self.variance * base.powf(-self.alpha - T::one()) / l2
            }
        }
    }

    /// Writes `∇_a κ(a, b)` into `out`.
    pub fn grad_first(&self, a: &[T], b: &[T], out: &mut [T]) {
        let g = self.grad_factor_sq(sq_dist(a, b));
        for ((o, &ai), &bi) in out.iter_mut().zip(a).zip(b) {
            *o = g * (ai - bi);
        }
    }
}

#[inline]
pub(crate) fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Gram matrix of `spec` between the rows of `rows` and the rows of `cols`.
///
/// When both input sets are identical the result is assembled from the upper
/// triangle and is exactly symmetric.
pub fn gram<T: Scalar>(spec: &KernelSpec<T>, rows: ArrayView2<'_, T>, cols: ArrayView2<'_, T>) -> Result<Array2<T>> {
    if rows.nrows() == 0 || cols.nrows() == 0 {
        return input_err("gram: empty input set");
    }
    if rows.ncols() != cols.ncols() {
        return input_err(format!("gram: input dimensions differ ({} vs {})", rows.ncols(), cols.ncols()));
    }
    if rows == cols {
        return Ok(gram_sym_unchecked(spec, rows));
    }
    let (n, m) = (rows.nrows(), cols.nrows());
    let rows_std = rows.as_standard_layout();
    let cols_std = cols.as_standard_layout();
    let mut out = Array2::zeros((n, m));
    for i in 0..n {
        let a = rows_std.row(i);
        let a = a.as_slice().expect("standard layout");
        let mut out_row = out.row_mut(i);
        for j in 0..m {
            let b = cols_std.row(j);
            out_row[j] = spec.eval_sq(sq_dist(a, b.as_slice().expect("standard layout")));
        }
    }
    Ok(out)
}

/// Symmetric Gram matrix of one input set.
pub fn gram_sym<T: Scalar>(spec: &KernelSpec<T>, inputs: ArrayView2<'_, T>) -> Result<Array2<T>> {
    if inputs.nrows() == 0 {
        return input_err("gram: empty input set");
    }
    Ok(gram_sym_unchecked(spec, inputs))
}

fn gram_sym_unchecked<T: Scalar>(spec: &KernelSpec<T>, inputs: ArrayView2<'_, T>) -> Array2<T> {
    let n = inputs.nrows();
    let std = inputs.as_standard_layout();
    let view = std.view();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        let a = view.row(i);
        let a = a.as_slice().expect("standard layout");
        out[[i, i]] = spec.eval_sq(T::zero());
        for j in (i + 1)..n {
            let b = view.row(j);
            let v = spec.eval_sq(sq_dist(a, b.as_slice().expect("standard layout")));
            out[[i, j]] = v;
            out[[j, i]] = v;
        }
    }
    out
}

/// Result of the median pairwise-distance heuristic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MedianHeuristic<T> {
    pub value: T,
    /// Set when every input coincides and the fallback of 1 was returned.
    pub degenerate: bool,
}

/// Median Euclidean distance over distinct pairs of inputs.
///
/// Coincident pairs are skipped so that duplicated anchors do not drive the
/// estimate to zero; when every pair coincides the fallback `1` is returned
/// with `degenerate` set.
pub fn median_heuristic<T: Scalar>(inputs: ArrayView2<'_, T>) -> Result<MedianHeuristic<T>> {
    let n = inputs.nrows();
    if n < 2 {
        return input_err("median heuristic needs at least two inputs");
    }
    let std = inputs.as_standard_layout();
    let mut dists: Vec<T> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let a = std.row(i);
        let a = a.as_slice().expect("standard layout");
        for j in (i + 1)..n {
            let b = std.row(j);
            let d2 = sq_dist(a, b.as_slice().expect("standard layout"));
            if d2 > T::zero() {
                dists.push(d2.sqrt());
            }
        }
    }
    if dists.is_empty() {
        return Ok(MedianHeuristic { value: T::one(), degenerate: true });
    }
    let len = dists.len();
    let mid = len / 2;
    let cmp = |a: &T, b: &T| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal);
    let (lower, upper, _) = dists.select_nth_unstable_by(mid, cmp);
    let upper = *upper;
    let value = if len % 2 == 0 {
        let below = lower.iter().copied().fold(T::neg_infinity(), T::max);
        (below + upper) / T::lit(2.0)
    } else {
        upper
    };
    Ok(MedianHeuristic { value, degenerate: false })
}
