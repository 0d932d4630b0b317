//! Head inputs assembled from the complete dataset.

use ndarray::{Array2, ArrayView2, s};

use super::{CompleteDataset, LatentPrior, Observations};
use crate::scalar::Scalar;

/// Inputs of every head. Rows of the sample-dependent blocks are ordered
/// `r = l·T + t`.
#[derive(Clone, Debug)]
pub struct Design<T> {
    pub t_len: usize,
    pub samples: usize,
    pub d_z: usize,
    /// `[w, z, s]`, `TL` rows.
    pub u_y: Array2<T>,
    /// `[z, s]`, `TL` rows.
    pub u_zs: Array2<T>,
    /// `z_{t−1}` with `z_{−1} = 0`, `TL` rows; only under the Markov prior.
    pub u_zprev: Option<Array2<T>>,
    /// `s_{t−1}`, `T` rows.
    pub u_s: Array2<T>,
    /// `[y, w, s, x]`, `T` rows.
    pub u_q: Array2<T>,
}

impl<T: Scalar> Design<T> {
    pub fn new(obs: &Observations<T>, cd: &CompleteDataset<T>, prior: LatentPrior) -> Self {
        let t_len = obs.len();
        let samples = cd.samples();
        let d_z = cd.d_z();
        let d_s = obs.d_s();
        let n = t_len * samples;
        let mut u_y = Array2::zeros((n, 1 + d_z + d_s));
        let mut u_zs = Array2::zeros((n, d_z + d_s));
        let mut u_zprev = (prior == LatentPrior::Markov).then(|| Array2::zeros((n, d_z)));
        for l in 0..samples {
            for t in 0..t_len {
                let r = l * t_len + t;
                u_y[[r, 0]] = obs.w[t];
                for k in 0..d_z {
                    let z = cd.z[[t, l, k]];
                    u_y[[r, 1 + k]] = z;
                    u_zs[[r, k]] = z;
                    if let (Some(zp), true) = (u_zprev.as_mut(), t > 0) {
                        zp[[r, k]] = cd.z[[t - 1, l, k]];
                    }
                }
                for j in 0..d_s {
                    u_y[[r, 1 + d_z + j]] = obs.s[[t, j]];
                    u_zs[[r, d_z + j]] = obs.s[[t, j]];
                }
            }
        }
        Design { t_len, samples, d_z, u_y, u_zs, u_zprev, u_s: obs.lagged_s(), u_q: obs.posterior_inputs() }
    }

    pub fn rows(&self) -> usize {
        self.t_len * self.samples
    }

    /// Rows of sample `l` in a `TL`-row block.
    pub fn block<'a>(&self, m: &'a Array2<T>, l: usize) -> ArrayView2<'a, T> {
        m.slice(s![l * self.t_len..(l + 1) * self.t_len, ..])
    }
}
