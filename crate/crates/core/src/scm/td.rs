//! Random multilayer ground truths for the temporal benchmark series.
//!
//! Each structural function is a dense tanh network of the requested depth
//! (hidden width 16, orthogonal hidden weights, linear read-out). The
//! transition maps are `f(v) = 0.7·v + 0.3·net(v)`, a contraction plus a
//! bounded term, so the series stay stationary. In the iid variant `f_z ≡ 0`
//! and `z_t` is pure noise.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{GroundTruthScm, ScmNoise};
use crate::error::{input_err, Result};
use crate::rng::{self, normal};
use crate::scalar::Scalar;

const HIDDEN: usize = 16;
const HIDDEN_GAIN: f64 = 1.5;
const TRANSITION_KEEP: f64 = 0.7;
const TRANSITION_NET: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TdDepth {
    Two,
    Four,
    Six,
}

impl TdDepth {
    pub fn layers(self) -> usize {
        match self {
            TdDepth::Two => 2,
            TdDepth::Four => 4,
            TdDepth::Six => 6,
        }
    }

    pub fn from_layers(n: usize) -> Result<Self> {
        match n {
            2 => Ok(TdDepth::Two),
            4 => Ok(TdDepth::Four),
            6 => Ok(TdDepth::Six),
            other => input_err(format!("depth must be 2, 4 or 6, got {other}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TdDims {
    pub d_z: usize,
    pub d_s: usize,
    pub d_x: usize,
}

impl Default for TdDims {
    fn default() -> Self {
        TdDims { d_z: 2, d_s: 1, d_x: 5 }
    }
}

#[derive(Clone, Debug)]
struct Mlp {
    hidden: Vec<(Array2<f64>, Array1<f64>)>,
    readout: (Array2<f64>, Array1<f64>),
}

/// Rows (or columns, whichever are fewer) made orthonormal by Gram–Schmidt.
fn orthogonal(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> Array2<f64> {
    let mut m = Array2::from_shape_fn((rows, cols), |_| normal::<f64, _>(rng));
    let transpose = rows > cols;
    if transpose {
        m = m.t().to_owned();
    }
    for i in 0..m.nrows() {
        for j in 0..i {
            let proj = m.row(i).dot(&m.row(j));
            let rj = m.row(j).to_owned();
            m.row_mut(i).scaled_add(-proj, &rj);
        }
        let norm = m.row(i).dot(&m.row(i)).sqrt();
        m.row_mut(i).mapv_inplace(|v| v / norm);
    }
    if transpose {
        m.t().to_owned()
    } else {
        m
    }
}

impl Mlp {
    fn random(d_in: usize, d_out: usize, depth: usize, rng: &mut impl rand::Rng) -> Self {
        let mut hidden = Vec::with_capacity(depth);
        let mut fan_in = d_in;
        for _ in 0..depth {
            let w = orthogonal(HIDDEN, fan_in, rng) * HIDDEN_GAIN;
            let b = Array1::from_shape_fn(HIDDEN, |_| 0.1 * normal::<f64, _>(rng));
            hidden.push((w, b));
            fan_in = HIDDEN;
        }
        let scale = 1.0 / (HIDDEN as f64).sqrt();
        let w = Array2::from_shape_fn((d_out, HIDDEN), |_| scale * normal::<f64, _>(rng));
        let b = Array1::from_shape_fn(d_out, |_| 0.1 * normal::<f64, _>(rng));
        Mlp { hidden, readout: (w, b) }
    }

    fn forward(&self, input: &[f64]) -> Array1<f64> {
        let mut h = Array1::from(input.to_vec());
        for (w, b) in &self.hidden {
            h = (w.dot(&h) + b).mapv(f64::tanh);
        }
        self.readout.0.dot(&h) + &self.readout.1
    }
}

fn to_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

/// Temporal benchmark generator with random network heads.
pub fn make_td<T: Scalar>(depth: TdDepth, iid_confounder: bool, dims: TdDims, seed: u64) -> Result<GroundTruthScm<T>> {
    let TdDims { d_z, d_s, d_x } = dims;
    if d_z == 0 || d_s == 0 || d_x == 0 {
        return input_err("TD dimensions must be at least 1");
    }
    let layers = depth.layers();
    let mut rng = rng::stream(seed, &[rng::GENERATOR]);
    let net_z = Mlp::random(d_z, d_z, layers, &mut rng);
    let net_s = Mlp::random(d_s, d_s, layers, &mut rng);
    let net_x = Mlp::random(d_z + d_s, d_x, layers, &mut rng);
    let net_w = Mlp::random(d_z + d_s, 1, layers, &mut rng);
    let net_y = Mlp::random(1 + d_z + d_s, 1, layers, &mut rng);

    let transition = |net: Mlp| -> super::StepFn<T> {
        Arc::new(move |v: &[T], out: &mut [T]| {
            let g = net.forward(&to_f64(v));
            for ((o, &vi), gi) in out.iter_mut().zip(v).zip(g.iter()) {
                *o = T::lit(TRANSITION_KEEP) * vi + T::lit(TRANSITION_NET * gi);
            }
        })
    };
    let plain = |net: Mlp| -> super::StepFn<T> {
        Arc::new(move |v: &[T], out: &mut [T]| {
            for (o, g) in out.iter_mut().zip(net.forward(&to_f64(v)).iter()) {
                *o = T::lit(*g);
            }
        })
    };
    let f_z: super::StepFn<T> = if iid_confounder {
        Arc::new(|_, out: &mut [T]| out.fill(T::zero()))
    } else {
        transition(net_z)
    };
    // the treatment also enters linearly so every draw has a non-trivial effect
    let f_y: super::StepFn<T> = Arc::new(move |wzs: &[T], out: &mut [T]| {
        out[0] = T::lit(net_y.forward(&to_f64(wzs))[0]) + wzs[0];
    });
    let name = format!("td{}l{}", layers, if iid_confounder { "-iid" } else { "" });
    Ok(GroundTruthScm {
        name,
        d_z,
        d_s,
        d_x,
        f_z,
        f_s: transition(net_s),
        f_x: plain(net_x),
        f_w: plain(net_w),
        f_y,
        noise: ScmNoise { z: T::lit(0.5), s: T::lit(0.3), x: T::lit(0.3), y: T::lit(0.3) },
        seed: Some(seed),
        illustration: None,
    })
}
