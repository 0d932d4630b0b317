use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{GroundTruthScm, ScmNoise};
use crate::rng::{self, normal};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Linear,
    Quadratic,
    Exponential,
}

impl OutcomeKind {
    pub const ALL: [OutcomeKind; 3] = [OutcomeKind::Linear, OutcomeKind::Quadratic, OutcomeKind::Exponential];

    pub fn name(self) -> &'static str {
        match self {
            OutcomeKind::Linear => "linear",
            OutcomeKind::Quadratic => "quadratic",
            OutcomeKind::Exponential => "exponential",
        }
    }

    fn apply(self, lin: f64) -> f64 {
        match self {
            OutcomeKind::Linear => lin,
            OutcomeKind::Quadratic => lin * lin,
            OutcomeKind::Exponential => lin.exp(),
        }
    }
}

impl std::str::FromStr for OutcomeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(OutcomeKind::Linear),
            "quadratic" => Ok(OutcomeKind::Quadratic),
            "exponential" => Ok(OutcomeKind::Exponential),
            other => Err(format!("unknown outcome kind `{other}`")),
        }
    }
}

/// Coefficients of the scalar illustration model
/// `s_t = a₀ + a₁ s_{t−1} + o_t`, `w_t = 1[φ(b₀ + b₁ s_t) ≥ u_t]`,
/// `y_t = g(c₀ + c₁ s_t + c₂ w_t) + v_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IllustrationParams {
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub sigma_s: f64,
    pub sigma_y: f64,
    /// Noise of the proxy `x_t = s_t + r_t`.
    pub sigma_x: f64,
    pub kind: OutcomeKind,
}

impl IllustrationParams {
    pub fn published(kind: OutcomeKind) -> Self {
        IllustrationParams {
            a0: 0.7,
            a1: 0.95,
            b0: 0.2,
            b1: -0.1,
            c0: 0.7,
            c1: 0.4,
            c2: 1.7,
            sigma_s: 0.3,
            sigma_y: 1.0,
            sigma_x: 0.1,
            kind,
        }
    }

    pub fn outcome(&self, w: f64, s: f64) -> f64 {
        self.kind.apply(self.c0 + self.c1 * s + self.c2 * w)
    }

    /// Mean and standard deviation of the stationary law of `s`.
    pub fn stationary_s(&self) -> (f64, f64) {
        (self.a0 / (1.0 - self.a1), self.sigma_s / (1.0 - self.a1 * self.a1).sqrt())
    }

    pub fn into_scm<T: Scalar>(self, name: &str) -> GroundTruthScm<T> {
        let p = self;
        GroundTruthScm {
            name: name.to_string(),
            d_z: 1,
            d_s: 1,
            d_x: 1,
            // no latent process: the confounding driver is the observed s
            f_z: Arc::new(|_, out| out[0] = T::zero()),
            f_s: Arc::new(move |s, out| out[0] = T::lit(p.a0) + T::lit(p.a1) * s[0]),
            f_x: Arc::new(|zs, out| out[0] = zs[1]),
            f_w: Arc::new(move |zs, out| out[0] = T::lit(p.b0) + T::lit(p.b1) * zs[1]),
            f_y: Arc::new(move |wzs, out| out[0] = T::lit(p.outcome(wzs[0].as_f64(), wzs[2].as_f64()))),
            noise: ScmNoise { z: T::zero(), s: T::lit(p.sigma_s), x: T::lit(p.sigma_x), y: T::lit(p.sigma_y) },
            seed: None,
            illustration: Some(p),
        }
    }
}

/// Scalar illustration model with the published coefficients.
pub fn make_illustration<T: Scalar>(kind: OutcomeKind) -> GroundTruthScm<T> {
    IllustrationParams::published(kind).into_scm(&format!("illustration-{}", kind.name()))
}

/// Linear illustration centred at zero (`a₀ = b₀ = c₀ = 0`), so that the
/// observed confounder and the treatment propensity are symmetric about
/// their midpoints.
pub fn make_symmetric_linear<T: Scalar>() -> GroundTruthScm<T> {
    let p = IllustrationParams { a0: 0.0, b0: 0.0, c0: 0.0, ..IllustrationParams::published(OutcomeKind::Linear) };
    p.into_scm("symmetric-linear")
}

/// Monte-Carlo value of `E[y | do(w=1)] − E[y | do(w=0)]` under the
/// stationary law of `s`.
pub fn illustration_true_ate(params: &IllustrationParams, samples: usize, seed: u64) -> f64 {
    let (mu, sd) = params.stationary_s();
    let mut rng = rng::stream(seed, &[rng::MONTE_CARLO]);
    let mut acc = 0.0;
    for _ in 0..samples {
        let s = mu + sd * normal::<f64, _>(&mut rng);
        acc += params.outcome(1.0, s) - params.outcome(0.0, s);
    }
    acc / samples as f64
}
