use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result};
use crate::scalar::Scalar;

/// Values of the lagged variables just before the first row.
///
/// A freshly generated series starts from the all-zero state; a slice taken
/// from the middle of a series carries the preceding observation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct InitialState<T> {
    pub y: T,
    pub w: u8,
    pub s: Array1<T>,
}

impl<T: Scalar> InitialState<T> {
    pub fn zeros(d_s: usize) -> Self {
        InitialState { y: T::zero(), w: 0, s: Array1::zeros(d_s) }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub generator: String,
    pub seed: Option<u64>,
    /// Index of the first row within the series it was cut from (0-based).
    #[serde(default)]
    pub offset: usize,
}

/// Aligned observations `(y_t, w_t, x_t, s_t)` for `t = 1..T`.
///
/// `y_cf`, when present, is the outcome the same unit would have shown
/// under the flipped treatment `1 − w_t`, generated with identical
/// exogenous draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TimeSeriesDataset<T> {
    pub y: Array1<T>,
    pub w: Vec<u8>,
    pub x: Array2<T>,
    pub s: Array2<T>,
    pub z_true: Option<Array2<T>>,
    pub y_cf: Option<Array1<T>>,
    pub initial: InitialState<T>,
    pub meta: DatasetMeta,
}

impl<T: Scalar> TimeSeriesDataset<T> {
    pub fn new(y: Array1<T>, w: Vec<u8>, x: Array2<T>, s: Array2<T>) -> Result<Self> {
        let d_s = s.ncols();
        let ds = TimeSeriesDataset {
            y,
            w,
            x,
            s,
            z_true: None,
            y_cf: None,
            initial: InitialState::zeros(d_s),
            meta: DatasetMeta::default(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn d_s(&self) -> usize {
        self.s.ncols()
    }

    pub fn d_x(&self) -> usize {
        self.x.ncols()
    }

    pub fn d_z(&self) -> Option<usize> {
        self.z_true.as_ref().map(|z| z.ncols())
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.len();
        if t == 0 {
            return input_err("dataset must have at least one time step");
        }
        if self.w.len() != t || self.x.nrows() != t || self.s.nrows() != t {
            return input_err(format!(
                "sequence lengths differ: y={}, w={}, x={}, s={}",
                t,
                self.w.len(),
                self.x.nrows(),
                self.s.nrows()
            ));
        }
        if self.d_s() == 0 || self.d_x() == 0 {
            return input_err("s and x need at least one column each");
        }
        if let Some(z) = &self.z_true {
            if z.nrows() != t {
                return input_err("z_true length differs from T");
            }
        }
        if let Some(cf) = &self.y_cf {
            if cf.len() != t {
                return input_err("y_cf length differs from T");
            }
        }
        if self.initial.s.len() != self.d_s() || self.initial.w > 1 {
            return input_err("initial state does not match the data dimensions");
        }
        if let Some(bad) = self.w.iter().position(|&w| w > 1) {
            return input_err(format!("treatment at t={} is not binary", bad + 1));
        }
        let finite = self.y.iter().chain(self.x.iter()).chain(self.s.iter()).all(|v| v.is_finite());
        if !finite {
            return input_err("dataset contains non-finite values");
        }
        Ok(())
    }

    /// Rows `start..end` (0-based, half open), carrying the preceding row as
    /// the initial state.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return input_err(format!("invalid slice {start}..{end} of a length-{} series", self.len()));
        }
        let initial = if start == 0 {
            self.initial.clone()
        } else {
            InitialState { y: self.y[start - 1], w: self.w[start - 1], s: self.s.row(start - 1).to_owned() }
        };
        Ok(TimeSeriesDataset {
            y: self.y.slice(s![start..end]).to_owned(),
            w: self.w[start..end].to_vec(),
            x: self.x.slice(s![start..end, ..]).to_owned(),
            s: self.s.slice(s![start..end, ..]).to_owned(),
            z_true: self.z_true.as_ref().map(|z| z.slice(s![start..end, ..]).to_owned()),
            y_cf: self.y_cf.as_ref().map(|c| c.slice(s![start..end]).to_owned()),
            initial,
            meta: DatasetMeta { offset: self.meta.offset + start, ..self.meta.clone() },
        })
    }

    /// Outcome at row `t` under treatment `w`, if the counterfactual is recorded.
    pub fn potential_outcome(&self, t: usize, w: u8) -> Option<T> {
        if self.w[t] == w {
            Some(self.y[t])
        } else {
            self.y_cf.as_ref().map(|cf| cf[t])
        }
    }

    /// Ground-truth effect path `y(w̄₁) − y(w̄₂)` from the recorded counterfactuals.
    pub fn true_effect_path(&self, w1: &[u8], w2: &[u8]) -> Result<Array1<T>> {
        if w1.len() != self.len() || w2.len() != self.len() {
            return input_err("treatment paths must match the dataset length");
        }
        if self.y_cf.is_none() {
            return input_err("dataset carries no counterfactual outcomes");
        }
        Ok(Array1::from_iter((0..self.len()).map(|t| {
            self.potential_outcome(t, w1[t]).expect("y_cf present") - self.potential_outcome(t, w2[t]).expect("y_cf present")
        })))
    }

    pub fn mean_treatment(&self) -> f64 {
        self.w.iter().map(|&w| f64::from(w)).sum::<f64>() / self.len() as f64
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> TimeSeriesDataset<U> {
        let c = |v: &T| U::lit(v.as_f64());
        TimeSeriesDataset {
            y: self.y.map(c),
            w: self.w.clone(),
            x: self.x.map(c),
            s: self.s.map(c),
            z_true: self.z_true.as_ref().map(|z| z.map(c)),
            y_cf: self.y_cf.as_ref().map(|z| z.map(c)),
            initial: InitialState { y: c(&self.initial.y), w: self.initial.w, s: self.initial.s.map(c) },
            meta: self.meta.clone(),
        }
    }
}
