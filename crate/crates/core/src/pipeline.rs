//! End-to-end fitting on a dataset: standardization, the variational model,
//! the auxiliary chain, and persistence of the bundle.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::aux::{fit_aux_heads, AuxConfig, AuxHeads, ChainStart};
use crate::effects::{self, CausalEstimate, FittedChain};
use crate::error::{input_err, Error, Result};
use crate::scalar::Scalar;
use crate::scm::TimeSeriesDataset;
use crate::vi::{fit, FitConfig, Observations, VariationalModel};

pub const MODEL_FORMAT: &str = "stochcausal-model";
pub const MODEL_VERSION: u32 = 1;

/// Per-column affine map `v ↦ (v − mean) / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ColumnScaler<T> {
    pub mean: Array1<T>,
    pub scale: Array1<T>,
}

impl<T: Scalar> ColumnScaler<T> {
    /// Sample mean and standard deviation; constant columns get scale 1.
    pub fn fit(data: ArrayView2<'_, T>) -> Self {
        let n = T::from_usize_lossy(data.nrows());
        let mean = data.mean_axis(Axis(0)).expect("nonempty");
        let scale = Array1::from_iter(data.columns().into_iter().zip(mean.iter()).map(|(c, &m)| {
            let var = c.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / n;
            let sd = var.sqrt();
            if sd > T::epsilon() * m.abs().max(T::one()) { sd } else { T::one() }
        }));
        ColumnScaler { mean, scale }
    }

    pub fn identity(d: usize) -> Self {
        ColumnScaler { mean: Array1::zeros(d), scale: Array1::ones(d) }
    }

    pub fn apply(&self, data: ArrayView2<'_, T>) -> Array2<T> {
        (&data - &self.mean.view().insert_axis(Axis(0))) / &self.scale.view().insert_axis(Axis(0))
    }

    pub fn apply_row(&self, row: &Array1<T>) -> Array1<T> {
        (row - &self.mean) / &self.scale
    }
}

/// Scalers for `y`, `s` and `x`; treatments are left binary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Standardizer<T> {
    pub y: ColumnScaler<T>,
    pub s: ColumnScaler<T>,
    pub x: ColumnScaler<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(ds: &TimeSeriesDataset<T>) -> Self {
        Standardizer {
            y: ColumnScaler::fit(ds.y.view().insert_axis(Axis(1))),
            s: ColumnScaler::fit(ds.s.view()),
            x: ColumnScaler::fit(ds.x.view()),
        }
    }

    pub fn identity(d_s: usize, d_x: usize) -> Self {
        Standardizer { y: ColumnScaler::identity(1), s: ColumnScaler::identity(d_s), x: ColumnScaler::identity(d_x) }
    }

    /// Standardized observations, including the lagged initial values.
    pub fn observations(&self, ds: &TimeSeriesDataset<T>) -> Result<Observations<T>> {
        let mut obs = Observations::from_dataset(ds)?;
        if obs.d_s() != self.s.mean.len() || obs.d_x() != self.x.mean.len() {
            return input_err(format!(
                "dataset has d_s={}, d_x={}, model expects d_s={}, d_x={}",
                obs.d_s(),
                obs.d_x(),
                self.s.mean.len(),
                self.x.mean.len()
            ));
        }
        let (my, sy) = (self.y.mean[0], self.y.scale[0]);
        obs.y.mapv_inplace(|v| (v - my) / sy);
        obs.y0 = (obs.y0 - my) / sy;
        obs.s = self.s.apply(obs.s.view());
        obs.s0 = self.s.apply_row(&obs.s0);
        obs.x = self.x.apply(obs.x.view());
        Ok(obs)
    }

    /// Factor converting an outcome difference back to original units.
    pub fn y_scale(&self) -> T {
        self.y.scale[0]
    }

    pub fn y_mean(&self) -> T {
        self.y.mean[0]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct PipelineConfig<T> {
    pub fit: FitConfig<T>,
    pub aux: AuxConfig<T>,
    pub standardize: bool,
}

impl<T: Scalar> Default for PipelineConfig<T> {
    fn default() -> Self {
        PipelineConfig { fit: FitConfig::default(), aux: AuxConfig::default(), standardize: true }
    }
}

/// Everything needed to estimate effects on new covariate paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FittedModel<T> {
    pub format: String,
    pub version: u32,
    pub standardizer: Standardizer<T>,
    pub model: VariationalModel<T>,
    pub heads: AuxHeads<T>,
}

impl<T: Scalar> FittedModel<T> {
    pub fn fit(train: &TimeSeriesDataset<T>, cfg: &PipelineConfig<T>) -> Result<Self> {
        train.validate()?;
        let standardizer = if cfg.standardize {
            Standardizer::fit(train)
        } else {
            Standardizer::identity(train.d_s(), train.d_x())
        };
        let obs = standardizer.observations(train)?;
        let model = fit(&obs, &cfg.fit)?;
        let heads = fit_aux_heads(&obs, &cfg.aux)?;
        Ok(FittedModel { format: MODEL_FORMAT.into(), version: MODEL_VERSION, standardizer, model, heads })
    }

    /// Effect of `w̄₁` versus `w̄₂` over the covariate path of `window_data`,
    /// in original outcome units. The chain starts from the dataset's
    /// initial state, so a held-out window should be cut with
    /// [`TimeSeriesDataset::slice`].
    pub fn estimate(
        &self,
        window_data: &TimeSeriesDataset<T>,
        w1: &[u8],
        w2: &[u8],
        window: (usize, usize),
        samples: usize,
        seed: u64,
    ) -> Result<CausalEstimate<T>> {
        let obs = self.standardizer.observations(window_data)?;
        let start = ChainStart::of(&obs);
        let chain = FittedChain { model: &self.model, heads: &self.heads, start: &start };
        let mut est = effects::estimate(&chain, obs.x.view(), w1, w2, window, samples, seed)?;
        let k = self.standardizer.y_scale();
        est.ep.mapv_inplace(|v| v * k);
        est.ep_stderr.mapv_inplace(|v| v * k);
        est.ate = effects::ate(est.ep.view(), 1, est.ep.len())?;
        est.ate_stderr *= k;
        Ok(est)
    }

    /// `E[y_t | do(w = factual w), x]` in original units.
    pub fn predict_factual(&self, data: &TimeSeriesDataset<T>, samples: usize, seed: u64) -> Result<Array1<T>> {
        let obs = self.standardizer.observations(data)?;
        let start = ChainStart::of(&obs);
        let chain = FittedChain { model: &self.model, heads: &self.heads, start: &start };
        let m = effects::expected_outcome_do(&chain, obs.x.view(), &data.w, samples, seed)?;
        let (mu, k) = (self.standardizer.y_mean(), self.standardizer.y_scale());
        Ok(m.mapv(|v| v * k + mu))
    }

    /// Outcome head at standardized inputs, mapped back to original units.
    pub fn outcome(&self, w: T, z: &[T], s_raw: &[T]) -> Result<T> {
        let s = self.standardizer.s.apply_row(&Array1::from(s_raw.to_vec()));
        let v = self.model.outcome(w, Array1::from(z.to_vec()).view(), s.view())?;
        Ok(v * self.standardizer.y_scale() + self.standardizer.y_mean())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let probe: serde_json::Value = serde_json::from_str(text)?;
        match (probe.get("format").and_then(|v| v.as_str()), probe.get("version").and_then(|v| v.as_u64())) {
            (Some(MODEL_FORMAT), Some(v)) if v == u64::from(MODEL_VERSION) => Ok(serde_json::from_value(probe)?),
            (Some(MODEL_FORMAT), Some(v)) => input_err(format!("model file version {v} is not supported (expected {MODEL_VERSION})")),
            _ => input_err("not a model file"),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Writes via a sibling temporary file and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::Input(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}
