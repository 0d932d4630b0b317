//! Replication-level experiments: the illustration study, the temporal
//! benchmark series, weight diagnostics, convergence curves and the
//! null-effect check.
//!
//! Every replication derives its generator, noise, fit and Monte-Carlo seeds
//! from the master seed, so replications can run in any order (they run in
//! parallel) and reports are reproducible byte for byte.

use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::effects;
use crate::error::{Error, Result};
use crate::kernel::KernelFamily;
use crate::pipeline::{FittedModel, PipelineConfig};
use crate::rng::{self, derive_seed};
use crate::scalar::Scalar;
use crate::scm::{make_illustration, make_symmetric_linear, make_td, simulate, OutcomeKind, TdDepth, TdDims, TimeSeriesDataset};
use crate::vi::{LatentPrior, Regularizers, VariationalModel};

pub const DEFAULT_SPLIT: [f64; 3] = [0.64, 0.20, 0.16];
pub const ILLUSTRATION_LENGTH: usize = 1000;
pub const TD_LENGTH: usize = 200;
/// Held-out window of the convergence study, matching the test share of a
/// benchmark series.
pub const CURVE_TEST_LENGTH: usize = 32;
pub const NULL_EFFECT_LENGTH: usize = 200;
/// A variant is flagged when more than this share of its replications fail.
pub const FAILURE_FLAG_SHARE: f64 = 0.2;

/// Contiguous chronological split with boundaries `floor(cumulative · T)`.
pub fn split<T: Scalar>(data: &TimeSeriesDataset<T>, ratios: [f64; 3]) -> Result<[TimeSeriesDataset<T>; 3]> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::Config(format!("split ratios must be non-negative, got {ratios:?}")));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios sum to {total}, expected 1")));
    }
    let n = data.len();
    if n < 10 {
        return Err(Error::Input(format!("need at least 10 time steps to split, got {n}")));
    }
    // The small slack keeps e.g. 0.64 + 0.20 from flooring one step short.
    let b1 = ((ratios[0] * n as f64) + 1e-9).floor() as usize;
    let b2 = (((ratios[0] + ratios[1]) * n as f64) + 1e-9).floor() as usize;
    let b2 = b2.min(n);
    if b1 == 0 || b2 <= b1 || b2 >= n {
        return Err(Error::Config(format!("split {ratios:?} leaves an empty part for T={n}")));
    }
    Ok([data.slice(0, b1)?, data.slice(b1, b2)?, data.slice(b2, n)?])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    NoConfounder,
    IidConfounder,
    StochasticConfounder,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 3] = [ModelVariant::StochasticConfounder, ModelVariant::IidConfounder, ModelVariant::NoConfounder];

    pub fn prior(self) -> LatentPrior {
        match self {
            ModelVariant::NoConfounder => LatentPrior::Absent,
            ModelVariant::IidConfounder => LatentPrior::Iid,
            ModelVariant::StochasticConfounder => LatentPrior::Markov,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelVariant::NoConfounder => "model1",
            ModelVariant::IidConfounder => "model2",
            ModelVariant::StochasticConfounder => "model3",
        }
    }
}

impl std::str::FromStr for ModelVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "model1" | "none" | "no_confounder" => Ok(ModelVariant::NoConfounder),
            "model2" | "iid" | "iid_confounder" => Ok(ModelVariant::IidConfounder),
            "model3" | "markov" | "stochastic" | "stochastic_confounder" => Ok(ModelVariant::StochasticConfounder),
            other => Err(format!("unknown model variant `{other}`")),
        }
    }
}

/// A variant together with the kernel family of every head.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub variant: ModelVariant,
    pub kernel: KernelFamily,
}

impl VariantSpec {
    pub fn new(variant: ModelVariant, kernel: KernelFamily) -> Self {
        VariantSpec { variant, kernel }
    }

    pub fn name(&self) -> String {
        format!("{}-{}", self.variant.label(), self.kernel.name())
    }

    /// `base` with this variant's prior and kernel.
    pub fn apply<T: Scalar>(&self, base: &PipelineConfig<T>) -> PipelineConfig<T> {
        let mut cfg = base.clone();
        cfg.fit.prior = self.variant.prior();
        cfg.fit.kernel = self.kernel;
        cfg.aux.kernel = self.kernel;
        cfg
    }
}

/// Validation grid: lengthscale multipliers of the median heuristic and a
/// regularizer shared by all heads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TuningGrid<T> {
    pub lengthscale_scales: Vec<T>,
    pub lambdas: Vec<T>,
    /// Monte-Carlo draws behind each validation prediction.
    pub mc_samples: usize,
}

impl<T: Scalar> Default for TuningGrid<T> {
    fn default() -> Self {
        TuningGrid {
            lengthscale_scales: vec![T::lit(0.1), T::one(), T::lit(10.0)],
            lambdas: vec![T::lit(1e-4), T::lit(1e-3), T::lit(1e-2)],
            mc_samples: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BenchConfig<T> {
    pub pipeline: PipelineConfig<T>,
    /// Monte-Carlo draws per effect estimate.
    pub mc_samples: usize,
    /// Grid searched on the first replication's validation split; the
    /// selection is reused for every replication. `None` keeps `pipeline`.
    pub tuning: Option<TuningGrid<T>>,
}

impl<T: Scalar> Default for BenchConfig<T> {
    fn default() -> Self {
        BenchConfig { pipeline: PipelineConfig::default(), mc_samples: 200, tuning: Some(TuningGrid::default()) }
    }
}

impl<T: Scalar> BenchConfig<T> {
    /// Reduced optimization budget for single-machine runs: one restart,
    /// five outer iterations, two posterior steps per iteration and a capped
    /// Newton solve.
    pub fn desk(samples: usize) -> Self {
        let mut cfg = BenchConfig::default();
        let fit = &mut cfg.pipeline.fit;
        fit.samples = samples;
        fit.restarts = 1;
        fit.outer_iters = 5;
        fit.q_steps = 2;
        fit.w_iters = 20;
        cfg.mc_samples = 100;
        cfg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningRecord {
    pub variant: String,
    pub lengthscale_scale: f64,
    pub lambda: f64,
    /// `None` when the fit or the prediction failed.
    pub val_rmse: Option<f64>,
    pub selected: bool,
}

/// Grid search on validation factual-outcome RMSE.
pub fn tune<T: Scalar>(
    train: &TimeSeriesDataset<T>,
    val: &TimeSeriesDataset<T>,
    base: &PipelineConfig<T>,
    grid: &TuningGrid<T>,
    seed: u64,
    label: &str,
) -> Result<(PipelineConfig<T>, Vec<TuningRecord>)> {
    let mut candidates = Vec::new();
    for &ls in &grid.lengthscale_scales {
        for &lambda in &grid.lambdas {
            let mut cfg = base.clone();
            cfg.fit.lengthscale_scale = ls;
            cfg.aux.lengthscale_scale = ls;
            cfg.fit.lambda = Regularizers::uniform(lambda);
            candidates.push(cfg);
        }
    }
    let mc_seed = derive_seed(seed, &[rng::TUNING]);
    let scores: Vec<Option<f64>> = candidates
        .par_iter()
        .map(|cfg| {
            let model = FittedModel::fit(train, cfg).ok()?;
            let pred = model.predict_factual(val, grid.mc_samples.max(1), mc_seed).ok()?;
            let mse = pred.iter().zip(val.y.iter()).map(|(&p, &y)| (p - y).as_f64().powi(2)).sum::<f64>() / val.len() as f64;
            mse.is_finite().then(|| mse.sqrt())
        })
        .collect();
    let best = scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Fit(format!("{label}: every tuning candidate failed")))?;
    let records = candidates
        .iter()
        .zip(&scores)
        .enumerate()
        .map(|(i, (cfg, s))| TuningRecord {
            variant: label.to_string(),
            lengthscale_scale: cfg.fit.lengthscale_scale.as_f64(),
            lambda: cfg.fit.lambda.y.as_f64(),
            val_rmse: *s,
            selected: i == best,
        })
        .collect();
    Ok((candidates.swap_remove(best), records))
}

/// Sample mean and standard error of a set of replication values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    /// Zero when `n = 1`, with `stderr_undefined` set.
    pub stderr: f64,
    pub stderr_undefined: bool,
}

pub fn aggregate(values: &[f64]) -> Option<Aggregate> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    if n == 1 {
        return Some(Aggregate { n, mean, stderr: 0.0, stderr_undefined: true });
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    Some(Aggregate { n, mean, stderr: (var / nf).sqrt(), stderr_undefined: false })
}

/// One fitted variant on one replication. Metric fields are empty when the
/// replication failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub variant: String,
    pub replication: usize,
    pub seed: u64,
    pub true_ate: Option<f64>,
    pub estimated_ate: Option<f64>,
    pub eps_ate: Option<f64>,
    pub sqrt_pehe: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: String,
    pub succeeded: usize,
    pub failed: usize,
    /// More than a fifth of the replications failed.
    pub failure_flag: bool,
    pub eps_ate: Option<Aggregate>,
    pub sqrt_pehe: Option<Aggregate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub master_seed: u64,
    pub replications: usize,
    pub config: serde_json::Value,
    pub tuning: Vec<TuningRecord>,
    pub rows: Vec<ReplicationRow>,
    pub summaries: Vec<VariantSummary>,
}

impl ExperimentReport {
    fn assemble(experiment: String, master_seed: u64, replications: usize, config: serde_json::Value, tuning: Vec<TuningRecord>, rows: Vec<ReplicationRow>, variants: &[String]) -> Self {
        let summaries = variants
            .iter()
            .map(|v| {
                let mine: Vec<&ReplicationRow> = rows.iter().filter(|r| &r.variant == v).collect();
                let ok: Vec<&ReplicationRow> = mine.iter().copied().filter(|r| r.error.is_none()).collect();
                let failed = mine.len() - ok.len();
                let eps: Vec<f64> = ok.iter().filter_map(|r| r.eps_ate).collect();
                let pehe: Vec<f64> = ok.iter().filter_map(|r| r.sqrt_pehe).collect();
                VariantSummary {
                    variant: v.clone(),
                    succeeded: ok.len(),
                    failed,
                    failure_flag: failed as f64 > FAILURE_FLAG_SHARE * mine.len() as f64,
                    eps_ate: aggregate(&eps),
                    sqrt_pehe: aggregate(&pehe),
                }
            })
            .collect();
        ExperimentReport { experiment, master_seed, replications, config, tuning, rows, summaries }
    }

    pub fn summary(&self, variant: &str) -> Option<&VariantSummary> {
        self.summaries.iter().find(|s| s.variant == variant)
    }

    /// Per-replication rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Input(format!("writing report CSV: {e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Fits `cfg` on `train` and scores the all-treated versus all-control effect
/// over `test` against the recorded counterfactuals.
pub fn evaluate_split<T: Scalar>(train: &TimeSeriesDataset<T>, test: &TimeSeriesDataset<T>, cfg: &PipelineConfig<T>, mc_samples: usize, mc_seed: u64) -> Result<(FittedModel<T>, [f64; 4])> {
    let model = FittedModel::fit(train, cfg)?;
    let n = test.len();
    let (ones, zeros) = (vec![1u8; n], vec![0u8; n]);
    let est = model.estimate(test, &ones, &zeros, (1, n), mc_samples, mc_seed)?;
    let truth = test.true_effect_path(&ones, &zeros)?;
    let true_ate = effects::ate(truth.view(), 1, n)?;
    let eps_ate = effects::eps_ate(true_ate, est.ate);
    let pehe = effects::eps_pehe(truth.view(), est.ep.view(), 1, n)?;
    Ok((model, [true_ate.as_f64(), est.ate.as_f64(), eps_ate.as_f64(), pehe.as_f64().sqrt()]))
}

fn row_from(variant: &str, replication: usize, seed: u64, outcome: Result<[f64; 4]>) -> ReplicationRow {
    match outcome {
        Ok([t, e, eps, pehe]) => ReplicationRow {
            variant: variant.into(),
            replication,
            seed,
            true_ate: Some(t),
            estimated_ate: Some(e),
            eps_ate: Some(eps),
            sqrt_pehe: Some(pehe),
            error: None,
        },
        Err(err) => ReplicationRow {
            variant: variant.into(),
            replication,
            seed,
            true_ate: None,
            estimated_ate: None,
            eps_ate: None,
            sqrt_pehe: None,
            error: Some(err.to_string()),
        },
    }
}

/// Shared driver: `data(r)` yields replication `r`'s series; every variant
/// is tuned once (on replication 0) and then fitted on each replication.
fn run_experiment<T: Scalar>(
    experiment: String,
    echo: serde_json::Value,
    variants: &[VariantSpec],
    replications: usize,
    seed: u64,
    cfg: &BenchConfig<T>,
    data: impl Fn(usize) -> Result<TimeSeriesDataset<T>> + Sync,
) -> Result<ExperimentReport> {
    if replications == 0 {
        return Err(Error::Config("replication count must be at least 1".into()));
    }
    let mut tuned = Vec::with_capacity(variants.len());
    let mut tuning = Vec::new();
    for v in variants {
        let base = v.apply(&cfg.pipeline);
        match &cfg.tuning {
            Some(grid) => {
                let [train, val, _] = split(&data(0)?, DEFAULT_SPLIT)?;
                let (best, records) = tune(&train, &val, &base, grid, derive_seed(seed, &[rng::TUNING]), &v.name())?;
                tuned.push(best);
                tuning.extend(records);
            }
            None => tuned.push(base),
        }
    }
    let rows: Vec<Vec<ReplicationRow>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let rep_seed = derive_seed(seed, &[rng::REPLICATION, r as u64]);
            let parts = data(r).and_then(|d| split(&d, DEFAULT_SPLIT));
            variants
                .iter()
                .zip(&tuned)
                .map(|(v, vcfg)| {
                    let outcome = parts.as_ref().map_err(|e| Error::Input(e.to_string())).and_then(|[train, _, test]| {
                        let mut c = vcfg.clone();
                        c.fit.seed = rep_seed;
                        evaluate_split(train, test, &c, cfg.mc_samples, derive_seed(rep_seed, &[rng::MONTE_CARLO])).map(|(_, m)| m)
                    });
                    row_from(&v.name(), r, rep_seed, outcome)
                })
                .collect()
        })
        .collect();
    let rows: Vec<ReplicationRow> = rows.into_iter().flatten().collect();
    let names: Vec<String> = variants.iter().map(VariantSpec::name).collect();
    let config = serde_json::json!({ "bench": cfg, "experiment": echo });
    Ok(ExperimentReport::assemble(experiment, seed, replications, config, tuning, rows, &names))
}

/// Series of replication `r` of the illustration study.
pub fn illustration_data<T: Scalar>(kind: OutcomeKind, r: usize, seed: u64) -> Result<TimeSeriesDataset<T>> {
    simulate(&make_illustration::<T>(kind), ILLUSTRATION_LENGTH, derive_seed(seed, &[rng::REPLICATION, r as u64, rng::NOISE]))
}

/// The three variants (all with `cfg`'s kernel) on the illustration series,
/// scored on the test window.
pub fn run_illustration<T: Scalar>(kind: OutcomeKind, replications: usize, seed: u64, cfg: &BenchConfig<T>) -> Result<ExperimentReport> {
    let kernel = cfg.pipeline.fit.kernel;
    let variants: Vec<VariantSpec> = ModelVariant::ALL.iter().map(|&v| VariantSpec::new(v, kernel)).collect();
    let echo = serde_json::json!({ "kind": kind.name(), "length": ILLUSTRATION_LENGTH, "split": DEFAULT_SPLIT });
    run_experiment(format!("illustration-{}", kind.name()), echo, &variants, replications, seed, cfg, |r| illustration_data(kind, r, seed))
}

/// Series of replication `r` of a temporal benchmark; the generator's
/// networks are redrawn per replication. Temporal and iid data built from
/// the same `(r, seed)` share those networks except for the transition of `z`.
pub fn td_data<T: Scalar>(depth: TdDepth, iid: bool, r: usize, seed: u64) -> Result<TimeSeriesDataset<T>> {
    let scm = make_td::<T>(depth, iid, TdDims::default(), derive_seed(seed, &[rng::REPLICATION, r as u64, rng::GENERATOR]))?;
    simulate(&scm, TD_LENGTH, derive_seed(seed, &[rng::REPLICATION, r as u64, rng::NOISE]))
}

/// Variants of the benchmark table: the stochastic-confounder model under
/// each kernel, then the iid-confounder and no-confounder ablations.
pub fn td_variants() -> Vec<VariantSpec> {
    let mut v: Vec<VariantSpec> = KernelFamily::ALL.iter().map(|&k| VariantSpec::new(ModelVariant::StochasticConfounder, k)).collect();
    v.push(VariantSpec::new(ModelVariant::IidConfounder, KernelFamily::Matern32));
    v.push(VariantSpec::new(ModelVariant::NoConfounder, KernelFamily::Matern32));
    v
}

/// Out-of-sample ATE error on temporal benchmark series over the full test
/// window.
pub fn run_td<T: Scalar>(depth: TdDepth, iid: bool, replications: usize, seed: u64, cfg: &BenchConfig<T>) -> Result<ExperimentReport> {
    let name = format!("td{}l{}", depth.layers(), if iid { "-iid" } else { "" });
    let echo = serde_json::json!({ "depth": depth.layers(), "iid_confounder": iid, "length": TD_LENGTH, "split": DEFAULT_SPLIT });
    run_experiment(name, echo, &td_variants(), replications, seed, cfg, |r| td_data(depth, iid, r, seed))
}

/// Anchor weights of the transition head `f_z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightDiagnostic {
    /// `‖β^z‖` of the anchor built from time `t` and sample `l`, at `[t, l]`.
    pub weights: Array2<f64>,
    /// Fitted constant of `f_z`.
    pub offset: Vec<f64>,
}

impl WeightDiagnostic {
    pub fn mean(&self) -> f64 {
        self.weights.mean().unwrap_or(0.0)
    }

    /// Long format `t,l,weight` with 1-based indices.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Input(format!("writing diagnostic CSV: {e}"));
        w.write_record(["t", "l", "weight"]).map_err(err)?;
        for ((t, l), v) in self.weights.indexed_iter() {
            w.write_record([(t + 1).to_string(), (l + 1).to_string(), v.to_string()]).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn weight_diagnostics<T: Scalar>(model: &VariationalModel<T>) -> Result<WeightDiagnostic> {
    let Some(fz) = &model.f_z else {
        return Err(Error::Diagnostic("the model has no transition head (fit the stochastic-confounder variant)".into()));
    };
    let samples = model.config.effective_samples();
    let n = fz.n_anchors();
    if samples == 0 || n % samples != 0 {
        return Err(Error::Diagnostic(format!("{n} anchors do not split into {samples} samples")));
    }
    let t_len = n / samples;
    let weights = Array2::from_shape_fn((t_len, samples), |(t, l)| {
        fz.beta.row(l * t_len + t).iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt()
    });
    Ok(WeightDiagnostic { weights, offset: fz.offset.iter().map(|v| v.as_f64()).collect() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t_train: usize,
    /// `ε_ATE` per seed, `None` where the fit failed.
    pub per_seed: Vec<Option<f64>>,
    pub eps_ate: Option<Aggregate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCurve {
    pub depth: usize,
    pub seeds: Vec<u64>,
    pub points: Vec<CurvePoint>,
}

impl ConvergenceCurve {
    /// `t_train,mean,stderr,n` per training length.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Input(format!("writing curve CSV: {e}"));
        w.write_record(["t_train", "mean_eps_ate", "stderr", "n"]).map_err(err)?;
        for p in &self.points {
            let (m, s, n) = p.eps_ate.as_ref().map_or((String::new(), String::new(), 0), |a| (a.mean.to_string(), a.stderr.to_string(), a.n));
            w.write_record([p.t_train.to_string(), m, s, n.to_string()]).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `5, 10, …, 125`.
pub fn default_train_lengths() -> Vec<usize> {
    (1..=25).map(|k| 5 * k).collect()
}

/// Refits the stochastic-confounder model on growing training windows. Each
/// seed fixes one series; the test window is its last
/// [`CURVE_TEST_LENGTH`] steps and every training window ends right before
/// it.
pub fn convergence_curve<T: Scalar>(depth: TdDepth, train_lengths: &[usize], seeds: &[u64], cfg: &BenchConfig<T>) -> Result<ConvergenceCurve> {
    let Some(&longest) = train_lengths.iter().max() else {
        return Err(Error::Config("no training lengths given".into()));
    };
    if train_lengths.iter().any(|&n| n < 2) {
        return Err(Error::Config("training lengths must be at least 2".into()));
    }
    let total = longest + CURVE_TEST_LENGTH;
    let mut fit_cfg = cfg.pipeline.clone();
    fit_cfg.fit.prior = LatentPrior::Markov;
    let per_seed: Vec<Vec<Option<f64>>> = seeds
        .par_iter()
        .map(|&seed| {
            let series = make_td::<T>(depth, false, TdDims::default(), derive_seed(seed, &[rng::GENERATOR]))
                .and_then(|scm| simulate(&scm, total, derive_seed(seed, &[rng::NOISE])));
            train_lengths
                .iter()
                .map(|&n| {
                    let series = series.as_ref().ok()?;
                    let train = series.slice(longest - n, longest).ok()?;
                    let test = series.slice(longest, total).ok()?;
                    let mut c = fit_cfg.clone();
                    c.fit.seed = seed;
                    evaluate_split(&train, &test, &c, cfg.mc_samples, derive_seed(seed, &[rng::MONTE_CARLO])).ok().map(|(_, m)| m[2])
                })
                .collect()
        })
        .collect();
    let points = train_lengths
        .iter()
        .enumerate()
        .map(|(i, &t_train)| {
            let vals: Vec<Option<f64>> = per_seed.iter().map(|s| s[i]).collect();
            let ok: Vec<f64> = vals.iter().flatten().copied().collect();
            CurvePoint { t_train, per_seed: vals, eps_ate: aggregate(&ok) }
        })
        .collect();
    Ok(ConvergenceCurve { depth: depth.layers(), seeds: seeds.to_vec(), points })
}

/// Two-sided one-sample Student t test against mean 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub mean: f64,
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

pub fn one_sample_t_test(values: &[f64]) -> Result<TTest> {
    let Some(agg) = aggregate(values) else {
        return Err(Error::Input("t test needs at least two values".into()));
    };
    if agg.stderr_undefined {
        return Err(Error::Input("t test needs at least two values".into()));
    }
    let df = (agg.n - 1) as f64;
    if agg.stderr == 0.0 {
        let p_value = if agg.mean == 0.0 { 1.0 } else { 0.0 };
        return Ok(TTest { mean: agg.mean, t: if agg.mean == 0.0 { 0.0 } else { f64::INFINITY.copysign(agg.mean) }, df, p_value });
    }
    let t = agg.mean / agg.stderr;
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Input(format!("t distribution: {e}")))?;
    Ok(TTest { mean: agg.mean, t, df, p_value: 2.0 * dist.sf(t.abs()) })
}

/// `[1, 0, 1, 0, …]` when `start = 1`, `[0, 1, 0, 1, …]` when `start = 0`.
pub fn alternating(n: usize, start: u8) -> Vec<u8> {
    (0..n).map(|t| if t % 2 == 0 { start } else { 1 - start }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullEffectRow {
    pub replication: usize,
    pub seed: u64,
    pub test: Option<TTest>,
    pub error: Option<String>,
}

/// EP between the two alternating paths on symmetric linear series, each
/// tested against a zero mean.
pub fn run_null_effect<T: Scalar>(replications: usize, seed: u64, cfg: &BenchConfig<T>) -> Result<Vec<NullEffectRow>> {
    if replications == 0 {
        return Err(Error::Config("replication count must be at least 1".into()));
    }
    let mut fit_cfg = cfg.pipeline.clone();
    fit_cfg.fit.prior = LatentPrior::Markov;
    Ok((0..replications)
        .into_par_iter()
        .map(|r| {
            let rep_seed = derive_seed(seed, &[rng::REPLICATION, r as u64]);
            let outcome = (|| {
                let data = simulate(&make_symmetric_linear::<T>(), NULL_EFFECT_LENGTH, derive_seed(rep_seed, &[rng::NOISE]))?;
                let [train, _, test] = split(&data, DEFAULT_SPLIT)?;
                let mut c = fit_cfg.clone();
                c.fit.seed = rep_seed;
                let model = FittedModel::fit(&train, &c)?;
                let n = test.len();
                let est = model.estimate(&test, &alternating(n, 1), &alternating(n, 0), (1, n), cfg.mc_samples, derive_seed(rep_seed, &[rng::MONTE_CARLO]))?;
                let ep: Vec<f64> = est.ep.iter().map(|v| v.as_f64()).collect();
                one_sample_t_test(&ep)
            })();
            match outcome {
                Ok(t) => NullEffectRow { replication: r, seed: rep_seed, test: Some(t), error: None },
                Err(e) => NullEffectRow { replication: r, seed: rep_seed, test: None, error: Some(e.to_string()) },
            }
        })
        .collect())
}
