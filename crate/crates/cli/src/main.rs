mod config;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use config::{Budget, RunConfig};
use stochcausal::bench::{self, alternating, weight_diagnostics};
use stochcausal::effects;
use stochcausal::pipeline::{write_atomic, FittedModel};
use stochcausal::rng::{derive_seed, GENERATOR, NOISE};
use stochcausal::scm::{
    illustration_true_ate, make_illustration, make_symmetric_linear, make_td, read_csv, simulate, write_csv, IllustrationParams, OutcomeKind, TdDepth,
    TdDims, TimeSeriesDataset,
};

#[derive(Parser)]
#[command(name = "stochcausal", version, about = "Causal effects from time series with stochastic latent confounders")]
struct Cli {
    /// Flat TOML file of configuration overrides.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
enum Command {
    /// Simulate a series from a built-in generator.
    Generate(GenerateArgs),
    /// Fit the estimator to a series and save the model.
    Fit(FitArgs),
    /// Effect path and ATE of one treatment path against another.
    Estimate(EstimateArgs),
    /// Score a model against a series that carries counterfactual outcomes.
    Evaluate(EvaluateArgs),
    /// Transition-head anchor weights as a heatmap CSV.
    Diagnose(DiagnoseArgs),
    /// Run a benchmark study.
    Bench(BenchArgs),
}

#[derive(Args, Serialize)]
struct GenerateArgs {
    /// Illustration outcome kind: linear, quadratic or exponential.
    #[arg(long, conflicts_with_all = ["td", "symmetric"])]
    illustration: Option<OutcomeKind>,
    /// Temporal benchmark with this many layers (2, 4 or 6).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..))]
    td: Option<u8>,
    /// With --td: draw the latent confounder independently over time.
    #[arg(long, requires = "td")]
    iid: bool,
    /// Linear series whose treatment has no effect.
    #[arg(long)]
    symmetric: bool,
    /// Series length.
    #[arg(long = "T", value_parser = clap::value_parser!(u64).range(1..))]
    t_len: u64,
    /// Output CSV; metadata goes to `<out>.meta.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct FitArgs {
    /// Training series (CSV).
    #[arg(long)]
    data: PathBuf,
    /// Output model file (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct EstimateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Series supplying the covariate path and initial state.
    #[arg(long)]
    data: PathBuf,
    /// Treatment path: a 0/1 string of the series length, or all-ones,
    /// all-zeros, alternating-01, alternating-10.
    #[arg(long)]
    w1: String,
    #[arg(long)]
    w2: String,
    /// Inclusive 1-based window `t1:t2`; defaults to the whole series.
    #[arg(long)]
    window: Option<String>,
    /// Monte-Carlo draws.
    #[arg(long)]
    mc: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Series with a counterfactual column.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "all-ones")]
    w1: String,
    #[arg(long, default_value = "all-zeros")]
    w2: String,
    #[arg(long)]
    mc: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct DiagnoseArgs {
    #[arg(long)]
    model: PathBuf,
    /// Output heatmap CSV (`t,l,weight`).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct BenchArgs {
    /// illustration-{linear,quadratic,exponential}, td{2,4,6}, td{2,4,6}-iid,
    /// curve-td{2,4,6} or null-effect.
    #[arg(long)]
    experiment: String,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    replications: u64,
    /// Optimization budget; overrides the config file.
    #[arg(long, value_enum)]
    budget: Option<Budget>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let seed = cfg.seed(cli.seed);
    let echo = |out: &Path, extra: serde_json::Value| -> Result<()> {
        let mut body = json!({ "command": &cli.command, "config_file": &cli.config, "overrides": &cfg, "seed": seed });
        if let (Some(b), serde_json::Value::Object(e)) = (body.as_object_mut(), extra) {
            b.extend(e);
        }
        write_json(&sibling(out, "config.json"), &body)
    };
    match &cli.command {
        Command::Generate(a) => {
            let data = generate(a, seed)?;
            let mut buf = Vec::new();
            write_csv(&data, &mut buf)?;
            write_atomic(&a.out, &buf)?;
            let mut meta = json!({ "generator": data.meta.generator, "seed": seed, "length": data.len() });
            if data.y_cf.is_some() {
                let n = data.len();
                let ep = data.true_effect_path(&vec![1; n], &vec![0; n])?;
                meta["true_ate_all_ones_vs_all_zeros"] = json!(effects::ate(ep.view(), 1, n)?);
            }
            if let Some(kind) = a.illustration {
                meta["true_ate_stationary"] = json!(illustration_true_ate(&IllustrationParams::published(kind), 100_000, seed));
            }
            write_json(&sibling(&a.out, "meta.json"), &meta)?;
            echo(&a.out, json!({}))?;
        }
        Command::Fit(a) => {
            let data = load_csv(&a.data)?;
            let pipeline = cfg.pipeline(seed);
            let model = FittedModel::fit(&data, &pipeline).context("fitting")?;
            model.save(&a.out)?;
            echo(&a.out, json!({ "pipeline": pipeline }))?;
        }
        Command::Estimate(a) => {
            let model = load_model(&a.model)?;
            let data = load_csv(&a.data)?;
            let n = data.len();
            let (w1, w2) = (treatment_path(&a.w1, n)?, treatment_path(&a.w2, n)?);
            let window = match &a.window {
                Some(s) => parse_window(s)?,
                None => (1, n),
            };
            let mc = cfg.mc_samples(a.mc, 1000);
            let est = model.estimate(&data, &w1, &w2, window, mc, seed)?;
            write_json(&a.out, &est)?;
            echo(&a.out, json!({ "mc_samples": mc }))?;
            println!("ATE {:.6} (stderr {:.6}) over t={}..{}", est.ate, est.ate_stderr, window.0, window.1);
        }
        Command::Evaluate(a) => {
            let model = load_model(&a.model)?;
            let data = load_csv(&a.data)?;
            if data.y_cf.is_none() {
                bail!("{} has no counterfactual column; evaluation needs simulated data", a.data.display());
            }
            let n = data.len();
            let (w1, w2) = (treatment_path(&a.w1, n)?, treatment_path(&a.w2, n)?);
            let mc = cfg.mc_samples(a.mc, 1000);
            let est = model.estimate(&data, &w1, &w2, (1, n), mc, seed)?;
            let truth = data.true_effect_path(&w1, &w2)?;
            let true_ate = effects::ate(truth.view(), 1, n)?;
            let pred = model.predict_factual(&data, mc, seed)?;
            let rmse = ((&pred - &data.y).mapv(|v| v * v).sum() / n as f64).sqrt();
            let metrics = json!({
                "window": [1, n],
                "true_ate": true_ate,
                "estimated_ate": est.ate,
                "eps_ate": effects::eps_ate(true_ate, est.ate),
                "sqrt_pehe": effects::eps_pehe(truth.view(), est.ep.view(), 1, n)?.sqrt(),
                "factual_rmse": rmse,
                "mc_samples": mc,
            });
            write_json(&a.out, &metrics)?;
            echo(&a.out, json!({ "mc_samples": mc }))?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
        }
        Command::Diagnose(a) => {
            let model = load_model(&a.model)?;
            let diag = weight_diagnostics(&model.model)?;
            let mut buf = Vec::new();
            diag.write_csv(&mut buf)?;
            write_atomic(&a.out, &buf)?;
            echo(&a.out, json!({}))?;
            println!("mean anchor weight {:.6}", diag.mean());
        }
        Command::Bench(a) => {
            let bench_cfg = cfg.bench(a.budget);
            fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
            run_bench(a, seed, &bench_cfg)?;
            echo(&a.out.join("report"), json!({ "bench": bench_cfg }))?;
        }
    }
    Ok(())
}

fn generate(a: &GenerateArgs, seed: u64) -> Result<TimeSeriesDataset<f64>> {
    let t_len = a.t_len as usize;
    let noise = derive_seed(seed, &[NOISE]);
    let scm = match (a.illustration, a.td, a.symmetric) {
        (Some(kind), None, false) => make_illustration(kind),
        (None, Some(layers), false) => make_td(TdDepth::from_layers(layers as usize)?, a.iid, TdDims::default(), derive_seed(seed, &[GENERATOR]))?,
        (None, None, true) => make_symmetric_linear(),
        _ => bail!("choose exactly one of --illustration, --td, --symmetric"),
    };
    Ok(simulate(&scm, t_len, noise)?)
}

fn run_bench(a: &BenchArgs, seed: u64, cfg: &bench::BenchConfig<f64>) -> Result<()> {
    let reps = a.replications as usize;
    let name = a.experiment.as_str();
    let depth = |s: &str| -> Result<TdDepth> {
        let n: usize = s.parse().with_context(|| format!("unknown experiment `{name}`"))?;
        Ok(TdDepth::from_layers(n)?)
    };
    if let Some(kind) = name.strip_prefix("illustration-") {
        let kind: OutcomeKind = kind.parse().map_err(anyhow::Error::msg)?;
        return write_report(&a.out, &bench::run_illustration(kind, reps, seed, cfg)?);
    }
    if let Some(d) = name.strip_prefix("curve-td") {
        let seeds: Vec<u64> = (0..reps as u64).map(|r| seed + r).collect();
        let curve = bench::convergence_curve(depth(d)?, &bench::default_train_lengths(), &seeds, cfg)?;
        let mut buf = Vec::new();
        curve.write_csv(&mut buf)?;
        write_atomic(&a.out.join("curve.csv"), &buf)?;
        return write_json(&a.out.join("curve.json"), &curve);
    }
    if let Some(rest) = name.strip_prefix("td") {
        let (d, iid) = match rest.strip_suffix("-iid") {
            Some(d) => (d, true),
            None => (rest, false),
        };
        return write_report(&a.out, &bench::run_td(depth(d)?, iid, reps, seed, cfg)?);
    }
    if name == "null-effect" {
        let rows = bench::run_null_effect(reps, seed, cfg)?;
        let mut buf = b"replication,seed,mean_ep,t,df,p_value,error\n".to_vec();
        for r in &rows {
            let t = r.test.as_ref();
            let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            buf.extend(
                format!(
                    "{},{},{},{},{},{},{}\n",
                    r.replication,
                    r.seed,
                    cell(t.map(|t| t.mean)),
                    cell(t.map(|t| t.t)),
                    cell(t.map(|t| t.df)),
                    cell(t.map(|t| t.p_value)),
                    r.error.as_deref().unwrap_or("")
                )
                .bytes(),
            );
        }
        write_atomic(&a.out.join("null_effect.csv"), &buf)?;
        return write_json(&a.out.join("null_effect.json"), &rows);
    }
    bail!("unknown experiment `{name}`")
}

fn write_report(dir: &Path, report: &bench::ExperimentReport) -> Result<()> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_atomic(&dir.join("report.csv"), &buf)?;
    write_atomic(&dir.join("report.json"), report.to_json()?.as_bytes())?;
    for s in &report.summaries {
        let cell = |a: &Option<bench::Aggregate>| a.as_ref().map_or("n/a".to_string(), |a| format!("{:.4} ± {:.4}", a.mean, a.stderr));
        println!("{:<22} eps_ATE {:<18} sqrt_PEHE {}", s.variant, cell(&s.eps_ate), cell(&s.sqrt_pehe));
    }
    Ok(())
}

fn load_csv(path: &Path) -> Result<TimeSeriesDataset<f64>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_csv(file).with_context(|| format!("reading {}", path.display()))
}

fn load_model(path: &Path) -> Result<FittedModel<f64>> {
    FittedModel::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

/// `dir/name.csv` → `dir/name.csv.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn treatment_path(spec: &str, n: usize) -> Result<Vec<u8>> {
    Ok(match spec {
        "all-ones" => vec![1; n],
        "all-zeros" => vec![0; n],
        "alternating-01" => alternating(n, 0),
        "alternating-10" => alternating(n, 1),
        lit => {
            let path: Vec<u8> = lit
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    other => Err(anyhow::anyhow!("treatment path `{spec}`: unexpected character `{other}`")),
                })
                .collect::<Result<_>>()?;
            if path.len() != n {
                bail!("treatment path has length {} but the series has {n} steps", path.len());
            }
            path
        }
    })
}

fn parse_window(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once(':').with_context(|| format!("window `{s}` is not of the form t1:t2"))?;
    Ok((a.trim().parse().context("window start")?, b.trim().parse().context("window end")?))
}
