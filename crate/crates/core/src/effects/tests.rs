use ndarray::{array, Array1, Array2};

use super::*;
use crate::aux::{fit_aux_heads, AuxConfig};
use crate::scm::{make_illustration, simulate, IllustrationParams, OutcomeKind};
use crate::vi::{fit, FitConfig, Observations};

/// `f_y(w, z, s) = w` with no confounders.
struct Identity;

impl Interventional<f64> for Identity {
    fn draw<R: Rng>(&self, x: ArrayView2<'_, f64>, _: &mut R) -> Result<ChainDraw<f64>> {
        let t = x.nrows();
        Ok(ChainDraw { s: Array2::zeros((t, 1)), w: Array1::zeros(t), y: Array1::zeros(t), z: Array2::zeros((t, 0)) })
    }

    fn outcome(&self, w: f64, _: ArrayView1<'_, f64>, _: ArrayView1<'_, f64>) -> Result<f64> {
        Ok(w)
    }
}

fn alternating(t: usize, first: u8) -> Vec<u8> {
    (0..t).map(|i| (i as u8 + first) % 2).collect()
}

#[test]
fn degenerate_head_returns_the_path() {
    let x = Array2::zeros((6, 1));
    let w = alternating(6, 1);
    let out = expected_outcome_do(&Identity, x.view(), &w, 3, 0).unwrap();
    assert_eq!(out.to_vec(), vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    assert!(expected_outcome_do(&Identity, x.view(), &w, 0, 0).is_err());
    assert!(expected_outcome_do(&Identity, x.view(), &w[..5], 3, 0).is_err());
    assert!(expected_outcome_do(&Identity, x.view(), &[2, 0, 0, 0, 0, 0], 3, 0).is_err());
}

#[test]
fn identities_under_common_random_numbers() {
    let scm = make_illustration::<f64>(OutcomeKind::Exponential);
    let x = Array2::zeros((25, 1));
    let a = alternating(25, 0);
    let b = vec![1u8; 25];
    let same = effect_path(&scm, x.view(), &a, &a, 50, 3).unwrap();
    assert!(same.ep.iter().all(|&v| v == 0.0));
    assert_eq!(ate(same.ep.view(), 1, 25).unwrap(), 0.0);
    let fwd = effect_path(&scm, x.view(), &a, &b, 50, 3).unwrap();
    let back = effect_path(&scm, x.view(), &b, &a, 50, 3).unwrap();
    assert_eq!(fwd.ep, -&back.ep);
    let ya = expected_outcome_do(&scm, x.view(), &a, 50, 3).unwrap();
    assert_eq!(ya, expected_outcome_do(&scm, x.view(), &a, 50, 3).unwrap());
    let est = estimate(&scm, x.view(), &a, &b, (1, 25), 50, 3).unwrap();
    assert_eq!(est.ate, est.ep.sum() / 25.0);
    assert_eq!(est.ep, fwd.ep);
}

#[test]
fn linear_ground_truth_effect_is_c2() {
    let scm = make_illustration::<f64>(OutcomeKind::Linear);
    let x = Array2::zeros((30, 1));
    let p = effect_path(&scm, x.view(), &[1; 30], &[0; 30], 10_000, 1).unwrap();
    for (e, s) in p.ep.iter().zip(p.stderr.iter()) {
        assert!((e - 1.7).abs() <= (3.0 * s).max(1e-9), "{e} ± {s}");
    }
}

#[test]
fn quadratic_ground_truth_matches_analytic_path() {
    let params = IllustrationParams::published(OutcomeKind::Quadratic);
    let scm = make_illustration::<f64>(OutcomeKind::Quadratic);
    let t_len = 40;
    let x = Array2::zeros((t_len, 1));
    let p = effect_path(&scm, x.view(), &vec![1; t_len], &vec![0; t_len], 20_000, 2).unwrap();
    // s starts at 0, so E[s_t] = a₀ Σ_{k<t} a₁^k and EP_t = c₂(2c₀ + 2c₁E[s_t] + c₂).
    let mut mean_s = 0.0;
    for t in 0..t_len {
        mean_s = params.a0 + params.a1 * mean_s;
        let exact = params.c2 * (2.0 * params.c0 + 2.0 * params.c1 * mean_s + params.c2);
        assert!((p.ep[t] - exact).abs() <= 4.0 * p.stderr[t], "t={t}: {} vs {exact} ± {}", p.ep[t], p.stderr[t]);
    }
}

#[test]
fn monte_carlo_error_shrinks_at_root_rate() {
    let scm = make_illustration::<f64>(OutcomeKind::Quadratic);
    let x = Array2::zeros((20, 1));
    let (ones, zeros) = (vec![1u8; 20], vec![0u8; 20]);
    let pts: Vec<(f64, f64)> = [100usize, 1000, 10_000]
        .iter()
        .map(|&m| {
            let e = estimate(&scm, x.view(), &ones, &zeros, (1, 20), m, 4).unwrap();
            ((m as f64).ln(), e.ate_stderr.ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
}

#[test]
fn ate_examples() {
    assert_eq!(ate(array![1.0, 2.0, 3.0].view(), 1, 3).unwrap(), 2.0);
    assert_eq!(ate(array![1.0, 2.0, 3.0].view(), 2, 2).unwrap(), 2.0);
    assert!((ate(Array1::from_elem(5, 0.7f64).view(), 1, 5).unwrap() - 0.7).abs() < 1e-15);
    for (t1, t2) in [(0, 2), (3, 2), (1, 4)] {
        assert!(ate(array![1.0, 2.0, 3.0].view(), t1, t2).is_err());
    }
}

#[test]
fn metric_examples() {
    assert!((eps_ate(1.7f64, 1.5) - 0.2).abs() < 1e-15);
    assert_eq!(eps_ate(1.7, 1.7), 0.0);
    let v: f64 = eps_pehe(array![1.0, 1.0].view(), array![0.0, 0.0].view(), 1, 2).unwrap();
    assert_eq!((v, v.sqrt()), (1.0, 1.0));
    assert_eq!(eps_pehe(array![1.0, 2.0].view(), array![1.0, 2.0].view(), 1, 2).unwrap(), 0.0);
    assert!(eps_pehe(array![1.0].view(), array![1.0, 2.0].view(), 1, 1).is_err());
    assert!(eps_pehe(array![1.0, 2.0].view(), array![1.0, 3.0].view(), 1, 2).unwrap() > 0.0);
}

#[test]
fn fitted_chain_estimates_the_linear_effect() {
    let scm = make_illustration::<f64>(OutcomeKind::Linear);
    let ds = simulate(&scm, 120, 5).unwrap();
    let obs = Observations::from_dataset(&ds).unwrap();
    let model = fit(&obs, &FitConfig { samples: 1, outer_iters: 5, restarts: 1, ..FitConfig::default() }).unwrap();
    let heads = fit_aux_heads(&obs, &AuxConfig::default()).unwrap();
    let start = crate::aux::ChainStart::of(&obs);
    let chain = FittedChain { model: &model, heads: &heads, start: &start };
    let est = estimate(&chain, obs.x.view(), &[1; 120], &[0; 120], (1, 120), 100, 0).unwrap();
    assert!(est.ate.is_finite());
    assert!((est.ate - 1.7).abs() < 0.8, "{}", est.ate);
    let again = estimate(&chain, obs.x.view(), &[1; 120], &[0; 120], (1, 120), 100, 0).unwrap();
    assert_eq!(est, again);
}
