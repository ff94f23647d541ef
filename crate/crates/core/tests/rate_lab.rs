mod oracles;

use oldroyd_core::decay::{DiagonalSemigroup, SpectralProfile};
use oldroyd_core::rates::{
    alignment_report, alpha, ball_energy, continuum_ball_energy, fit_loglog_slope, predicted_exponents,
    two_sided_check, AlignmentTolerances, LowerBoundCase, Quantity, TimeSeries, Verdict,
};
use oldroyd_core::solver::random_band;
use oldroyd_core::spectral::{sobolev_seminorm_sq, FourierGrid, SpectralVectorField};
use oracles::{geometric, ols_slope};
use proptest::prelude::*;

fn power_series(name: &str, exponent: f64, times: &[f64]) -> TimeSeries {
    let vals = times.iter().map(|t| 3.0 * (1.0 + t).powf(exponent)).collect();
    TimeSeries::from_columns(times.to_vec(), vec![(name.to_string(), vals)]).unwrap()
}

#[test]
fn alpha_matches_lp_rates() {
    // p = 1 and p = 4/3 rates (3/2)(2/p - 1)
    assert_eq!(alpha(0.0, 0.0).unwrap(), 1.5);
    assert!((alpha(-0.75, -0.75).unwrap() - 1.5 * (2.0 * 0.75 - 1.0)).abs() < 1e-15);
    assert_eq!(alpha(2.0, 2.0).unwrap(), 1.5);
    assert!(alpha(-1.5, 0.0).is_err());
}

#[test]
fn prediction_cases() {
    let p = predicted_exponents(0.0, 0.0).unwrap();
    assert_eq!(p.exponent(Quantity::Energy), Some(-1.5));
    assert_eq!(p.exponent(Quantity::Grad(1)), Some(-2.5));
    assert_eq!(p.exponent(Quantity::TauGrad(0)), Some(-2.5));
    assert_eq!(p.exponent(Quantity::Elastic), Some(-3.5));
    assert_eq!(p.two_sided(), Some((LowerBoundCase::A, -2.5)));

    let p = predicted_exponents(0.0, -1.4).unwrap();
    assert_eq!(p.lower_case_a, None);
    let (case, e) = p.two_sided().unwrap();
    assert_eq!(case, LowerBoundCase::B);
    assert!((e + 2.1).abs() < 1e-12);
    // the case-b exponent is the table's τ² exponent
    assert!((p.exponent(Quantity::TauGrad(0)).unwrap() - e).abs() < 1e-12);

    let p = predicted_exponents(1.0, 1.0).unwrap();
    assert!(p.lower_case_a.is_none() && p.lower_case_b.is_none());
}

#[test]
fn two_sided_case_b_and_not_applicable() {
    let times = geometric(1e2, 1e4, 30);
    let p = predicted_exponents(0.5, -1.2).unwrap();
    let (case, e) = p.two_sided().unwrap();
    assert_eq!(case, LowerBoundCase::B);
    assert!((e + 2.3).abs() < 1e-12);
    let s = power_series("u_h1sq", e, &times)
        .with_column("tau_l2sq", times.iter().map(|t| (1.0 + t).powf(e)).collect())
        .unwrap();
    assert!(two_sided_check(&s, &p, (1e2, 1e4), 1e-6).unwrap().passed());

    let q = predicted_exponents(1.0, 1.0).unwrap();
    let v = two_sided_check(&s, &q, (1e2, 1e4), 0.1).unwrap();
    assert!(v.case.is_none() && !v.passed());
    assert!(v.records.iter().all(|r| r.verdict == Verdict::NotApplicable));
}

#[test]
fn fit_examples() {
    let times: Vec<f64> = (0..200).map(|i| 0.5 * i as f64).collect();
    let s = power_series("x", -2.5, &times);
    let f = fit_loglog_slope(&s, "x", (1.0, 99.0)).unwrap();
    assert!((f.slope + 2.5).abs() < 1e-6);

    let wavy: Vec<f64> = times.iter().map(|t| (1.0 + t).powf(-2.5) * (1.0 + 0.1 * (1.0 + t).ln().sin())).collect();
    let s = TimeSeries::from_columns(times.clone(), vec![("x".into(), wavy)]).unwrap();
    let f = fit_loglog_slope(&s, "x", (1.0, 99.0)).unwrap();
    assert!((f.slope + 2.5).abs() < 0.1 && f.stderr > 0.0);

    let s = TimeSeries::from_columns(times.clone(), vec![("x".into(), vec![2.0; times.len()])]).unwrap();
    assert!(fit_loglog_slope(&s, "x", (1.0, 99.0)).unwrap().slope.abs() < 1e-12);

    let mut zeros = vec![1.0; times.len()];
    zeros[10] = 0.0;
    let s = TimeSeries::from_columns(times.clone(), vec![("x".into(), zeros)]).unwrap();
    assert!(fit_loglog_slope(&s, "x", (1.0, 99.0)).is_err());
    assert!(fit_loglog_slope(&s, "x", (1.0, 1.5)).is_err());
}

#[test]
fn alignment_examples() {
    let times: Vec<f64> = (0..=60).map(|i| i as f64).collect();
    let ones = vec![1.0; times.len()];
    let tau: Vec<f64> = times.iter().map(|t| (1.0 + t).powf(-2.5)).collect();
    let aligned = TimeSeries::from_columns(
        times.clone(),
        vec![("tau_l2sq".into(), tau.clone()), ("eps_l2sq".into(), vec![0.0; times.len()]), ("align_cos".into(), ones)],
    )
    .unwrap();
    let r = alignment_report(&aligned, &AlignmentTolerances::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);

    // u ≡ 0: ε = τ, cosine undefined and reported as 0
    let decaying: Vec<f64> = times.iter().map(|t| (-2.0 * t).exp()).collect();
    let degenerate = TimeSeries::from_columns(
        times.clone(),
        vec![
            ("tau_l2sq".into(), decaying.clone()),
            ("eps_l2sq".into(), decaying),
            ("align_cos".into(), vec![0.0; times.len()]),
        ],
    )
    .unwrap();
    let r = alignment_report(&degenerate, &AlignmentTolerances::default()).unwrap();
    assert_eq!(r.cosine_verdict, Verdict::Fail);
    assert_eq!(r.verdict, Verdict::Fail);

    let zero_tau = TimeSeries::from_columns(
        times.clone(),
        vec![
            ("tau_l2sq".into(), vec![0.0; times.len()]),
            ("eps_l2sq".into(), vec![0.0; times.len()]),
            ("align_cos".into(), vec![0.0; times.len()]),
        ],
    )
    .unwrap();
    assert!(alignment_report(&zero_tau, &AlignmentTolerances::default()).is_err());

    // ratio ∝ (1+t)^{-1} and cosine rising to 1
    let eps: Vec<f64> = tau.iter().zip(&times).map(|(x, t)| x / (1.0 + t)).collect();
    let cos: Vec<f64> = eps.iter().zip(&tau).map(|(e, x)| 1.0 - 0.5 * e / x).collect();
    let s = TimeSeries::from_columns(
        times,
        vec![("tau_l2sq".into(), tau), ("eps_l2sq".into(), eps), ("align_cos".into(), cos)],
    )
    .unwrap();
    let r = alignment_report(&s, &AlignmentTolerances::default()).unwrap();
    assert!((r.ratio_slope.unwrap().slope + 1.0).abs() < 1e-9);
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn box_ball_energy_limits() {
    let g = FourierGrid::new(12, 2.0).unwrap();
    let (u, _) = random_band(&g, 0.5, 1.5, 1.0, 3).unwrap();
    let full = sobolev_seminorm_sq(&u, 0).unwrap();
    let all = ball_energy(&u, 10.0).unwrap();
    assert!((all - full).abs() <= 1e-14 * full);
    assert_eq!(ball_energy(&u, 0.1).unwrap(), 0.0);

    let mut mean = SpectralVectorField::zeros(&g);
    let zero = g.index_of([0, 0, 0]).unwrap();
    mean.set_mode(zero, [num_complex::Complex64::new(0.5, 0.0); 3]);
    let e = ball_energy(&mean, 0.1).unwrap();
    assert!((e - 0.75 * g.volume()).abs() < 1e-12 * e);
    assert!(ball_energy(&u, 0.0).is_err());
}

#[test]
fn heat_evolved_ball_energy_tracks_rate() {
    let sg = DiagonalSemigroup::new(1.0, 1.0, 3).unwrap();
    let times = geometric(1e1, 1e3, 16);
    let logt: Vec<f64> = times.iter().map(|t| (1.0 + t).ln()).collect();
    for r_star in [0.0, 1.0] {
        let v = SpectralProfile::power_gauss(r_star).unwrap();
        let vals: Vec<f64> =
            times.iter().map(|&t| continuum_ball_energy(&v, &sg, t, (1.0 + t).powf(-0.5)).unwrap().ln()).collect();
        let slope = ols_slope(&logt, &vals);
        assert!((slope + 1.5 + r_star).abs() < 0.15, "r* = {r_star}: {slope}");
    }
}

proptest! {
    #[test]
    fn exponent_table_is_ordered(r_u in -1.49f64..3.0, r_tau in -1.49f64..3.0) {
        let p = predicted_exponents(r_u, r_tau).unwrap();
        let e = |q| p.exponent(q).unwrap();
        prop_assert!((e(Quantity::Elastic) - (e(Quantity::TauGrad(0)) - 1.0)).abs() < 1e-12);
        prop_assert!((e(Quantity::TauGrad(0)) - e(Quantity::Grad(1))).abs() < 1e-12);
        for k in 0..=2u8 {
            prop_assert!((e(Quantity::Grad(k)) - (e(Quantity::Grad(0)) - k as f64)).abs() < 1e-12);
        }
        prop_assert!((e(Quantity::TauGrad(1)) - (e(Quantity::TauGrad(0)) - 1.0)).abs() < 1e-12);
        prop_assert!(p.alpha > 0.0 && p.alpha <= 1.5);
    }

    #[test]
    fn alpha_is_monotone_and_saturates(r_u in -1.49f64..3.0, r_tau in -1.49f64..3.0, d in 0.0f64..2.0) {
        let a = alpha(r_u, r_tau).unwrap();
        prop_assert!(alpha(r_u + d, r_tau).unwrap() >= a);
        prop_assert!(alpha(r_u, r_tau + d).unwrap() >= a);
        prop_assert!(a <= 1.5);
        if r_u >= 0.0 && r_tau >= -1.0 {
            prop_assert_eq!(a, 1.5);
        }
    }

    #[test]
    fn fit_is_exact_on_power_laws(e in -5.0f64..1.0, c in 1e-6f64..1e6) {
        let times = geometric(1.0, 1e3, 40);
        let vals = times.iter().map(|t| c * (1.0 + t).powf(e)).collect();
        let s = TimeSeries::from_columns(times, vec![("x".into(), vals)]).unwrap();
        let f = fit_loglog_slope(&s, "x", (1.0, 1e3)).unwrap();
        prop_assert!((f.slope - e).abs() < 1e-9);
        prop_assert!(f.max_residual < 1e-10);
    }

    #[test]
    fn two_sided_passes_exact_power_laws(r_u in -1.4f64..0.0, r_tau in -1.4f64..1.0, tol in 1e-6f64..0.5) {
        let p = predicted_exponents(r_u, r_tau).unwrap();
        prop_assume!(p.two_sided().is_some());
        let (_, e) = p.two_sided().unwrap();
        let times = geometric(1e2, 1e4, 20);
        let s = power_series("u_h1sq", e, &times)
            .with_column("tau_l2sq", times.iter().map(|t| 0.1 * (1.0 + t).powf(e)).collect())
            .unwrap();
        prop_assert!(two_sided_check(&s, &p, (1e2, 1e4), tol).unwrap().passed());
    }
}
