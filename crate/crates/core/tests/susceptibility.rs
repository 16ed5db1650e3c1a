#![allow(clippy::excessive_precision)]

use std::sync::OnceLock;

use proptest::prelude::*;

use wsaw_core::cov_decomp::DecompositionConfig;
use wsaw_core::lattice_green::BUBBLE_LOG_COEFFICIENT;
use wsaw_core::rg_flow::solve_boundary_value;
use wsaw_core::susceptibility::*;

const A: f64 = 0.309866780462120428;

fn flow_ctx() -> &'static PredictionContext {
    static C: OnceLock<PredictionContext> = OnceLock::new();
    C.get_or_init(|| PredictionContext::with_flow(&DecompositionConfig::default(), 16).unwrap())
}

/// Adaptive Simpson on `[a, b]`.
fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

/// `∫₀^u (−log v)^γ dv = e^{-y₀} ∫₀^∞ (y₀ + x)^γ e^{-x} dx` with `y₀ = −log u`.
fn implicit_lhs(gamma: f64, u: f64) -> f64 {
    let y0 = -u.ln();
    let inner = simpson(|x| (y0 + x).powf(gamma) * (-x).exp(), 0.0, 80.0, 1e-15);
    u * inner
}

#[test]
fn leading_mode_is_minus_a_g() {
    let ctx = PredictionContext::leading(&DecompositionConfig::default()).unwrap();
    assert!((ctx.a - A).abs() < 1e-12);
    assert_eq!(predict_nu_c(0.0, NuCMode::Leading, &ctx).unwrap(), 0.0);
    for g in [0.001, 0.02, 0.1] {
        let nu = predict_nu_c(g, NuCMode::Leading, &ctx).unwrap();
        assert_eq!(nu, -ctx.a * g);
        assert!(nu >= -A * g * (1.0 + 1e-12) && nu <= 0.0);
    }
    assert!(predict_nu_c(0.2, NuCMode::Leading, &ctx).is_err());
    assert!(predict_nu_c(-0.01, NuCMode::Leading, &ctx).is_err());
    assert!(predict_nu_c(0.01, NuCMode::Flow, &ctx).is_err());
}

#[test]
fn flow_mode_agrees_to_second_order() {
    let ctx = flow_ctx();
    assert_eq!(predict_nu_c(0.0, NuCMode::Flow, ctx).unwrap(), 0.0);
    let gs = [0.04, 0.02, 0.01, 0.005];
    let cs: Vec<f64> = gs
        .iter()
        .map(|&g| {
            let flow = predict_nu_c(g, NuCMode::Flow, ctx).unwrap();
            let lead = predict_nu_c(g, NuCMode::Leading, ctx).unwrap();
            assert!(flow < 0.0);
            (flow - lead) / (g * g)
        })
        .collect();
    let (lo, hi) = cs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &c| (a.min(c), b.max(c)));
    assert!(hi - lo < 0.1 * lo.abs(), "{cs:?}");
    // the quadratic truncation places ν_c a distance c g² below −𝖺g, c < 0
    assert!(hi < 0.0 && lo > -1.0, "{cs:?}");
}

#[test]
fn flow_mode_matches_the_critical_trajectory() {
    let ctx = flow_ctx();
    let g = 0.03;
    let nu = predict_nu_c(g, NuCMode::Flow, ctx).unwrap();
    // z₀ᶜ vanishes under the default tables, so g₀ = g and ν_c = μ₀ᶜ
    let t = solve_boundary_value(g, ctx.massless.clone().unwrap(), 16).unwrap();
    assert!((nu - t.mu0_c()).abs() < 1e-12);
    let p = Prediction::new(g, NuCMode::Flow, ctx, None).unwrap();
    assert_eq!((p.z0c, p.nu_c, p.gamma), (0.0, nu, 0.25));
}

#[test]
fn susceptibility_formula_algebra() {
    let (g, eps) = (0.02, 1e-4);
    let chi = predict_susceptibility(g, eps, None).unwrap();
    assert!((chi - 3108.0928456105751802).abs() < 1e-10 * chi);
    let ratio = predict_susceptibility(g, eps / 10.0, None).unwrap() / chi;
    let exact = 10.0 * ((10.0 / eps).ln() / (1.0 / eps).ln()).powf(0.25);
    assert!((ratio - exact).abs() < 1e-13 * exact);
    let g16 = predict_susceptibility(16.0 * g, eps, None).unwrap() / chi;
    assert!((g16 - 2.0).abs() < 1e-14);
    let m2 = m2_of_eps(g, eps, 0.0, None).unwrap();
    assert!((m2 - 0.00032174071035627415686).abs() < 1e-15);
    assert!((m2 * chi - 1.0).abs() < 1e-14);
    let corrected = predict_susceptibility(g, eps, Some(1.25)).unwrap();
    assert!((corrected * 1.25 - chi).abs() < 1e-12 * chi);
}

#[test]
fn inverse_mass_reproduces_the_susceptibility() {
    let (g, eps) = (0.02, 1e-6);
    let p = Prediction::new(g, NuCMode::Flow, flow_ctx(), None).unwrap();
    let from_mass = (1.0 + p.z0c) / p.m2_of_eps(eps).unwrap();
    let chi = p.chi_of_eps(eps).unwrap();
    assert!((from_mass / chi - 1.0).abs() < 0.15);
    let eps_z = m2_of_eps(g, eps, -0.05, None).unwrap() * predict_susceptibility(g, eps, None).unwrap();
    assert!((eps_z - 0.95).abs() < 1e-14);
}

#[test]
fn predictions_are_monotone_in_epsilon() {
    let g = 0.02;
    let grid: Vec<f64> = (0..40).map(|k| 10f64.powf(-1.0 - 0.25 * k as f64)).collect();
    let chis: Vec<f64> = grid.iter().map(|&e| predict_susceptibility(g, e, None).unwrap()).collect();
    let m2s: Vec<f64> = grid.iter().map(|&e| m2_of_eps(g, e, 0.0, None).unwrap()).collect();
    assert!(chis.windows(2).all(|w| w[1] > w[0]));
    assert!(m2s.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
    assert!(predict_susceptibility(g, 0.4, None).is_err());
}

#[test]
fn amplitude_vanishes_with_the_coupling() {
    let ctx = flow_ctx();
    let mut prev = f64::INFINITY;
    for g in [0.04, 0.01, 0.0025, 6.25e-4] {
        let a = amplitude(g, 1.0).unwrap();
        assert!(a < prev);
        prev = a;
        assert!((a / (BUBBLE_LOG_COEFFICIENT * g).powf(0.25) - 1.0).abs() < 1e-15);
        let c0 = solve_boundary_value(g, ctx.massless.clone().unwrap(), 16)
            .unwrap()
            .with_derivative()
            .unwrap()
            .derivative_summary()
            .unwrap()
            .c_est;
        let corrected = amplitude(g, c0).unwrap() / (BUBBLE_LOG_COEFFICIENT * g).powf(0.25);
        assert!((corrected - 1.0).abs() < g);
    }
    assert!(amplitude(1e-8, 1.0).unwrap() < 0.01);
    assert!(amplitude(0.0, 1.0).is_err() && amplitude(0.01, 0.0).is_err());
}

#[test]
fn change_of_variables_examples() {
    let c = change_variables(1e-2, 0.05, 0.0, 0.0).unwrap();
    assert_eq!((c.g, c.nu), (0.05, 1e-2));
    let c = change_variables(0.0, 0.05, -0.05, 0.0).unwrap();
    assert_eq!(c.g, 0.05 / 0.9025);
    assert!(invert_g(0.01, |g0| Ok(g0 * 0.0 - 1.5), 0.1).is_err());
}

proptest! {
    #[test]
    fn change_of_variables_round_trip(m2 in 0.0f64..1.0, g in 0.0f64..0.1, nu in -1.0f64..1.0, z0 in -0.5f64..0.5) {
        let (g0, nu0) = renormalised_parameters(m2, g, nu, z0).unwrap();
        let back = change_variables(m2, g0, z0, nu0).unwrap();
        prop_assert!((back.g - g).abs() <= 1e-15 * g.max(1e-300) + 1e-300);
        prop_assert!((back.nu - nu).abs() <= 1e-14);
    }

    #[test]
    fn inversion_round_trip(g0 in 1e-4f64..0.1, a in -2.0f64..0.0, b in -2.0f64..2.0) {
        let z0c = move |x: f64| Ok(a * x + b * x * x);
        let g = change_variables(0.0, g0, z0c(g0).unwrap(), 0.0).unwrap().g;
        let back = invert_g(g, z0c, 0.1).unwrap();
        prop_assert!((back - g0).abs() < 1e-12);
    }

    #[test]
    fn susceptibility_mass_product(g in 1e-4f64..0.1, log_eps in -30.0f64..-1.01, z0 in -0.5f64..0.5) {
        let eps = log_eps.exp();
        let chi = predict_susceptibility(g, eps, None).unwrap();
        let m2 = m2_of_eps(g, eps, z0, None).unwrap();
        prop_assert!((m2 * chi / (1.0 + z0) - 1.0).abs() < 1e-13);
    }
}

#[test]
fn ode_lemma_table() {
    let rows = ode_asymptotics(0.25, 1e-8).unwrap();
    assert_eq!(rows.first().unwrap().t, 1e-2);
    assert!((rows.last().unwrap().t - 1e-8).abs() < 1e-22);
    let gaps: Vec<f64> = rows.iter().map(|r| (r.ratio - 1.0).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]));
    assert!(gaps.last().unwrap() < &0.2);
    let at = |t: f64| rows.iter().find(|r| (r.t / t - 1.0).abs() < 1e-9).unwrap();
    assert!((at(1e-2).ratio - 0.93602285374897689).abs() < 1e-12);
    assert!((at(1e-4).ratio - 0.96158171180267789).abs() < 1e-12);
    assert!((at(1e-8).ratio - 0.9777700994698129).abs() < 1e-12);
    assert!((at(1e-8).u - 4.7196558677490335858e-9).abs() < 1e-20);
    for r in &rows {
        let lhs = implicit_lhs(0.25, r.u);
        assert!((lhs - r.t).abs() < 1e-10 * r.t, "t={}: {lhs}", r.t);
        assert!((r.reference - r.t * (-r.t.ln()).powf(-0.25)).abs() < 1e-15 * r.reference);
    }
}

#[test]
fn ode_lemma_without_log_is_identity() {
    for r in ode_asymptotics(0.0, 1e-6).unwrap() {
        assert_eq!(r.u, r.t);
        assert_eq!(r.ratio, 1.0);
    }
    for gamma in [0.1, 0.5, 0.9] {
        let u = solve_implicit(gamma, 1e-5).unwrap();
        assert!((implicit_lhs(gamma, u) / 1e-5 - 1.0).abs() < 1e-10);
    }
}
