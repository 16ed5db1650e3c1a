#![allow(clippy::excessive_precision)]

use proptest::prelude::*;

use wsaw_core::cov_decomp::*;
use wsaw_core::lattice_green::{bubble_diagram, bubble_on_torus, BUBBLE_LOG_COEFFICIENT};
use wsaw_core::quad::BzConfig;
use wsaw_core::{Exec, LatticeSpec};

const C0_D4: f64 = 0.154933390231060214;
const C4_DIAG: f64 = 0.000299787056053639584;
const ETA3: f64 = 0.153490972699463467;

fn z4() -> LatticeSpec {
    LatticeSpec::infinite(4).unwrap()
}

fn decomp(m2: f64, scales: usize) -> Decomposition {
    build_decomposition(&z4(), 2, m2, scales, &DecompositionConfig::default()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `P(X_t = 0)` for the rate-2 walk on ℤ, `(1/π)∫₀^π e^{-2t(1 − cos θ)} dθ`, by composite
/// Simpson on a grid refined near θ = 0.
fn return_probability_1d(t: f64) -> f64 {
    let simpson = |a: f64, b: f64, n: usize| {
        let h = (b - a) / n as f64;
        let f = |th: f64| (-2.0 * t * (1.0 - th.cos())).exp();
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        s * h / 3.0
    };
    let cut = (12.0 / t.max(1.0)).sqrt().min(std::f64::consts::PI);
    let mut v = simpson(0.0, cut, 800);
    if cut < std::f64::consts::PI {
        v += simpson(cut, std::f64::consts::PI, 200);
    }
    v / std::f64::consts::PI
}

/// `C_{j;0,0} = ∫_{T_{j-1}}^{T_j} e^{-m²t} P(X_t = 0)^4 dt`.
fn heat_kernel_diagonal(j: usize, m2: f64) -> f64 {
    let (a, b) = (scale_time(2, j - 1), scale_time(2, j));
    let n = 600;
    let h = (b - a) / n as f64;
    let f = |t: f64| (-m2 * t).exp() * return_probability_1d(t).powi(4);
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn slices_telescope() {
    for (m2, j) in [(0.0, 16), (1e-3, 24), (0.04, 16)] {
        let d = decomp(m2, j);
        assert!(d.telescoping_residual < 1e-12, "m2={m2}: {}", d.telescoping_residual);
        let extra = telescoping_defect(&d, &audit_points(4, 500));
        assert!(extra < 1e-12);
        assert!(d.slices.iter().all(|s| s.min_multiplier >= 0.0));
        assert!(d.remainder.min_multiplier >= 0.0);
        assert_eq!((d.scales(), d.remainder.index), (j, j + 1));
    }
}

#[test]
fn beta_sums_to_the_bubble() {
    let d = decomp(1e-3, 24);
    let beta = beta_sequence(&d);
    let sum: f64 = beta.iter().sum();
    let bubble = bubble_diagram(4, 1e-3, &BzConfig::default()).unwrap().value;
    assert!(rel(sum, bubble) < 1e-8, "{sum} vs {bubble}");
    assert!((sum - d.w_norms[24]).abs() < 1e-12);
    assert!(beta.iter().all(|&b| b >= 0.0));
    assert!(beta[23] < 1e-12 * beta[0].max(1.0));
}

#[test]
fn massless_beta_approaches_log_l() {
    let d = decomp(0.0, 16);
    let beta = beta_sequence(&d);
    let target = std::f64::consts::LN_2 / std::f64::consts::PI.powi(2);
    assert!(rel(beta[12], target) < 1e-3, "{}", beta[12]);
    let gaps: Vec<f64> = beta[6..14].iter().map(|b| (b - target).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[1] <= w[0] * 1.0001));
    // the log coefficient of the bubble times log L² per scale
    assert!((2.0 * BUBBLE_LOG_COEFFICIENT * std::f64::consts::LN_2 - target).abs() < 1e-15);
}

#[test]
fn eta_sums_to_the_diagonal() {
    let d = decomp(0.0, 16);
    let eta = eta_sequence(&d);
    let sum: f64 = eta.iter().enumerate().map(|(l, e)| e * 4f64.powi(-(l as i32 + 1))).sum();
    assert!((sum - 2.0 * C0_D4).abs() < 1e-10, "{sum}");
    assert!(rel(eta[3], ETA3) < 1e-10);
    assert!(rel(d.slices[3].diagonal, C4_DIAG) < 1e-10);
    // p_t(0) ≈ (4πt)^{-2} at large t, so η_j → (L⁴ − L²)/(8π²)
    let limit = 12.0 / (8.0 * std::f64::consts::PI.powi(2));
    for (j, &e) in eta.iter().enumerate().take(16).skip(8) {
        assert!(rel(e, limit) < 1e-2, "j={j}: {e}");
    }
    assert!(rel(eta[15], limit) < rel(eta[8], limit));
}

#[test]
fn diagonals_match_the_heat_kernel() {
    for (j, m2) in [(1, 0.0), (2, 0.0), (4, 0.0), (3, 0.05)] {
        let d = decomp(m2, 6);
        let oracle = heat_kernel_diagonal(j, m2);
        let v = d.slices[j - 1].diagonal;
        assert!(rel(v, oracle) < 1e-7, "j={j} m2={m2}: {v} vs {oracle}");
    }
}

#[test]
fn scale_indices_track_the_mass() {
    for k in 1..=6 {
        let m2 = 10f64.powi(-k);
        let d = decomp(m2, 24);
        let beta = beta_sequence(&d);
        let idx = scale_indices(m2, 2, 2.0, &beta).unwrap();
        let j_m = idx.j_m.unwrap();
        assert!(j_m.abs_diff(idx.j_omega) <= 3, "m2={m2}: j_m={j_m} j_omega={}", idx.j_omega);
        assert_eq!(mass_scale(m2, 2), Some(j_m));
        assert!(idx.chi.iter().all(|&c| c > 0.0 && c <= 1.0));
    }
}

#[test]
fn coefficient_sequences_from_decomposition() {
    let d = decomp(1e-2, 12);
    let c = CoefficientSequences::from_decomposition(&d, 2.0).unwrap();
    assert_eq!(c.len(), 12);
    assert_eq!(c.beta, beta_sequence(&d));
    assert_eq!(c.eta, eta_sequence(&d));
    assert!(c.theta.iter().chain(&c.xi).chain(&c.pi).all(|&v| v == 0.0));
    assert_eq!(c.j_m, Some(4));
}

#[test]
fn torus_decomposition_sums_to_torus_bubble() {
    let spec = LatticeSpec::torus(4, 6).unwrap();
    let m2 = 0.05;
    let d = build_decomposition(&spec, 2, m2, 14, &DecompositionConfig::default()).unwrap();
    let sum: f64 = beta_sequence(&d).iter().sum();
    let b = bubble_on_torus(4, 6, m2, Exec::default()).unwrap();
    assert!(rel(sum, b) < 1e-10, "{sum} vs {b}");
}

#[test]
fn rejects_bad_arguments() {
    let cfg = DecompositionConfig::default();
    assert!(build_decomposition(&z4(), 1, 0.1, 4, &cfg).is_err());
    assert!(build_decomposition(&z4(), 2, -0.1, 4, &cfg).is_err());
    assert!(build_decomposition(&z4(), 2, 0.1, 0, &cfg).is_err());
    assert!(CoefficientSequences::from_parts(2, 0.0, vec![0.1; 3], vec![0.1; 2], 2.0).is_err());
}

#[test]
fn decomposition_is_thread_independent() {
    let run = |exec: Exec| {
        let cfg = DecompositionConfig {
            bz: BzConfig { exec, ..BzConfig::default() },
            audit_modes: 512,
        };
        build_decomposition(&z4(), 2, 1e-3, 10, &cfg).unwrap()
    };
    let a = run(Exec::Sequential);
    let b = run(Exec::Parallel);
    let bits = |d: &Decomposition| beta_sequence(d).iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.slices, b.slices);
}

proptest! {
    #[test]
    fn multipliers_partition_the_inverse(s in 1e-12f64..20.0, base in 2u32..5, scales in 1usize..30) {
        let parts: f64 = (1..=scales).map(|j| slice_multiplier(base, j, s)).sum();
        let total = parts + remainder_multiplier(base, scales, s);
        prop_assert!((total * s - 1.0).abs() < 1e-12);
        prop_assert!((parts - partial_multiplier(base, scales, s)).abs() <= 1e-12 * parts.max(1.0));
        for j in 1..=scales {
            prop_assert!(slice_multiplier(base, j, s) >= 0.0);
        }
    }

    #[test]
    fn mass_scale_is_the_first_crossing(m2 in 1e-12f64..2.0, base in 2u32..5) {
        let j = mass_scale(m2, base).unwrap();
        let l2 = (base as f64).powi(2);
        prop_assert!(l2.powi(j as i32) * m2 >= 1.0);
        if j > 0 {
            prop_assert!(l2.powi(j as i32 - 1) * m2 < 1.0);
        }
    }

    #[test]
    fn chi_is_geometric_after_the_omega_scale(beta in proptest::collection::vec(0.0f64..1.0, 1..20), omega in 1.1f64..4.0) {
        let idx = scale_indices(0.0, 2, omega, &beta).unwrap();
        let max = beta.iter().cloned().fold(0.0, f64::max);
        for (j, &b) in beta.iter().enumerate() {
            prop_assert!(b <= omega.powi(idx.j_omega as i32 - j as i32) * max * (1.0 + 1e-12));
            prop_assert!(idx.chi[j] <= 1.0);
        }
    }
}
