use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wsaw_core::grassmann::*;
use wsaw_core::GraphLaplacian;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Adaptive Simpson on `[a, b]`.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `∫₀^∞ e^{−gT² − νT} dT`, the one-site walk with `I(T) = T²`.
fn one_site_walk(g: f64, nu: f64) -> f64 {
    let f = |t: f64| (-g * t * t - nu * t).exp();
    let mut total = 0.0;
    let mut a = 0.0;
    loop {
        let b = a + 1.0;
        let piece = simpson(&f, a, b, 1e-14);
        total += piece;
        if b > 5.0 && f(b) < 1e-18 {
            break;
        }
        a = b;
    }
    total
}

fn random_spd(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
    &b * b.transpose() + DMatrix::identity(m, m) * 0.5
}

#[test]
fn one_site_two_point_matches_walk_side() {
    let lap = GraphLaplacian::one_site();
    let cfg = PolarConfig::default();
    for (g, nu) in [(0.5, 0.3), (1.0, -0.5), (0.1, 1.0), (2.0, -2.0), (0.0, 0.7)] {
        let walk = one_site_walk(g, nu);
        for method in [TwoPointMethod::Grassmann, TwoPointMethod::Determinant] {
            let v = two_point_integral(&lap, g, nu, 0, 0, method, &cfg).unwrap();
            assert!((v.value.re - walk).abs() < 1e-6, "{g} {nu} {method:?}: {} vs {walk}", v.value.re);
        }
    }
}

#[test]
fn self_normalisation_across_random_couplings() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let cfg = PolarConfig::default();
    let graphs = [
        GraphLaplacian::one_site(),
        GraphLaplacian::path(2).unwrap(),
        GraphLaplacian::complete(3).unwrap(),
    ];
    for draw in 0..20 {
        let lap = &graphs[draw % 3];
        let m = lap.sites();
        let k = LocalCouplings {
            p: (0..m).map(|_| rng.gen_range(0.0..1.5)).collect(),
            q: (0..m).map(|_| rng.gen_range(0.2..2.0)).collect(),
            r: (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        let method = if m <= 2 && draw % 2 == 0 {
            TwoPointMethod::Grassmann
        } else {
            TwoPointMethod::Determinant
        };
        let z = self_normalisation(lap, &k, method, &cfg).unwrap();
        assert!((z.value - ONE).norm() < 1e-8, "draw {draw} on {m} sites: {}", z.value);
    }
}

#[test]
fn methods_agree_on_two_sites() {
    let cfg = PolarConfig::default();
    let graphs = [
        GraphLaplacian::path(2).unwrap(),
        GraphLaplacian::torus(2, 1).unwrap(),
        GraphLaplacian::from_edges(2, &[(0, 1, 0.3)]).unwrap(),
    ];
    for lap in &graphs {
        for (g, nu) in [(0.2, 0.5), (1.0, -0.3), (0.05, 0.1)] {
            for (a, b) in [(0, 0), (0, 1), (1, 0)] {
                let x = two_point_integral(lap, g, nu, a, b, TwoPointMethod::Grassmann, &cfg).unwrap();
                let y = two_point_integral(lap, g, nu, a, b, TwoPointMethod::Determinant, &cfg).unwrap();
                assert!((x.value - y.value).norm() < 1e-6, "{g} {nu} ({a},{b})");
            }
        }
    }
}

#[test]
fn weak_coupling_reduces_to_green_function() {
    let lap = GraphLaplacian::path(2).unwrap();
    let nu = 1.0;
    let inv = (lap.minus_laplacian() + DMatrix::identity(2, 2) * nu).try_inverse().unwrap();
    for (a, b) in [(0, 0), (0, 1)] {
        let v = two_point_integral(&lap, 1e-6, nu, a, b, TwoPointMethod::Determinant, &PolarConfig::default()).unwrap();
        assert!((v.value.re - inv[(a, b)]).abs() < 1e-3);
    }
}

#[test]
fn three_site_two_point_is_symmetric_and_positive() {
    let lap = GraphLaplacian::path(3).unwrap();
    let cfg = PolarConfig::default();
    let ab = two_point_integral(&lap, 0.3, 0.2, 0, 2, TwoPointMethod::Determinant, &cfg).unwrap();
    let ba = two_point_integral(&lap, 0.3, 0.2, 2, 0, TwoPointMethod::Determinant, &cfg).unwrap();
    assert!(ab.value.re > 0.0);
    assert!((ab.value - ba.value).norm() < 1e-10);
}

#[test]
fn site_relabelling_leaves_integral_unchanged() {
    // path 0-1-2 versus the same path labelled 1-0-2
    let a = GraphLaplacian::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
    let b = GraphLaplacian::from_edges(3, &[(1, 0, 1.0), (0, 2, 1.0)]).unwrap();
    let cfg = PolarConfig::default();
    let x = two_point_integral(&a, 0.4, 0.1, 0, 2, TwoPointMethod::Determinant, &cfg).unwrap();
    let y = two_point_integral(&b, 0.4, 0.1, 1, 2, TwoPointMethod::Determinant, &cfg).unwrap();
    assert!((x.value - y.value).norm() < 1e-9);
}

#[test]
fn gaussian_super_expectation_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = SuperConfig::default();
    for m in 1..=3 {
        let c = random_spd(&mut rng, m);
        let cov = SuperCovariance::from_real(&c).unwrap();
        let basis = FermionBasis::new(m).unwrap();
        let one = super_expectation(&cov, &GrassmannForm::one(basis), &cfg).unwrap();
        assert!((one.value - ONE).norm() < 1e-8);
        let (a, b) = (0, m - 1);
        let pp = GrassmannForm::phi_bar(basis, a).wedge(&GrassmannForm::phi(basis, b)).unwrap();
        let v = super_expectation(&cov, &pp, &cfg).unwrap();
        assert!((v.value - re(c[(a, b)])).norm() < 1e-8);
        let bar_psi = GrassmannForm::psi_bar(basis, a).wedge(&GrassmannForm::psi(basis, b)).unwrap();
        let v = super_expectation(&cov, &bar_psi, &cfg).unwrap();
        assert!((v.value - re(c[(a, b)])).norm() < 1e-8);
        let psi_bar = GrassmannForm::psi(basis, b).wedge(&GrassmannForm::psi_bar(basis, a)).unwrap();
        let v = super_expectation(&cov, &psi_bar, &cfg).unwrap();
        assert!((v.value + re(c[(a, b)])).norm() < 1e-8);
    }
}

#[test]
fn four_sites_fall_back_to_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let c = random_spd(&mut rng, 4);
    let cov = SuperCovariance::from_real(&c).unwrap();
    let basis = FermionBasis::new(4).unwrap();
    let cfg = SuperConfig {
        mc_samples: 20_000,
        ..SuperConfig::default()
    };
    let one = super_expectation(&cov, &GrassmannForm::one(basis), &cfg).unwrap();
    assert_eq!(one.method, IntegrationMethod::MonteCarlo);
    assert!((one.value - ONE).norm() < 1e-12);
    let pp = GrassmannForm::phi_bar(basis, 0).wedge(&GrassmannForm::phi(basis, 3)).unwrap();
    let v = super_expectation(&cov, &pp, &cfg).unwrap();
    assert!((v.value - re(c[(0, 3)])).norm() < 4.0 * v.abs_error * std::f64::consts::SQRT_2);
}

#[test]
fn tau_squared_expansion() {
    let basis = FermionBasis::new(1).unwrap();
    let tau = GrassmannForm::tau(basis, 0);
    let phi = [Complex64::new(0.7, 0.2)];
    let sq = tau.wedge(&tau).unwrap().evaluate(&phi).unwrap();
    let s = phi[0].norm_sqr();
    let pair = basis.psi(0) | basis.psi_bar(0);
    // ψψ̄ is stored as +1 on the canonical monomial ψ ψ̄
    assert!((sq.coefficient(0) - re(s * s)).norm() < 1e-15);
    assert!((sq.coefficient(pair) - re(2.0 * s)).norm() < 1e-15);
}

#[test]
fn exponential_identities() {
    let basis = FermionBasis::new(2).unwrap();
    let lap = GraphLaplacian::path(2).unwrap();
    let f = GrassmannForm::weighted_laplacian(&lap, &[0.7, 1.3])
        .unwrap()
        .add(&GrassmannForm::tau(basis, 1).scale(re(0.4)))
        .unwrap();
    let e = f.exp_even().unwrap();
    let e_minus = f.scale(-ONE).exp_even().unwrap();
    let prod = e.wedge(&e_minus).unwrap();
    for phi in [[re(0.3), Complex64::new(-0.2, 0.5)], [Complex64::new(1.1, 0.0), re(-0.4)]] {
        let p = prod.evaluate(&phi).unwrap();
        assert!(p.max_abs_diff(&PointForm::scalar(basis, ONE)) < 1e-12);
    }
    // nilpotent with F² = 0
    let nil = PointForm::monomial(basis, basis.psi(0) | basis.psi_bar(1), re(2.5));
    assert_eq!(nil.wedge(&nil), PointForm::zero(basis));
    let e = nil.exp_even().unwrap();
    assert_eq!(e, PointForm::scalar(basis, ONE).add(&nil));
}

#[test]
fn berezin_normalisation_against_gaussian() {
    let basis = FermionBasis::new(2).unwrap();
    let (a0, a1) = (0.8, 2.5);
    let weight = GrassmannForm::function(basis, move |phi| {
        re((-a0 * phi[0].norm_sqr() - a1 * phi[1].norm_sqr()).exp())
    });
    let mut volume = GrassmannForm::one(basis);
    for x in 0..2 {
        let pair = GrassmannForm::psi_bar(basis, x).wedge(&GrassmannForm::psi(basis, x)).unwrap();
        volume = volume.wedge(&pair).unwrap();
    }
    let form = weight.wedge(&volume).unwrap();
    let v = berezin_integral(&form, 80.0, &PolarConfig::default()).unwrap();
    assert!((v.value.re - 1.0 / (a0 * a1)).abs() < 1e-10);
}

#[test]
fn summation_by_parts_on_tori() {
    for lap in [GraphLaplacian::torus(3, 1).unwrap(), GraphLaplacian::torus(2, 2).unwrap()] {
        let m = lap.sites();
        let basis = FermionBasis::new(m).unwrap();
        let mut sym = GrassmannForm::tau_laplacian(&lap, 0).unwrap();
        for x in 1..m {
            sym = sym.add(&GrassmannForm::tau_laplacian(&lap, x).unwrap()).unwrap();
        }
        let plain = GrassmannForm::dirichlet_form(&lap).unwrap();
        assert_eq!(sym.basis(), basis);
        let phi: Vec<Complex64> = (0..m).map(|x| Complex64::new(0.3 * x as f64 - 0.2, 0.1 + 0.2 * x as f64)).collect();
        let d = sym.evaluate(&phi).unwrap().max_abs_diff(&plain.evaluate(&phi).unwrap());
        assert!(d < 1e-14, "{d}");
    }
}

#[test]
fn theta_map_basics() {
    let basis = FermionBasis::new(2).unwrap();
    let field = [re(0.2), Complex64::new(0.1, -0.3), re(1.5), Complex64::new(-0.4, 0.6)];
    let one = theta_map(&GrassmannForm::one(basis)).unwrap().evaluate(&field).unwrap();
    assert_eq!(one, PointForm::scalar(doubled_basis(basis).unwrap(), ONE));
    let t = theta_map(&GrassmannForm::phi(basis, 1)).unwrap().evaluate(&field).unwrap();
    assert!((t.degree_zero() - (field[1] + field[3])).norm() < 1e-15);
    // ψ_0 ↦ ψ_0 + η_0
    let d = doubled_basis(basis).unwrap();
    let t = theta_map(&GrassmannForm::psi(basis, 0)).unwrap().evaluate(&field).unwrap();
    assert_eq!(t.coefficient(d.psi(0)), ONE);
    assert_eq!(t.coefficient(d.psi(2)), ONE);
}

#[test]
fn fluctuation_integral_of_zero_forms_is_gaussian_convolution() {
    let c = DMatrix::from_row_slice(2, 2, &[1.2, 0.3, 0.3, 0.7]);
    let cov = SuperCovariance::from_real(&c).unwrap();
    let basis = FermionBasis::new(2).unwrap();
    let f = GrassmannForm::phi_bar(basis, 0).wedge(&GrassmannForm::phi(basis, 1)).unwrap();
    let cfg = SuperConfig {
        radial: 4,
        angular: 6,
        ..SuperConfig::default()
    };
    let phi = [Complex64::new(0.5, -0.1), Complex64::new(0.2, 0.9)];
    let v = expect_theta(&cov, &f, &phi, &cfg).unwrap();
    let expected = phi[0].conj() * phi[1] + re(c[(0, 1)]);
    assert!((v.degree_zero() - expected).norm() < 1e-12);
    let rest: f64 = v.coefficients()[1..].iter().map(|z| z.norm()).sum();
    assert!(rest < 1e-12);
}

#[test]
fn convolution_identity_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let basis = FermionBasis::new(2).unwrap();
    let c1 = SuperCovariance::from_real(&random_spd(&mut rng, 2)).unwrap();
    let c2 = SuperCovariance::from_real(&random_spd(&mut rng, 2)).unwrap();
    let cfg = SuperConfig {
        radial: 4,
        angular: 6,
        ..SuperConfig::default()
    };
    let points = vec![vec![re(0.0), re(0.0)], vec![Complex64::new(0.4, -0.3), Complex64::new(-0.7, 0.2)]];
    let forms = [
        GrassmannForm::one(basis),
        GrassmannForm::phi_bar(basis, 0).wedge(&GrassmannForm::phi(basis, 1)).unwrap(),
        GrassmannForm::tau(basis, 0),
    ];
    for f in &forms {
        let r = convolution_identity_check(&c1, &c2, f, &points, &cfg).unwrap();
        assert!(r < 1e-6, "{r}");
    }
    // the φ̄φ moment picks up the summed covariance
    let total = c1.sum(&c2).unwrap();
    let v = expect_theta(&total, &forms[1], &points[0], &cfg).unwrap();
    assert!((v.degree_zero() - total.c()[(0, 1)]).norm() < 1e-12);
}

proptest! {
    #[test]
    fn reordering_twice_is_identity(a in 0u32..256, b in 0u32..256) {
        let b = b & !a;
        let s = reorder_sign(a, b) * reorder_sign(b, a);
        let expected = if (a.count_ones() * b.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert_eq!(s, expected);
    }

    #[test]
    fn wedge_is_associative(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = FermionBasis::new(2).unwrap();
        let mut random_form = || {
            let mut f = PointForm::zero(basis);
            for mask in 0..basis.dim() as u32 {
                if rng.gen_bool(0.4) {
                    f = f.add(&PointForm::monomial(basis, mask, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
                }
            }
            f
        };
        let (x, y, z) = (random_form(), random_form(), random_form());
        let lhs = x.wedge(&y).wedge(&z);
        let rhs = x.wedge(&y.wedge(&z));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }
}
