//! Finite Grassmann algebra over a small graph and Berezin integration.
//!
//! For `M` sites the generators are `ψ_x` (bit `x`) and `ψ̄_x` (bit `M + x`); a monomial is a
//! bitmask read in increasing bit order. With `ψ_x = (2πi)^{-1/2} dφ_x` the integral of a form is
//! `π^{-M} ∫ f du dv`, where `f` is the coefficient of `∏_x ψ̄_x ψ_x` and `φ_x = u_x + i v_x`.
//!
//! Coefficients are closures over the boson field, so `e^{-V}` is exact at every quadrature node.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::lattice::GraphLaplacian;
use crate::quad::Rule;

pub const MAX_SITES: usize = 4;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FermionBasis {
    sites: usize,
}

impl FermionBasis {
    pub fn new(sites: usize) -> Result<Self> {
        if sites == 0 || sites > MAX_SITES {
            return invalid(format!("basis needs 1..={MAX_SITES} sites, got {sites}"));
        }
        Ok(FermionBasis { sites })
    }

    pub fn sites(self) -> usize {
        self.sites
    }

    pub fn generators(self) -> usize {
        2 * self.sites
    }

    /// `4^M`.
    pub fn dim(self) -> usize {
        1 << self.generators()
    }

    pub fn psi(self, x: usize) -> u32 {
        assert!(x < self.sites);
        1 << x
    }

    pub fn psi_bar(self, x: usize) -> u32 {
        assert!(x < self.sites);
        1 << (self.sites + x)
    }

    pub fn top(self) -> u32 {
        (self.dim() - 1) as u32
    }

    /// Sign `t` with `∏_x ψ̄_x ψ_x = t · top`.
    pub fn volume_sign(self) -> f64 {
        let mut acc = 0u32;
        let mut sign = 1.0;
        for x in 0..self.sites {
            let (bar, psi) = (self.psi_bar(x), self.psi(x));
            sign *= reorder_sign(bar, psi);
            let pair = bar | psi;
            sign *= reorder_sign(acc, pair);
            acc |= pair;
        }
        sign
    }
}

/// Sign of `m(a) ∧ m(b)` relative to `m(a | b)`; zero when the monomials share a generator.
pub fn reorder_sign(a: u32, b: u32) -> f64 {
    if a & b != 0 {
        return 0.0;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += a.checked_shr(j + 1).unwrap_or(0).count_ones();
        rest &= rest - 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl Parity {
    fn sum(self, other: Parity) -> Parity {
        if self == other {
            self
        } else {
            Parity::Mixed
        }
    }

    fn product(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::Mixed, _) | (_, Parity::Mixed) => Parity::Mixed,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }
}

/// A form evaluated at one boson point: one complex coefficient per monomial.
#[derive(Clone, Debug, PartialEq)]
pub struct PointForm {
    basis: FermionBasis,
    coeffs: Vec<Complex64>,
}

impl PointForm {
    pub fn zero(basis: FermionBasis) -> Self {
        PointForm {
            basis,
            coeffs: vec![ZERO; basis.dim()],
        }
    }

    pub fn scalar(basis: FermionBasis, c: Complex64) -> Self {
        PointForm::monomial(basis, 0, c)
    }

    pub fn monomial(basis: FermionBasis, mask: u32, c: Complex64) -> Self {
        let mut f = PointForm::zero(basis);
        f.coeffs[mask as usize] = c;
        f
    }

    pub fn basis(&self) -> FermionBasis {
        self.basis
    }

    pub fn coefficient(&self, mask: u32) -> Complex64 {
        self.coeffs[mask as usize]
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree_zero(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn parity(&self) -> Parity {
        let (mut even, mut odd) = (false, false);
        for (m, c) in self.coeffs.iter().enumerate() {
            if *c != ZERO {
                if m.count_ones() % 2 == 0 {
                    even = true;
                } else {
                    odd = true;
                }
            }
        }
        match (even, odd) {
            (_, false) => Parity::Even,
            (false, true) => Parity::Odd,
            (true, true) => Parity::Mixed,
        }
    }

    pub fn add(&self, other: &PointForm) -> PointForm {
        assert_eq!(self.basis, other.basis);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        PointForm {
            basis: self.basis,
            coeffs,
        }
    }

    pub fn sub(&self, other: &PointForm) -> PointForm {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, c: Complex64) -> PointForm {
        PointForm {
            basis: self.basis,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn wedge(&self, other: &PointForm) -> PointForm {
        assert_eq!(self.basis, other.basis);
        let mut out = PointForm::zero(self.basis);
        for (a, ca) in self.coeffs.iter().enumerate() {
            if *ca == ZERO {
                continue;
            }
            for (b, cb) in other.coeffs.iter().enumerate() {
                if *cb == ZERO || a & b != 0 {
                    continue;
                }
                out.coeffs[a | b] += ca * cb * reorder_sign(a as u32, b as u32);
            }
        }
        out
    }

    /// `e^{F⁰} Σ_k (F − F⁰)^k / k!`; errors on odd components.
    pub fn exp_even(&self) -> Result<PointForm> {
        if self.parity() != Parity::Even {
            return invalid("exponential of a form with odd components");
        }
        Ok(self.exp_unchecked())
    }

    fn exp_unchecked(&self) -> PointForm {
        let f0 = self.coeffs[0];
        let mut nil = self.clone();
        nil.coeffs[0] = ZERO;
        let mut term = PointForm::scalar(self.basis, ONE);
        let mut sum = term.clone();
        for k in 1..=self.basis.sites {
            term = term.wedge(&nil).scale(Complex64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
        }
        sum.scale(f0.exp())
    }

    /// Coefficient of `∏_x ψ̄_x ψ_x`.
    pub fn top_coefficient(&self) -> Complex64 {
        self.coeffs[self.basis.top() as usize] * self.basis.volume_sign()
    }

    pub fn max_abs_diff(&self, other: &PointForm) -> f64 {
        assert_eq!(self.basis, other.basis);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Coefficient of `∏ψ̄ψ` in `a ∧ b`, without forming the full product.
pub fn top_of_product(a: &PointForm, b: &PointForm) -> Complex64 {
    assert_eq!(a.basis, b.basis);
    let top = a.basis.top();
    let mut acc = ZERO;
    for (m, ca) in a.coeffs.iter().enumerate() {
        if *ca == ZERO {
            continue;
        }
        let rest = top ^ m as u32;
        let cb = b.coeffs[rest as usize];
        if cb != ZERO {
            acc += ca * cb * reorder_sign(m as u32, rest);
        }
    }
    acc * a.basis.volume_sign()
}

type Eval = dyn Fn(&[Complex64]) -> PointForm + Send + Sync;

/// A differential form: a fermion-monomial expansion whose coefficients are functions of
/// `(φ, φ̄)`. The field argument holds `φ_x`; `φ̄_x` is its conjugate.
#[derive(Clone)]
pub struct GrassmannForm {
    basis: FermionBasis,
    parity: Parity,
    eval: Arc<Eval>,
}

impl fmt::Debug for GrassmannForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrassmannForm")
            .field("basis", &self.basis)
            .field("parity", &self.parity)
            .finish_non_exhaustive()
    }
}

impl GrassmannForm {
    pub fn from_fn<F>(basis: FermionBasis, parity: Parity, f: F) -> Self
    where
        F: Fn(&[Complex64]) -> PointForm + Send + Sync + 'static,
    {
        GrassmannForm {
            basis,
            parity,
            eval: Arc::new(f),
        }
    }

    pub fn constant(point: PointForm) -> Self {
        let parity = point.parity();
        GrassmannForm::from_fn(point.basis, parity, move |_| point.clone())
    }

    pub fn one(basis: FermionBasis) -> Self {
        GrassmannForm::constant(PointForm::scalar(basis, ONE))
    }

    /// A 0-form.
    pub fn function<F>(basis: FermionBasis, f: F) -> Self
    where
        F: Fn(&[Complex64]) -> Complex64 + Send + Sync + 'static,
    {
        GrassmannForm::from_fn(basis, Parity::Even, move |phi| PointForm::scalar(basis, f(phi)))
    }

    pub fn phi(basis: FermionBasis, x: usize) -> Self {
        GrassmannForm::function(basis, move |phi| phi[x])
    }

    pub fn phi_bar(basis: FermionBasis, x: usize) -> Self {
        GrassmannForm::function(basis, move |phi| phi[x].conj())
    }

    pub fn psi(basis: FermionBasis, x: usize) -> Self {
        GrassmannForm::constant(PointForm::monomial(basis, basis.psi(x), ONE))
    }

    pub fn psi_bar(basis: FermionBasis, x: usize) -> Self {
        GrassmannForm::constant(PointForm::monomial(basis, basis.psi_bar(x), ONE))
    }

    /// `τ_x = φ_x φ̄_x + ψ_x ∧ ψ̄_x`.
    pub fn tau(basis: FermionBasis, x: usize) -> Self {
        let pair = PointForm::monomial(basis, basis.psi(x) | basis.psi_bar(x), ONE);
        GrassmannForm::from_fn(basis, Parity::Even, move |phi| {
            let mut f = pair.clone();
            f.coeffs[0] = Complex64::new(phi[x].norm_sqr(), 0.0);
            f
        })
    }

    /// `Σ_{x,y} (φ_x A_{xy} φ̄_y + ψ_x A_{xy} ψ̄_y)`.
    pub fn action(a: &DMatrix<Complex64>) -> Result<Self> {
        let m = a.nrows();
        if a.ncols() != m {
            return invalid("action matrix must be square");
        }
        let basis = FermionBasis::new(m)?;
        let fermions = fermion_bilinear(basis, |x, y| a[(x, y)]);
        let a = a.clone();
        Ok(GrassmannForm::from_fn(basis, Parity::Even, move |phi| {
            let mut f = fermions.clone();
            f.coeffs[0] = boson_bilinear(&a, phi);
            f
        }))
    }

    /// `τ_{Δ,x}` in its symmetrised form.
    pub fn tau_laplacian(lap: &GraphLaplacian, x: usize) -> Result<Self> {
        let m = lap.sites();
        if x >= m {
            return invalid(format!("site {x} outside a graph with {m} vertices"));
        }
        let weights: Vec<f64> = (0..m).map(|y| if y == x { 1.0 } else { 0.0 }).collect();
        GrassmannForm::weighted_laplacian(lap, &weights)
    }

    /// `Σ_x p_x τ_{Δ,x}`, which is `Σ_{x,y} ½(p_x + p_y)(−Δ)_{xy} (φ_x φ̄_y + ψ_x ψ̄_y)`.
    pub fn weighted_laplacian(lap: &GraphLaplacian, p: &[f64]) -> Result<Self> {
        let m = lap.sites();
        if p.len() != m {
            return invalid("one weight per site required");
        }
        let l = lap.minus_laplacian();
        let a = DMatrix::from_fn(m, m, |x, y| Complex64::new(0.5 * (p[x] + p[y]) * l[(x, y)], 0.0));
        GrassmannForm::action(&a)
    }

    /// The unsymmetrised `Σ_x (φ_x (−Δφ̄)_x + ψ_x ∧ (−Δψ̄)_x)`.
    pub fn dirichlet_form(lap: &GraphLaplacian) -> Result<Self> {
        let m = lap.sites();
        let basis = FermionBasis::new(m)?;
        let l = lap.minus_laplacian();
        let mut fermions = PointForm::zero(basis);
        for x in 0..m {
            for y in 0..m {
                let psi = PointForm::monomial(basis, basis.psi(x), ONE);
                let bar = PointForm::monomial(basis, basis.psi_bar(y), Complex64::new(l[(x, y)], 0.0));
                fermions = fermions.add(&psi.wedge(&bar));
            }
        }
        Ok(GrassmannForm::from_fn(basis, Parity::Even, move |phi| {
            let mut boson = ZERO;
            for x in 0..m {
                let lap_bar: Complex64 = (0..m).map(|y| phi[y].conj() * l[(x, y)]).sum();
                boson += phi[x] * lap_bar;
            }
            let mut f = fermions.clone();
            f.coeffs[0] = boson;
            f
        }))
    }

    pub fn basis(&self) -> FermionBasis {
        self.basis
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn evaluate(&self, phi: &[Complex64]) -> Result<PointForm> {
        if phi.len() != self.basis.sites {
            return invalid(format!(
                "field has {} components, basis has {} sites",
                phi.len(),
                self.basis.sites
            ));
        }
        Ok(self.at(phi))
    }

    fn at(&self, phi: &[Complex64]) -> PointForm {
        (self.eval)(phi)
    }

    fn check_basis(&self, other: &GrassmannForm) -> Result<()> {
        if self.basis != other.basis {
            return invalid("forms live on different bases");
        }
        Ok(())
    }

    pub fn wedge(&self, other: &GrassmannForm) -> Result<GrassmannForm> {
        self.check_basis(other)?;
        let (f, g) = (self.clone(), other.clone());
        Ok(GrassmannForm::from_fn(
            self.basis,
            self.parity.product(other.parity),
            move |phi| f.at(phi).wedge(&g.at(phi)),
        ))
    }

    pub fn add(&self, other: &GrassmannForm) -> Result<GrassmannForm> {
        self.check_basis(other)?;
        let (f, g) = (self.clone(), other.clone());
        Ok(GrassmannForm::from_fn(
            self.basis,
            self.parity.sum(other.parity),
            move |phi| f.at(phi).add(&g.at(phi)),
        ))
    }

    pub fn scale(&self, c: Complex64) -> GrassmannForm {
        let f = self.clone();
        GrassmannForm::from_fn(self.basis, self.parity, move |phi| f.at(phi).scale(c))
    }

    pub fn exp_even(&self) -> Result<GrassmannForm> {
        if self.parity != Parity::Even {
            return invalid("exponential of a form that is not even");
        }
        let f = self.clone();
        Ok(GrassmannForm::from_fn(self.basis, Parity::Even, move |phi| {
            f.at(phi).exp_unchecked()
        }))
    }
}

fn fermion_bilinear<F: Fn(usize, usize) -> Complex64>(basis: FermionBasis, a: F) -> PointForm {
    let mut f = PointForm::zero(basis);
    for x in 0..basis.sites {
        for y in 0..basis.sites {
            let c = a(x, y);
            if c != ZERO {
                let (px, by) = (basis.psi(x), basis.psi_bar(y));
                f.coeffs[(px | by) as usize] += c * reorder_sign(px, by);
            }
        }
    }
    f
}

fn boson_bilinear(a: &DMatrix<Complex64>, phi: &[Complex64]) -> Complex64 {
    let m = phi.len();
    let mut acc = ZERO;
    for x in 0..m {
        for y in 0..m {
            acc += phi[x] * a[(x, y)] * phi[y].conj();
        }
    }
    acc
}

/// A Hermitian positive-definite covariance `C` with `A = C⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperCovariance {
    c: DMatrix<Complex64>,
    a: DMatrix<Complex64>,
    /// Lower Cholesky factor `R` with `C = R R^†`.
    factor: DMatrix<Complex64>,
    det_c: f64,
}

impl SuperCovariance {
    pub fn new(c: DMatrix<Complex64>) -> Result<Self> {
        let m = c.nrows();
        if m == 0 || c.ncols() != m || m > MAX_SITES {
            return invalid(format!("covariance must be square with 1..={MAX_SITES} rows"));
        }
        let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for x in 0..m {
            for y in 0..m {
                if (c[(x, y)] - c[(y, x)].conj()).norm() > 1e-12 * scale {
                    return invalid("covariance is not Hermitian");
                }
            }
        }
        let chol = c
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("covariance is not positive definite".into()))?;
        let factor = chol.l();
        let det_c: f64 = (0..m).map(|i| factor[(i, i)].norm_sqr()).product();
        let a = chol.inverse();
        let resid = (&a * &c - DMatrix::<Complex64>::identity(m, m))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let a_norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if resid > 1e-12 * (a_norm * scale).max(1.0) {
            return Err(Error::Singular(format!("covariance inverse residual {resid:e}")));
        }
        Ok(SuperCovariance { c, a, factor, det_c })
    }

    pub fn from_real(c: &DMatrix<f64>) -> Result<Self> {
        SuperCovariance::new(c.map(|v| Complex64::new(v, 0.0)))
    }

    pub fn sites(&self) -> usize {
        self.c.nrows()
    }

    pub fn c(&self) -> &DMatrix<Complex64> {
        &self.c
    }

    pub fn a(&self) -> &DMatrix<Complex64> {
        &self.a
    }

    pub fn sum(&self, other: &SuperCovariance) -> Result<SuperCovariance> {
        if self.sites() != other.sites() {
            return invalid("covariances of different sizes");
        }
        SuperCovariance::new(&self.c + &other.c)
    }

    /// `φ = conj(R w)` maps a standard complex Gaussian `w` to covariance `C`.
    #[allow(clippy::needless_range_loop)]
    fn field_from_white(&self, w: &[Complex64], out: &mut [Complex64]) {
        let m = w.len();
        for x in 0..m {
            let mut acc = ZERO;
            for y in 0..=x {
                acc += self.factor[(x, y)] * w[y];
            }
            out[x] = acc.conj();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrationMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub value: Complex64,
    /// Difference to a lower-order rule, or the standard error for Monte Carlo.
    pub abs_error: f64,
    pub method: IntegrationMethod,
    pub evaluations: usize,
}

/// Rules for Gaussian super-expectations: Gauss–Laguerre in `|w|²` and a uniform angle rule per
/// site. Beyond three sites the boson integral is sampled instead.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperConfig {
    pub radial: usize,
    pub angular: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for SuperConfig {
    fn default() -> Self {
        SuperConfig {
            radial: 12,
            angular: 12,
            mc_samples: 100_000,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl SuperConfig {
    fn validate(&self) -> Result<()> {
        if self.radial == 0 || self.angular == 0 {
            return invalid("quadrature orders must be positive");
        }
        Ok(())
    }

    fn reduced(&self) -> SuperConfig {
        SuperConfig {
            radial: (2 * self.radial).div_ceil(3),
            angular: (2 * self.angular).div_ceil(3),
            ..*self
        }
    }
}

type Axis = Vec<(Complex64, f64)>;

fn white_axis(radial: usize, angular: usize) -> Axis {
    let lag = Rule::laguerre(radial);
    let mut axis = Vec::with_capacity(radial * angular);
    for (s, w) in lag.nodes.iter().zip(&lag.weights) {
        for k in 0..angular {
            let theta = 2.0 * PI * k as f64 / angular as f64;
            axis.push((Complex64::from_polar(s.sqrt(), theta), w / angular as f64));
        }
    }
    axis
}

/// `Σ_nodes (∏ weights) f(field)` over a tensor grid, reduced in a fixed order.
fn product_sum<F>(axes: &[Axis], n_out: usize, exec: Exec, f: F) -> Vec<Complex64>
where
    F: Fn(&[Complex64], &mut [Complex64]) + Sync + Send,
{
    let m = axes.len();
    let partial = exec.map(axes[0].len(), |i0| {
        let mut field = vec![ZERO; m];
        let mut idx = vec![0usize; m];
        let mut buf = vec![ZERO; n_out];
        let mut acc = vec![ZERO; n_out];
        field[0] = axes[0][i0].0;
        loop {
            let mut w = axes[0][i0].1;
            for x in 1..m {
                field[x] = axes[x][idx[x]].0;
                w *= axes[x][idx[x]].1;
            }
            buf.iter_mut().for_each(|b| *b = ZERO);
            f(&field, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b * w;
            }
            let mut x = 1;
            while x < m {
                idx[x] += 1;
                if idx[x] < axes[x].len() {
                    break;
                }
                idx[x] = 0;
                x += 1;
            }
            if x >= m {
                break;
            }
        }
        acc
    });
    let mut total = vec![ZERO; n_out];
    for p in partial {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

fn grid_size(axes: &[Axis]) -> usize {
    axes.iter().map(|a| a.len()).product()
}

/// Standard complex Gaussian average by sampling; returns means and standard errors.
fn sampled_average<F>(m: usize, n_out: usize, cfg: &SuperConfig, f: F) -> (Vec<Complex64>, Vec<f64>)
where
    F: Fn(&[Complex64], &mut [Complex64]) + Sync + Send,
{
    let n = cfg.mc_samples.max(2);
    let samples = cfg.exec.map(n, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let w: Vec<Complex64> = (0..m)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        let mut buf = vec![ZERO; n_out];
        f(&w, &mut buf);
        buf
    });
    let nf = n as f64;
    let mut mean = vec![ZERO; n_out];
    for s in &samples {
        for (a, b) in mean.iter_mut().zip(s) {
            *a += b;
        }
    }
    mean.iter_mut().for_each(|a| *a /= nf);
    let mut var = vec![0.0; n_out];
    for s in &samples {
        for ((v, b), mu) in var.iter_mut().zip(s).zip(&mean) {
            *v += (b - mu).norm_sqr();
        }
    }
    let se = var.iter().map(|v| (v / (nf - 1.0) / nf).sqrt()).collect();
    (mean, se)
}

/// `𝔼_C F = ∫ e^{−S_A} F`.
pub fn super_expectation(cov: &SuperCovariance, form: &GrassmannForm, cfg: &SuperConfig) -> Result<Expectation> {
    cfg.validate()?;
    let m = cov.sites();
    if form.basis.sites != m {
        return invalid("form and covariance have different numbers of sites");
    }
    let basis = form.basis;
    let neg_a = cov.a.map(|z| -z);
    let fermions = fermion_bilinear(basis, |x, y| neg_a[(x, y)]).exp_unchecked();
    let integrand = |w: &[Complex64], out: &mut [Complex64]| {
        let mut phi = [ZERO; MAX_SITES];
        cov.field_from_white(w, &mut phi[..m]);
        out[0] = top_of_product(&fermions, &form.at(&phi[..m]));
    };
    let det_c = cov.det_c;
    if m <= 3 {
        let run = |c: &SuperConfig| {
            let axes: Vec<Axis> = (0..m).map(|_| white_axis(c.radial, c.angular)).collect();
            (product_sum(&axes, 1, c.exec, integrand)[0] * det_c, grid_size(&axes))
        };
        let (value, n1) = run(cfg);
        let (coarse, n2) = run(&cfg.reduced());
        Ok(Expectation {
            value,
            abs_error: (value - coarse).norm(),
            method: IntegrationMethod::Quadrature,
            evaluations: n1 + n2,
        })
    } else {
        let (mean, se) = sampled_average(m, 1, cfg, integrand);
        Ok(Expectation {
            value: mean[0] * det_c,
            abs_error: se[0] * det_c,
            method: IntegrationMethod::MonteCarlo,
            evaluations: cfg.mc_samples.max(2),
        })
    }
}

/// The doubled basis used by [`theta_map`]: external sites `0..M`, fluctuation sites `M..2M`.
pub fn doubled_basis(basis: FermionBasis) -> Result<FermionBasis> {
    FermionBasis::new(2 * basis.sites)
}

/// Maps an `M`-site monomial to the doubled basis, external (`fluct = false`) or fluctuation copy.
fn lift_mask(basis: FermionBasis, mask: u32, fluct: bool) -> u32 {
    let m = basis.sites;
    let mut out = 0u32;
    for x in 0..m {
        let shift = if fluct { m } else { 0 };
        if mask & basis.psi(x) != 0 {
            out |= 1 << (x + shift);
        }
        if mask & basis.psi_bar(x) != 0 {
            out |= 1 << (2 * m + x + shift);
        }
    }
    out
}

/// `θF(φ, ξ, ψ, η) = F(φ + ξ, ψ + η)` as a form on the doubled basis. The field argument of
/// the result is `(φ_0, …, φ_{M−1}, ξ_0, …, ξ_{M−1})`.
pub fn theta_map(form: &GrassmannForm) -> Result<GrassmannForm> {
    let basis = form.basis;
    let doubled = doubled_basis(basis)?;
    let m = basis.sites;
    // expansion of every original monomial under ψ → ψ + η
    let images: Vec<PointForm> = (0..basis.dim() as u32)
        .map(|mask| {
            let mut acc = PointForm::scalar(doubled, ONE);
            for bit in 0..basis.generators() {
                if mask & (1 << bit) == 0 {
                    continue;
                }
                let g = 1u32 << bit;
                let sum = PointForm::monomial(doubled, lift_mask(basis, g, false), ONE)
                    .add(&PointForm::monomial(doubled, lift_mask(basis, g, true), ONE));
                acc = acc.wedge(&sum);
            }
            acc
        })
        .collect();
    let f = form.clone();
    Ok(GrassmannForm::from_fn(doubled, form.parity, move |field| {
        let z: Vec<Complex64> = (0..m).map(|x| field[x] + field[m + x]).collect();
        let p = f.at(&z);
        let mut out = PointForm::zero(doubled);
        for (mask, c) in p.coeffs.iter().enumerate() {
            if *c != ZERO {
                out = out.add(&images[mask].scale(*c));
            }
        }
        out
    }))
}

/// Integrates the fluctuation half of a doubled form against `e^{−S_A(ξ, η)}`, leaving a form
/// in the external variables evaluated at `phi`.
struct FluctuationIntegral {
    basis: FermionBasis,
    doubled: FermionBasis,
    fermions: PointForm,
    top_fluct: u32,
    ext_masks: Vec<u32>,
    ext_signs: Vec<f64>,
}

impl FluctuationIntegral {
    fn new(cov: &SuperCovariance) -> Result<Self> {
        let basis = FermionBasis::new(cov.sites())?;
        let doubled = doubled_basis(basis)?;
        let m = basis.sites;
        let mut fermions = PointForm::zero(doubled);
        for x in 0..m {
            for y in 0..m {
                let (px, by) = (1u32 << (m + x), 1u32 << (3 * m + y));
                fermions.coeffs[(px | by) as usize] -= cov.a[(x, y)] * reorder_sign(px, by);
            }
        }
        let fermions = fermions.exp_unchecked();
        let top_fluct = lift_mask(basis, basis.top(), true);
        // ∏_x η̄_x η_x = t · m(top_fluct)
        let mut t = 1.0;
        let mut acc = 0u32;
        for x in 0..m {
            let (eta, bar) = (1u32 << (m + x), 1u32 << (3 * m + x));
            t *= reorder_sign(bar, eta) * reorder_sign(acc, bar | eta);
            acc |= bar | eta;
        }
        let ext_masks: Vec<u32> = (0..basis.dim() as u32).map(|e| lift_mask(basis, e, false)).collect();
        let ext_signs = ext_masks.iter().map(|&e| reorder_sign(e, top_fluct) * t).collect();
        Ok(FluctuationIntegral {
            basis,
            doubled,
            fermions,
            top_fluct,
            ext_masks,
            ext_signs,
        })
    }

    fn accumulate(&self, g: &PointForm, out: &mut [Complex64]) {
        let mut full = vec![ZERO; self.doubled.dim()];
        for (e, ce) in self.fermions.coeffs.iter().enumerate() {
            if *ce == ZERO {
                continue;
            }
            for (h, ch) in g.coeffs.iter().enumerate() {
                if *ch == ZERO || e & h != 0 {
                    continue;
                }
                let mask = (e | h) as u32;
                if mask & self.top_fluct == self.top_fluct {
                    full[mask as usize] += ce * ch * reorder_sign(e as u32, h as u32);
                }
            }
        }
        for (k, (&mask, &sign)) in self.ext_masks.iter().zip(&self.ext_signs).enumerate() {
            out[k] = full[(mask | self.top_fluct) as usize] * sign;
        }
    }
}

/// `(𝔼_C θF)(φ)`: a form in the external fields. Requires `M ≤ 2` and quadrature.
pub fn expect_theta(
    cov: &SuperCovariance,
    form: &GrassmannForm,
    phi: &[Complex64],
    cfg: &SuperConfig,
) -> Result<PointForm> {
    cfg.validate()?;
    let m = cov.sites();
    if form.basis.sites != m || phi.len() != m {
        return invalid("form, covariance and field sizes differ");
    }
    let fl = FluctuationIntegral::new(cov)?;
    let theta = theta_map(form)?;
    Ok(expect_theta_at(cov, &fl, &theta, phi, cfg))
}

fn expect_theta_at(
    cov: &SuperCovariance,
    fl: &FluctuationIntegral,
    theta: &GrassmannForm,
    phi: &[Complex64],
    cfg: &SuperConfig,
) -> PointForm {
    let m = cov.sites();
    let axes: Vec<Axis> = (0..m).map(|_| white_axis(cfg.radial, cfg.angular)).collect();
    let sums = product_sum(&axes, fl.basis.dim(), cfg.exec, |w, out| {
        let mut field = [ZERO; MAX_SITES];
        field[..m].copy_from_slice(phi);
        cov.field_from_white(w, &mut field[m..2 * m]);
        fl.accumulate(&theta.at(&field[..2 * m]), out);
    });
    PointForm {
        basis: fl.basis,
        coeffs: sums.into_iter().map(|v| v * cov.det_c).collect(),
    }
}

/// `𝔼_C θ F` as a form, evaluated lazily at each external point.
pub fn convolve(cov: &SuperCovariance, form: &GrassmannForm, cfg: &SuperConfig) -> Result<GrassmannForm> {
    cfg.validate()?;
    if form.basis.sites != cov.sites() {
        return invalid("form and covariance have different numbers of sites");
    }
    let fl = Arc::new(FluctuationIntegral::new(cov)?);
    let theta = theta_map(form)?;
    let cov = cov.clone();
    // the inner integral runs inside an outer quadrature, so keep it sequential
    let inner = SuperConfig {
        exec: Exec::Sequential,
        ..*cfg
    };
    Ok(GrassmannForm::from_fn(form.basis, Parity::Mixed, move |phi| {
        expect_theta_at(&cov, &fl, &theta, phi, &inner)
    }))
}

/// `max |𝔼_{C₁+C₂} θF − 𝔼_{C₂} θ 𝔼_{C₁} θ F|` over the given external points and all
/// monomial coefficients.
pub fn convolution_identity_check(
    c1: &SuperCovariance,
    c2: &SuperCovariance,
    form: &GrassmannForm,
    points: &[Vec<Complex64>],
    cfg: &SuperConfig,
) -> Result<f64> {
    let total = c1.sum(c2)?;
    let inner = convolve(c1, form, cfg)?;
    let mut worst = 0.0f64;
    for phi in points {
        let lhs = expect_theta(&total, form, phi, cfg)?;
        let rhs = expect_theta(c2, &inner, phi, cfg)?;
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoPointMethod {
    /// Expand the full form and extract its top-degree part at every boson node.
    Grassmann,
    /// Integrate out the fermions as `det(−Δ + ν + 2g|φ|²)`.
    Determinant,
}

/// Site-dependent couplings of `Σ_x (p_x τ_{Δ,x} + q_x τ_x² + r_x τ_x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalCouplings {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
}

impl LocalCouplings {
    pub fn uniform(sites: usize, p: f64, q: f64, r: f64) -> Self {
        LocalCouplings {
            p: vec![p; sites],
            q: vec![q; sites],
            r: vec![r; sites],
        }
    }

    fn sites(&self) -> usize {
        self.p.len()
    }
}

/// Polar rule for non-Gaussian integrals: composite Gauss–Legendre in `|φ_x|²` on quadratically
/// graded panels, a uniform angle rule, and the global phase fixed at site 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarConfig {
    pub order: usize,
    pub panels: usize,
    pub angular: usize,
    /// The radial range ends where the single-site weight falls below `e^{-cutoff}`.
    pub cutoff: f64,
    pub exec: Exec,
}

impl Default for PolarConfig {
    fn default() -> Self {
        PolarConfig {
            order: 12,
            panels: 6,
            angular: 16,
            cutoff: 60.0,
            exec: Exec::default(),
        }
    }
}

impl PolarConfig {
    fn validate(&self) -> Result<()> {
        if self.order == 0 || self.panels == 0 || self.angular == 0 {
            return invalid("polar rule sizes must be positive");
        }
        if !(self.cutoff > 0.0) {
            return invalid("cutoff must be positive");
        }
        Ok(())
    }
}

fn polar_axes(s_max: &[f64], order: usize, cfg: &PolarConfig, fix_phase: bool) -> Vec<Axis> {
    let rule = Rule::legendre(order);
    s_max
        .iter()
        .enumerate()
        .map(|(x, &smax)| {
            let mut radial = Vec::new();
            for k in 0..cfg.panels {
                let a = smax * (k as f64 / cfg.panels as f64).powi(2);
                let b = smax * ((k + 1) as f64 / cfg.panels as f64).powi(2);
                radial.extend(rule.mapped(a, b));
            }
            // du dv = ½ ds dθ, and the Berezin factor 1/π per site
            let jac = 0.5 / PI;
            if x == 0 && fix_phase {
                radial
                    .into_iter()
                    .map(|(s, w)| (Complex64::new(s.sqrt(), 0.0), w * jac * 2.0 * PI))
                    .collect()
            } else {
                let dtheta = 2.0 * PI / cfg.angular as f64;
                let mut axis = Vec::with_capacity(radial.len() * cfg.angular);
                for (s, w) in radial {
                    for k in 0..cfg.angular {
                        axis.push((Complex64::from_polar(s.sqrt(), k as f64 * dtheta), w * jac * dtheta));
                    }
                }
                axis
            }
        })
        .collect()
}

/// `∫ F` for a form whose coefficients decay on `|φ_x|² ≤ s_max`.
pub fn berezin_integral(form: &GrassmannForm, s_max: f64, cfg: &PolarConfig) -> Result<Expectation> {
    cfg.validate()?;
    if !(s_max > 0.0) {
        return invalid("radial range must be positive");
    }
    let m = form.basis.sites;
    let run = |order: usize| {
        let axes = polar_axes(&vec![s_max; m], order, cfg, false);
        let v = product_sum(&axes, 1, cfg.exec, |phi, out| out[0] = form.at(phi).top_coefficient());
        (v[0], grid_size(&axes))
    };
    let (value, n1) = run(cfg.order);
    let (coarse, n2) = run((2 * cfg.order).div_ceil(3));
    Ok(Expectation {
        value,
        abs_error: (value - coarse).norm(),
        method: IntegrationMethod::Quadrature,
        evaluations: n1 + n2,
    })
}

/// `∫ e^{−Σ_x (p_x τ_{Δ,x} + q_x τ_x² + r_x τ_x)} O`, with `O = φ̄_a φ_b` or `O = 1`.
pub fn potential_integral(
    lap: &GraphLaplacian,
    couplings: &LocalCouplings,
    observable: Option<(usize, usize)>,
    method: TwoPointMethod,
    cfg: &PolarConfig,
) -> Result<Expectation> {
    cfg.validate()?;
    let m = lap.sites();
    if couplings.sites() != m || couplings.q.len() != m || couplings.r.len() != m {
        return invalid("one coupling triple per site required");
    }
    let limit = match method {
        TwoPointMethod::Grassmann => 2,
        TwoPointMethod::Determinant => 3,
    };
    if m > limit {
        return Err(Error::Budget(format!("{method:?} method supports at most {limit} sites")));
    }
    if let Some((a, b)) = observable {
        if a >= m || b >= m {
            return invalid("observable sites outside the graph");
        }
    }
    let LocalCouplings { p, q, r } = couplings;
    if p.iter().chain(q).chain(r).any(|v| !v.is_finite()) {
        return invalid("couplings must be finite");
    }
    if p.iter().any(|&v| v < 0.0) || q.iter().any(|&v| v < 0.0) {
        return invalid("p and q must be nonnegative");
    }
    let l = lap.minus_laplacian();
    let pmat = DMatrix::from_fn(m, m, |x, y| 0.5 * (p[x] + p[y]) * l[(x, y)]);
    let lam_min = SymmetricEigen::new(pmat.clone()).eigenvalues.min();
    let mut quadratic = pmat.clone();
    for x in 0..m {
        quadratic[(x, x)] += r[x];
    }
    let quadratic_pd = quadratic.clone().cholesky().is_some();
    let slack = (-lam_min).max(0.0);
    let mut s_max = Vec::with_capacity(m);
    for x in 0..m {
        let lin = r[x] - slack;
        let s = if q[x] > 0.0 {
            (-lin + (lin * lin + 4.0 * q[x] * cfg.cutoff).sqrt()) / (2.0 * q[x])
        } else if quadratic_pd && lin > 0.0 {
            cfg.cutoff / lin
        } else {
            return Err(Error::Divergent(format!("no confining weight at site {x}")));
        };
        s_max.push(s);
    }

    let run = |order: usize| -> Result<(Complex64, usize)> {
        match method {
            TwoPointMethod::Determinant => Ok(determinant_sum(&pmat, q, r, observable, &s_max, order, cfg)),
            TwoPointMethod::Grassmann => {
                let basis = FermionBasis::new(m)?;
                let mut v = GrassmannForm::weighted_laplacian(lap, p)?;
                for x in 0..m {
                    let tau = GrassmannForm::tau(basis, x);
                    let local = tau
                        .wedge(&tau)?
                        .scale(Complex64::new(q[x], 0.0))
                        .add(&tau.scale(Complex64::new(r[x], 0.0)))?;
                    v = v.add(&local)?;
                }
                let mut weight = v.scale(-ONE).exp_even()?;
                if let Some((a, b)) = observable {
                    weight = weight
                        .wedge(&GrassmannForm::phi_bar(basis, a))?
                        .wedge(&GrassmannForm::phi(basis, b))?;
                }
                let axes = polar_axes(&s_max, order, cfg, true);
                let v = product_sum(&axes, 1, cfg.exec, |phi, out| {
                    out[0] = weight.at(phi).top_coefficient();
                });
                Ok((v[0], grid_size(&axes)))
            }
        }
    };
    let (value, n1) = run(cfg.order)?;
    let (coarse, n2) = run((2 * cfg.order).div_ceil(3))?;
    Ok(Expectation {
        value,
        abs_error: (value - coarse).norm(),
        method: IntegrationMethod::Quadrature,
        evaluations: n1 + n2,
    })
}

fn radial_nodes(s_max: f64, order: usize, panels: usize) -> Vec<(f64, f64)> {
    let rule = Rule::legendre(order);
    let mut nodes = Vec::with_capacity(order * panels);
    for k in 0..panels {
        let a = s_max * (k as f64 / panels as f64).powi(2);
        let b = s_max * ((k + 1) as f64 / panels as f64).powi(2);
        nodes.extend(rule.mapped(a, b));
    }
    nodes
}

/// The determinant route. The determinant and the local weight depend only on the radii, so
/// the angle sum runs over the hopping phase factor alone.
fn determinant_sum(
    pmat: &DMatrix<f64>,
    q: &[f64],
    r: &[f64],
    observable: Option<(usize, usize)>,
    s_max: &[f64],
    order: usize,
    cfg: &PolarConfig,
) -> (Complex64, usize) {
    let m = pmat.nrows();
    let k = cfg.angular;
    let radial: Vec<Vec<(f64, f64)>> = s_max.iter().map(|&s| radial_nodes(s, order, cfg.panels)).collect();
    let mut pm = [[0.0; 3]; 3];
    for x in 0..m {
        for y in 0..m {
            pm[x][y] = pmat[(x, y)];
        }
    }
    let cos_table: Vec<f64> = (0..k).map(|j| (2.0 * PI * j as f64 / k as f64).cos()).collect();
    let phase_table: Vec<Complex64> = (0..k)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / k as f64))
        .collect();
    let angle_points = k.pow(m as u32 - 1);
    // ½ ds dθ / π per site, the phase of site 0 fixed
    let angle_weight = (0.5 / PI).powi(m as i32) * 2.0 * PI * (2.0 * PI / k as f64).powi(m as i32 - 1);
    let partial = cfg.exec.map(radial[0].len(), |i0| {
        let mut idx = [0usize; 3];
        idx[0] = i0;
        let mut acc = ZERO;
        loop {
            let mut s = [0.0; 3];
            let mut w = angle_weight;
            for x in 0..m {
                let (sx, wx) = radial[x][idx[x]];
                s[x] = sx;
                w *= wx;
            }
            let mut mat = pm;
            let mut local = 0.0;
            for x in 0..m {
                mat[x][x] += r[x] + 2.0 * q[x] * s[x];
                local += q[x] * s[x] * s[x] + (r[x] + pm[x][x]) * s[x];
            }
            let prefactor = small_determinant(&mut mat, m) * (-local).exp() * w;
            let mut hop = [[0.0; 3]; 3];
            for x in 0..m {
                for y in x + 1..m {
                    hop[x][y] = 2.0 * pm[x][y] * (s[x] * s[y]).sqrt();
                }
            }
            let mut angular = ZERO;
            for a in 0..angle_points {
                let mut th = [0usize; 3];
                let mut rest = a;
                for t in th.iter_mut().take(m).skip(1) {
                    *t = rest % k;
                    rest /= k;
                }
                let mut cross = 0.0;
                for x in 0..m {
                    for y in x + 1..m {
                        cross += hop[x][y] * cos_table[(th[x] + k - th[y]) % k];
                    }
                }
                let obs = match observable {
                    Some((p, q)) => phase_table[(th[q] + k - th[p]) % k] * (s[p] * s[q]).sqrt(),
                    None => ONE,
                };
                angular += obs * (-cross).exp();
            }
            acc += angular * prefactor;
            let mut x = 1;
            while x < m {
                idx[x] += 1;
                if idx[x] < radial[x].len() {
                    break;
                }
                idx[x] = 0;
                x += 1;
            }
            if x >= m {
                break;
            }
        }
        acc
    });
    let total = partial.into_iter().fold(ZERO, |a, b| a + b);
    let points = radial.iter().map(|r| r.len()).product::<usize>() * angle_points;
    (total, points)
}

/// Determinant of the leading `m × m` block by elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn small_determinant(a: &mut [[f64; 3]; 3], m: usize) -> f64 {
    let mut det = 1.0;
    for k in 0..m {
        let piv = (k..m).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        if a[piv][k] == 0.0 {
            return 0.0;
        }
        if piv != k {
            a.swap(piv, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..m {
            let f = a[i][k] / a[k][k];
            for j in k..m {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    det
}

/// `G_{g,ν}(a, b) = ∫ e^{−Σ_x (τ_{Δ,x} + g τ_x² + ν τ_x)} φ̄_a φ_b`.
pub fn two_point_integral(
    lap: &GraphLaplacian,
    g: f64,
    nu: f64,
    a: usize,
    b: usize,
    method: TwoPointMethod,
    cfg: &PolarConfig,
) -> Result<Expectation> {
    if !(g >= 0.0 && g.is_finite() && nu.is_finite()) {
        return invalid("couplings must be finite with g >= 0");
    }
    if g == 0.0 && nu <= 0.0 {
        return Err(Error::Divergent("g = 0 requires nu > 0".into()));
    }
    let couplings = LocalCouplings::uniform(lap.sites(), 1.0, g, nu);
    potential_integral(lap, &couplings, Some((a, b)), method, cfg)
}

/// The partition function `∫ e^{−Σ_x (p_x τ_{Δ,x} + q_x τ_x² + r_x τ_x)}`, identically 1.
pub fn self_normalisation(
    lap: &GraphLaplacian,
    couplings: &LocalCouplings,
    method: TwoPointMethod,
    cfg: &PolarConfig,
) -> Result<Expectation> {
    potential_integral(lap, couplings, None, method, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn anticommutation_signs() {
        let b = FermionBasis::new(2).unwrap();
        let psi0 = PointForm::monomial(b, b.psi(0), ONE);
        let bar1 = PointForm::monomial(b, b.psi_bar(1), ONE);
        assert_eq!(psi0.wedge(&psi0), PointForm::zero(b));
        assert_eq!(psi0.wedge(&bar1), bar1.wedge(&psi0).scale(-ONE));
        assert_eq!(reorder_sign(0b10, 0b01), -1.0);
        assert_eq!(reorder_sign(0b01, 0b10), 1.0);
    }

    #[test]
    fn one_site_exponential() {
        let b = FermionBasis::new(1).unwrap();
        let tau = GrassmannForm::tau(b, 0);
        let phi = [Complex64::new(0.3, -0.4)];
        let e = tau.scale(-ONE).exp_even().unwrap().at(&phi);
        let w = (-0.25f64).exp();
        assert!((e.coefficient(0) - c(w)).norm() < 1e-15);
        assert!((e.coefficient(b.top()) - c(-w)).norm() < 1e-15);
        // ∫ e^{-τ} = 1 with the weight e^{-|φ|²}
        assert!((e.top_coefficient() - c(w)).norm() < 1e-15);
    }

    #[test]
    fn odd_exponential_rejected() {
        let b = FermionBasis::new(1).unwrap();
        assert!(GrassmannForm::psi(b, 0).exp_even().is_err());
        assert!(PointForm::monomial(b, b.psi(0), ONE).exp_even().is_err());
    }

    #[test]
    fn covariance_validation() {
        assert!(SuperCovariance::from_real(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(SuperCovariance::from_real(&DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0])).is_err());
        let cov = SuperCovariance::from_real(&DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        assert!((cov.det_c - 1.75).abs() < 1e-14);
    }

    #[test]
    fn method_limits() {
        let lap = GraphLaplacian::complete(3).unwrap();
        let k = LocalCouplings::uniform(3, 1.0, 0.1, 0.2);
        let cfg = PolarConfig::default();
        assert!(matches!(
            potential_integral(&lap, &k, None, TwoPointMethod::Grassmann, &cfg),
            Err(Error::Budget(_))
        ));
        assert!(matches!(
            two_point_integral(&lap, 0.0, -0.1, 0, 0, TwoPointMethod::Determinant, &cfg),
            Err(Error::Divergent(_))
        ));
    }
}
