//! Critical point and susceptibility predictions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ui;

use crate::cov_decomp::{build_decomposition, CoefficientSequences, DecompositionConfig};
use crate::error::{invalid, Error, Result};
use crate::lattice::LatticeSpec;
use crate::lattice_green::{constant_a, BUBBLE_LOG_COEFFICIENT};
use crate::rg_flow::{solve_boundary_value, GAMMA, MAX_COUPLING};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NuCMode {
    /// `−𝖺 g`.
    Leading,
    /// `ν₀ᶜ/(1 + z₀ᶜ)` from the massless critical trajectory.
    Flow,
}

/// What the predictions need from the Green function and the massless flow.
#[derive(Clone, Debug)]
pub struct PredictionContext {
    /// `𝖺 = 2 C₀(0)`.
    pub a: f64,
    pub massless: Option<Arc<CoefficientSequences>>,
    pub scales: usize,
}

impl PredictionContext {
    pub fn leading(cfg: &DecompositionConfig) -> Result<Self> {
        Ok(PredictionContext {
            a: constant_a(&cfg.bz)?.value,
            massless: None,
            scales: 0,
        })
    }

    /// Builds the massless `d = 4`, `L = 2` coefficients on `scales` scales.
    pub fn with_flow(cfg: &DecompositionConfig, scales: usize) -> Result<Self> {
        let decomp = build_decomposition(&LatticeSpec::infinite(4)?, 2, 0.0, scales, cfg)?;
        let coeffs = CoefficientSequences::from_decomposition(&decomp, 2.0)?;
        Ok(PredictionContext {
            a: constant_a(&cfg.bz)?.value,
            massless: Some(Arc::new(coeffs)),
            scales,
        })
    }

    pub fn from_parts(a: f64, massless: Arc<CoefficientSequences>) -> Self {
        let scales = massless.len();
        PredictionContext {
            a,
            massless: Some(massless),
            scales,
        }
    }

    fn flow(&self) -> Result<&Arc<CoefficientSequences>> {
        self.massless
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("flow mode needs massless coefficients".into()))
    }

    /// `(μ₀ᶜ, z₀ᶜ)` at `m² = 0`.
    pub fn critical_data(&self, g0: f64) -> Result<(f64, f64)> {
        let t = solve_boundary_value(g0, self.flow()?.clone(), self.scales)?;
        Ok((t.mu0_c(), t.z0_c()))
    }
}

pub fn predict_nu_c(g: f64, mode: NuCMode, ctx: &PredictionContext) -> Result<f64> {
    if !(0.0..=MAX_COUPLING).contains(&g) {
        return invalid(format!("coupling {g} outside [0, {MAX_COUPLING}]"));
    }
    match mode {
        NuCMode::Leading => Ok(-ctx.a * g),
        NuCMode::Flow => {
            let g0 = invert_g(g, |g0| Ok(ctx.critical_data(g0)?.1), MAX_COUPLING)?;
            let (mu0, z0) = ctx.critical_data(g0)?;
            Ok(change_variables(0.0, g0, z0, mu0)?.nu)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub g: f64,
    pub nu: f64,
}

/// `g = g₀/(1+z₀)²`, `ν = (ν₀ + m²)/(1+z₀)`.
pub fn change_variables(m2: f64, g0: f64, z0: f64, nu0: f64) -> Result<Couplings> {
    if !(z0 > -1.0) {
        return invalid("z0 must exceed -1");
    }
    Ok(Couplings {
        g: g0 / ((1.0 + z0) * (1.0 + z0)),
        nu: (nu0 + m2) / (1.0 + z0),
    })
}

/// Inverse of [`change_variables`]: `g₀ = g(1+z₀)²`, `ν₀ = (1+z₀)ν − m²`.
pub fn renormalised_parameters(m2: f64, g: f64, nu: f64, z0: f64) -> Result<(f64, f64)> {
    if !(z0 > -1.0) {
        return invalid("z0 must exceed -1");
    }
    Ok((g * (1.0 + z0) * (1.0 + z0), (1.0 + z0) * nu - m2))
}

/// Solves `g₀/(1 + z₀ᶜ(g₀))² = g` for `g₀ ∈ [0, g0_max]` by bisection, assuming the left side
/// increases with `g₀`.
pub fn invert_g<F>(g: f64, z0c: F, g0_max: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let s = |g0: f64| -> Result<f64> {
        let z = z0c(g0)?;
        if !(z > -1.0) {
            return invalid("z0c must exceed -1");
        }
        Ok(g0 / ((1.0 + z) * (1.0 + z)))
    };
    if g == 0.0 {
        return Ok(0.0);
    }
    let hi_val = s(g0_max)?;
    if !(g > 0.0 && g <= hi_val) {
        return invalid(format!("coupling {g} outside the image [0, {hi_val}]"));
    }
    let (mut lo, mut hi) = (0.0, g0_max);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if s(mid)? < g {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < (-1.0f64).exp()) {
        return invalid(format!("epsilon {eps} outside (0, 1/e)"));
    }
    Ok(())
}

/// `A_g = (𝖻 g)^{1/4} / c₀`.
pub fn amplitude(g: f64, c0: f64) -> Result<f64> {
    if !(g > 0.0) {
        return invalid("amplitude needs g > 0");
    }
    if !(c0 > 0.0) {
        return invalid("correction factor must be positive");
    }
    Ok((BUBBLE_LOG_COEFFICIENT * g).powf(GAMMA) / c0)
}

/// `χ(ν_c + ε) ≈ A_g ε⁻¹ (log ε⁻¹)^{1/4}`; `c0 = None` uses `c₀ = 1`.
pub fn predict_susceptibility(g: f64, eps: f64, c0: Option<f64>) -> Result<f64> {
    check_eps(eps)?;
    let a = amplitude(g, c0.unwrap_or(1.0))?;
    Ok(a / eps * (1.0 / eps).ln().powf(GAMMA))
}

/// `m² ≈ (1 + z₀ᶜ)/A_g · ε (log ε⁻¹)^{-1/4}`.
pub fn m2_of_eps(g: f64, eps: f64, z0c: f64, c0: Option<f64>) -> Result<f64> {
    check_eps(eps)?;
    let a = amplitude(g, c0.unwrap_or(1.0))?;
    Ok((1.0 + z0c) / a * eps * (1.0 / eps).ln().powf(-GAMMA))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub g: f64,
    pub nu_c: f64,
    pub amplitude: f64,
    pub gamma: f64,
    pub z0c: f64,
    pub c0: f64,
}

impl Prediction {
    pub fn new(g: f64, mode: NuCMode, ctx: &PredictionContext, c0: Option<f64>) -> Result<Self> {
        let nu_c = predict_nu_c(g, mode, ctx)?;
        let z0c = match mode {
            NuCMode::Flow => {
                let g0 = invert_g(g, |g0| Ok(ctx.critical_data(g0)?.1), MAX_COUPLING)?;
                ctx.critical_data(g0)?.1
            }
            NuCMode::Leading => 0.0,
        };
        let c0 = c0.unwrap_or(1.0);
        Ok(Prediction {
            g,
            nu_c,
            amplitude: amplitude(g, c0)?,
            gamma: GAMMA,
            z0c,
            c0,
        })
    }

    pub fn chi_of_eps(&self, eps: f64) -> Result<f64> {
        predict_susceptibility(self.g, eps, Some(self.c0))
    }

    pub fn m2_of_eps(&self, eps: f64) -> Result<f64> {
        m2_of_eps(self.g, eps, self.z0c, Some(self.c0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeRow {
    pub t: f64,
    pub u: f64,
    /// `t (−log t)^{-γ}`.
    pub reference: f64,
    pub ratio: f64,
}

/// Solves `∫₀^u (−log v)^γ dv = t` for `u`. With `v = e^{-y}` the left side is the upper
/// incomplete gamma function `Γ(1+γ, −log u)`.
pub fn solve_implicit(gamma: f64, t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return invalid("gamma must lie in [0, 1)");
    }
    if !(t > 0.0 && t < (-2.0f64).exp()) {
        return invalid("t must lie in (0, e^-2)");
    }
    if gamma == 0.0 {
        return Ok(t);
    }
    let a = 1.0 + gamma;
    let f = |y: f64| gamma_ui(a, y).ln() - t.ln();
    // f decreases in y; Γ(a, y) ≈ y^γ e^{-y} for large y
    let mut lo = 0.0;
    let mut hi = -t.ln() + 2.0 * gamma * (-t.ln()).ln().max(1.0) + 5.0;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fy = f(y);
        if fy > 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        // Newton: d/dy log Γ(a, y) = -y^γ e^{-y} / Γ(a, y)
        let deriv = -(gamma * y.ln() - y).exp() / gamma_ui(a, y);
        let mut next = y - fy / deriv;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= 1e-15 * y.abs().max(1.0) {
            y = next;
            break;
        }
        y = next;
    }
    Ok((-y).exp())
}

/// Ratio table `u(t) / (t (−log t)^{-γ})` on a log grid from `10⁻²` down to `t_min`.
pub fn ode_asymptotics(gamma: f64, t_min: f64) -> Result<Vec<OdeRow>> {
    if !(0.0..1.0).contains(&gamma) {
        return invalid("gamma must lie in [0, 1)");
    }
    if !(t_min > 0.0 && t_min < (-2.0f64).exp()) {
        return invalid("t_min must lie in (0, e^-2)");
    }
    let mut grid: Vec<f64> = Vec::new();
    let mut k = 0;
    loop {
        let t = 10f64.powf(-2.0 - 0.25 * k as f64);
        if t < t_min * (1.0 + 1e-12) {
            break;
        }
        grid.push(t);
        k += 1;
    }
    if grid.last().map_or(true, |&t| t > t_min * (1.0 + 1e-12)) {
        grid.push(t_min);
    }
    grid.into_iter()
        .map(|t| {
            let u = solve_implicit(gamma, t)?;
            let reference = t * (-t.ln()).powf(-gamma);
            Ok(OdeRow {
                t,
                u,
                reference,
                ratio: u / reference,
            })
        })
        .collect()
}
