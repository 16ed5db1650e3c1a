//! Quadratic renormalisation-group flow of `(g, z, μ)`:
//!
//! ```text
//! g_{j+1} = g_j − β_j g_j²
//! z_{j+1} = z_j − θ_j g_j²
//! μ_{j+1} = L² μ_j (1 − γ β_j g_j) + η_j g_j − ξ_j g_j² − π_j g_j z_j
//! ```
//!
//! with `γ = 1/4`. Critical initial data solve the two-sided problem with `g₀` given and
//! `(z, μ)` vanishing at the last scale.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cov_decomp::{mass_scale, CoefficientSequences};
use crate::error::{invalid, Error, Result};

pub const GAMMA: f64 = 0.25;

/// Default upper end of the admissible initial couplings.
pub const MAX_COUPLING: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub j: usize,
    pub g: f64,
    pub z: f64,
    /// `μ_j = L^{2j} ν_j`.
    pub mu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeStep {
    /// `Π_j = L^{2j} ∏_{l<j}(1 − γ β_l g_l)`.
    pub pi: f64,
    pub mu_prime: f64,
    pub g_prime: f64,
    pub z_prime: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrajectory {
    pub states: Vec<FlowState>,
    pub derivative: Option<Vec<DerivativeStep>>,
    pub coeffs: Arc<CoefficientSequences>,
    pub g0: f64,
    pub m2: f64,
    pub gamma: f64,
}

fn l2(c: &CoefficientSequences) -> f64 {
    (c.base as f64).powi(2)
}

fn check_scale(j: usize, c: &CoefficientSequences) -> Result<()> {
    if j >= c.len() {
        return Err(Error::ScaleOutOfRange { scale: j, len: c.len() });
    }
    Ok(())
}

/// One step of the recursion at `γ = 1/4`.
pub fn step_forward(state: &FlowState, coeffs: &CoefficientSequences) -> Result<FlowState> {
    step_forward_with(state, coeffs, GAMMA)
}

pub fn step_forward_with(state: &FlowState, c: &CoefficientSequences, gamma: f64) -> Result<FlowState> {
    let j = state.j;
    check_scale(j, c)?;
    let (g, z, mu) = (state.g, state.z, state.mu);
    let g2 = g * g;
    Ok(FlowState {
        j: j + 1,
        g: g - c.beta[j] * g2,
        z: z - c.theta[j] * g2,
        mu: l2(c) * mu * (1.0 - gamma * c.beta[j] * g) + c.eta[j] * g - c.xi[j] * g2 - c.pi[j] * g * z,
    })
}

/// Forward iteration of `steps` scales from `initial`.
pub fn iterate_forward(
    initial: FlowState,
    coeffs: Arc<CoefficientSequences>,
    steps: usize,
    gamma: f64,
) -> Result<FlowTrajectory> {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial);
    for _ in 0..steps {
        let next = step_forward_with(states.last().unwrap(), &coeffs, gamma)?;
        states.push(next);
    }
    Ok(FlowTrajectory {
        g0: initial.g,
        m2: coeffs.m2,
        states,
        derivative: None,
        coeffs,
        gamma,
    })
}

/// Critical trajectory on scales `0..=J`: `g` forward from `g₀`, then `z` and `μ` backward from
/// `z_J = μ_J = 0`. `μ₀` and `z₀` of the result are the critical initial data.
pub fn solve_boundary_value(g0: f64, coeffs: Arc<CoefficientSequences>, scales: usize) -> Result<FlowTrajectory> {
    solve_boundary_value_with(g0, coeffs, scales, GAMMA, MAX_COUPLING)
}

pub fn solve_boundary_value_with(
    g0: f64,
    coeffs: Arc<CoefficientSequences>,
    scales: usize,
    gamma: f64,
    max_coupling: f64,
) -> Result<FlowTrajectory> {
    if !(g0 >= 0.0 && g0 <= max_coupling) {
        return invalid(format!("initial coupling {g0} outside [0, {max_coupling}]"));
    }
    if scales > coeffs.len() {
        return Err(Error::ScaleOutOfRange {
            scale: scales,
            len: coeffs.len(),
        });
    }
    let c = &*coeffs;
    let mut g = Vec::with_capacity(scales + 1);
    g.push(g0);
    for j in 0..scales {
        let gj = g[j];
        let factor = 1.0 - gamma * c.beta[j] * gj;
        if factor <= 0.0 {
            return Err(Error::InvalidStep { scale: j, factor });
        }
        g.push(gj - c.beta[j] * gj * gj);
    }
    let mut z = vec![0.0; scales + 1];
    for j in (0..scales).rev() {
        z[j] = z[j + 1] + c.theta[j] * g[j] * g[j];
    }
    let mut mu = vec![0.0; scales + 1];
    let l2 = l2(c);
    for j in (0..scales).rev() {
        let gj = g[j];
        let factor = 1.0 - gamma * c.beta[j] * gj;
        mu[j] = (mu[j + 1] - c.eta[j] * gj + c.xi[j] * gj * gj + c.pi[j] * gj * z[j]) / (l2 * factor);
    }
    let states = (0..=scales)
        .map(|j| FlowState {
            j,
            g: g[j],
            z: z[j],
            mu: mu[j],
        })
        .collect();
    Ok(FlowTrajectory {
        states,
        derivative: None,
        m2: coeffs.m2,
        coeffs,
        g0,
        gamma,
    })
}

impl FlowTrajectory {
    pub fn scales(&self) -> usize {
        self.states.len() - 1
    }

    pub fn mu0_c(&self) -> f64 {
        self.states[0].mu
    }

    pub fn z0_c(&self) -> f64 {
        self.states[0].z
    }

    pub fn last(&self) -> &FlowState {
        self.states.last().unwrap()
    }

    /// `χ_J g_J³`, the size of the neglected third-order terms at the last scale.
    pub fn truncation_indicator(&self) -> f64 {
        let last = self.last();
        let chi = self
            .coeffs
            .chi
            .get(last.j.min(self.coeffs.len().saturating_sub(1)))
            .copied()
            .unwrap_or(1.0);
        chi * last.g.powi(3)
    }

    /// Largest defect `|F(state_j) − state_{j+1}|`, relative to the size of the terms entering
    /// each component.
    pub fn replay_defect(&self) -> Result<f64> {
        let c = &*self.coeffs;
        let mut worst: f64 = 0.0;
        for w in self.states.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let next = step_forward_with(a, c, self.gamma)?;
            let j = a.j;
            let g2 = a.g * a.g;
            let scale_g = a.g.abs() + (c.beta[j] * g2).abs();
            let scale_z = a.z.abs() + (c.theta[j] * g2).abs() + b.z.abs();
            let scale_mu = (l2(c) * a.mu).abs()
                + (c.eta[j] * a.g).abs()
                + (c.xi[j] * g2).abs()
                + (c.pi[j] * a.g * a.z).abs()
                + b.mu.abs();
            for (d, s) in [
                (next.g - b.g, scale_g),
                (next.z - b.z, scale_z),
                (next.mu - b.mu, scale_mu),
            ] {
                if s > 0.0 {
                    worst = worst.max(d.abs() / s);
                }
            }
        }
        Ok(worst)
    }

    /// Attaches the derivative of the flow with respect to `μ₀`, started from
    /// `(g′, z′, μ′) = (0, 0, 1)`.
    pub fn with_derivative(mut self) -> Result<Self> {
        self.derivative = Some(derivative_flow(&self)?);
        Ok(self)
    }

    pub fn derivative_summary(&self) -> Option<DerivativeSummary> {
        let der = self.derivative.as_ref()?;
        let last = der.last()?;
        let j = self.scales();
        let scale = (self.coeffs.base as f64).powi(-2 * j as i32);
        let g_ratio = self.last().g / self.g0;
        Some(DerivativeSummary {
            sigma_limit: last.mu_prime / last.pi,
            c_est: last.mu_prime * scale * g_ratio.powf(-self.gamma),
            product_form: last.pi * scale * g_ratio.powf(-self.gamma),
            nu_prime: last.mu_prime * scale,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSummary {
    /// `μ′_J / Π_J`.
    pub sigma_limit: f64,
    /// `L^{-2J} μ′_J (g₀/g_J)^γ`, the amplitude multiplying `(g_∞/g₀)^γ`.
    pub c_est: f64,
    /// `Π_J L^{-2J} (g_J/g₀)^{-γ}`, equal to `1 + O(g₀)`.
    pub product_form: f64,
    /// `L^{-2J} μ′_J`.
    pub nu_prime: f64,
}

/// Derivative track `(Π_j, μ′_j, g′_j, z′_j)` along a stored trajectory.
pub fn derivative_flow(traj: &FlowTrajectory) -> Result<Vec<DerivativeStep>> {
    let c = &*traj.coeffs;
    let gamma = traj.gamma;
    let l2 = l2(c);
    let mut out = Vec::with_capacity(traj.states.len());
    let mut d = DerivativeStep {
        pi: 1.0,
        mu_prime: 1.0,
        g_prime: 0.0,
        z_prime: 0.0,
    };
    out.push(d);
    for s in &traj.states[..traj.states.len() - 1] {
        let j = s.j;
        check_scale(j, c)?;
        let factor = 1.0 - gamma * c.beta[j] * s.g;
        if factor <= 0.0 {
            return Err(Error::InvalidStep { scale: j, factor });
        }
        let next = DerivativeStep {
            pi: l2 * d.pi * factor,
            g_prime: d.g_prime * (1.0 - 2.0 * c.beta[j] * s.g),
            z_prime: d.z_prime - 2.0 * c.theta[j] * s.g * d.g_prime,
            mu_prime: l2 * (d.mu_prime * factor - s.mu * gamma * c.beta[j] * d.g_prime)
                + c.eta[j] * d.g_prime
                - 2.0 * c.xi[j] * s.g * d.g_prime
                - c.pi[j] * (d.g_prime * s.z + s.g * d.z_prime),
        };
        out.push(next);
        d = next;
    }
    Ok(out)
}

/// `lim_j L^{-2j} μ′_j`, the derivative of the limiting `ν` with respect to `ν₀`.
pub fn nu_prime_limit(traj: &FlowTrajectory) -> Result<f64> {
    if !(traj.m2 > 0.0) {
        return invalid("the derivative limit needs a positive mass");
    }
    traj.derivative_summary()
        .map(|s| s.nu_prime)
        .ok_or_else(|| Error::InvalidArgument("trajectory carries no derivative track".into()))
}

/// Forward iteration of `g` until successive values differ by less than `tol`.
pub fn g_infinity(g0: f64, coeffs: &CoefficientSequences) -> Result<f64> {
    g_infinity_with(g0, coeffs, 1e-14)
}

pub fn g_infinity_with(g0: f64, coeffs: &CoefficientSequences, tol: f64) -> Result<f64> {
    if !(g0 >= 0.0) {
        return invalid("initial coupling must be nonnegative");
    }
    let mut g = g0;
    for j in 0..coeffs.len() {
        let next = g - coeffs.beta[j] * g * g;
        let done = (next - g).abs() < tol;
        g = next;
        if done {
            // the remaining tail must stay below tolerance too
            let rest: f64 = coeffs.beta[j + 1..].iter().sum::<f64>() * g * g;
            if rest < tol {
                return Ok(g - rest);
            }
        }
    }
    Err(Error::NoConvergence(format!(
        "coupling still moving after {} scales",
        coeffs.len()
    )))
}

/// Massless coupling frozen at the mass scale of `m2`: `g̃_j = ḡ_{min(j, j_m)}(0, g₀)`.
pub fn g_tilde_sequence(m2: f64, g0: f64, massless: &CoefficientSequences) -> Result<Vec<f64>> {
    if !(g0 >= 0.0) {
        return invalid("initial coupling must be nonnegative");
    }
    let j_m = mass_scale(m2, massless.base);
    let n = massless.len();
    let mut out = Vec::with_capacity(n + 1);
    let mut g = g0;
    out.push(g);
    for j in 0..n {
        if j_m.map_or(true, |jm| j < jm) {
            g -= massless.beta[j] * g * g;
        }
        out.push(g);
    }
    Ok(out)
}
