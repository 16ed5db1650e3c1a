//! Computation behind each subcommand. Everything is produced in memory; writing is left to
//! [`crate::manifest`].

use std::sync::Arc;

use anyhow::Context;
use serde_json::json;

use wsaw_core::cov_decomp::{
    beta_sequence, build_decomposition, eta_sequence, CoefficientSequences, DecompositionConfig,
};
use wsaw_core::grassmann::{self_normalisation, two_point_integral, LocalCouplings, PolarConfig, TwoPointMethod};
use wsaw_core::lattice_green::{
    bubble_diagram, bubble_on_torus, green_function, BUBBLE_LOG_COEFFICIENT,
};
use wsaw_core::quad::BzConfig;
use wsaw_core::rg_flow::{g_infinity, nu_prime_limit, solve_boundary_value};
use wsaw_core::susceptibility::{invert_g, ode_asymptotics, NuCMode, Prediction, PredictionContext};
use wsaw_core::walk_mc::{path_statistics, susceptibility_mc, Estimate};
use wsaw_core::{Exec, Geometry, GraphLaplacian, LatticeSpec};

use crate::output::{cell, fmt_f64, Artifact};
use crate::params::*;

pub fn execute(params: &Params) -> anyhow::Result<Vec<Artifact>> {
    match params {
        Params::Green(p) => green(p),
        Params::Bubble(p) => bubble(p),
        Params::Decompose(p) => decompose(p),
        Params::Flow(p) => flow(p),
        Params::Predict(p) => predict(p),
        Params::OdeLemma(p) => ode(p),
        Params::SusyVerify(p) => susy(p),
        Params::WalkMc(p) => walk(p),
    }
}

fn bz(grid: usize) -> BzConfig {
    BzConfig::with_order(grid)
}

fn green(p: &GreenParams) -> anyhow::Result<Vec<Artifact>> {
    let spec = parse_geometry(p.dim, &p.geometry)?;
    let x = if p.x.is_empty() {
        match spec.geometry {
            Geometry::Graph(_) => vec![0],
            _ => vec![0; p.dim],
        }
    } else {
        p.x.clone()
    };
    let e = green_function(&spec, p.mass2, &x, &bz(p.grid))?;
    let data = json!({
        "dim": p.dim,
        "geometry": p.geometry,
        "mass2": p.mass2,
        "x": x,
        "value": e.value,
        "abs_error_estimate": e.abs_error_estimate,
        "grid": e.grid,
    });
    Ok(vec![Artifact::json("green.json", "green", &data)?])
}

fn bubble(p: &BubbleParams) -> anyhow::Result<Vec<Artifact>> {
    let cfg = bz(p.grid);
    let (value, err, grid) = match p.torus {
        Some(period) => (bubble_on_torus(p.dim, period, p.mass2, cfg.exec)?, 0.0, None),
        None => {
            let e = bubble_diagram(p.dim, p.mass2, &cfg)?;
            (e.value, e.abs_error_estimate, Some(e.grid))
        }
    };
    let log_ratio = (p.dim == 4 && p.mass2 > 0.0 && p.mass2 < 1.0).then(|| value / (1.0 / p.mass2).ln());
    let data = json!({
        "dim": p.dim,
        "mass2": p.mass2,
        "torus": p.torus,
        "value": value,
        "abs_error_estimate": err,
        "grid": grid,
        "value_over_log": log_ratio,
        "log_coefficient": BUBBLE_LOG_COEFFICIENT,
    });
    Ok(vec![Artifact::json("bubble.json", "bubble", &data)?])
}

fn decompose(p: &DecomposeParams) -> anyhow::Result<Vec<Artifact>> {
    let spec = parse_geometry(p.dim, &p.geometry)?;
    let cfg = DecompositionConfig {
        bz: bz(p.grid),
        audit_modes: p.audit_modes,
    };
    let d = build_decomposition(&spec, p.base, p.mass2, p.scales, &cfg)?;
    let coeffs = CoefficientSequences::from_decomposition(&d, p.omega)?;
    let beta = beta_sequence(&d);
    let eta = eta_sequence(&d);
    let l2 = (p.base as f64).powi(2);
    let sum_beta: f64 = beta.iter().sum();
    let eta_sum: f64 = eta.iter().enumerate().map(|(l, e)| e * l2.powi(-(l as i32 + 1))).sum();
    let bubble = match &spec.geometry {
        Geometry::Window { .. } if p.mass2 > 0.0 || p.dim > 4 => Some(bubble_diagram(p.dim, p.mass2, &cfg.bz)?.value),
        Geometry::Torus { period } if p.mass2 > 0.0 => Some(bubble_on_torus(p.dim, *period as usize, p.mass2, cfg.bz.exec)?),
        _ => None,
    };
    let two_c0 = match &spec.geometry {
        Geometry::Window { .. } if p.mass2 > 0.0 || p.dim > 2 => {
            Some(2.0 * green_function(&spec, p.mass2, &vec![0; p.dim], &cfg.bz)?.value)
        }
        _ => None,
    };
    let rows = d
        .slices
        .iter()
        .enumerate()
        .map(|(j, s)| {
            vec![
                j.to_string(),
                s.index.to_string(),
                fmt_f64(s.time_lo),
                fmt_f64(s.time_hi),
                fmt_f64(s.diagonal),
                fmt_f64(s.diagonal_error),
                fmt_f64(s.range),
                fmt_f64(s.tail_fraction),
                fmt_f64(s.min_multiplier),
                fmt_f64(beta[j]),
                fmt_f64(eta[j]),
                fmt_f64(coeffs.chi[j]),
                fmt_f64(d.w_norms[j + 1]),
            ]
        })
        .collect();
    let csv = Artifact::csv(
        "decomposition.csv",
        "decomposition-table",
        &[
            "j", "slice", "time_lo", "time_hi", "diagonal", "diagonal_error", "range", "tail_fraction",
            "min_multiplier", "beta", "eta", "chi", "w_norm",
        ],
        rows,
    );
    let data = json!({
        "dim": p.dim,
        "geometry": p.geometry,
        "mass2": p.mass2,
        "L": p.base,
        "scales": p.scales,
        "omega": p.omega,
        "sum_beta": sum_beta,
        "bubble": bubble,
        "sum_beta_relative_gap": bubble.map(|b| (sum_beta - b).abs() / b),
        "eta_weighted_sum": eta_sum,
        "two_c0": two_c0,
        "telescoping_residual": d.telescoping_residual,
        "j_m": coeffs.j_m,
        "j_omega": coeffs.j_omega,
        "remainder": d.remainder,
        "beta": beta,
        "eta": eta,
        "chi": coeffs.chi,
    });
    Ok(vec![csv, Artifact::json("decomposition.json", "decomposition-summary", &data)?])
}

fn flow(p: &FlowParams) -> anyhow::Result<Vec<Artifact>> {
    let spec = LatticeSpec::infinite(4)?;
    let cfg = DecompositionConfig {
        bz: bz(p.grid),
        ..DecompositionConfig::default()
    };
    let d = build_decomposition(&spec, p.base, p.mass2, p.scales, &cfg)?;
    let mut coeffs = CoefficientSequences::from_decomposition(&d, p.omega)?;
    if let Some(table) = &p.table {
        coeffs = coeffs.with_table(table)?;
    }
    let coeffs = Arc::new(coeffs);
    let traj = solve_boundary_value(p.g0, coeffs.clone(), p.scales)?.with_derivative()?;
    let der = traj.derivative.as_ref().context("derivative track missing")?;
    let rows = traj
        .states
        .iter()
        .zip(der)
        .map(|(s, dv)| {
            let at = |v: &Vec<f64>| cell(v.get(s.j).copied().filter(|_| s.j < p.scales));
            vec![
                s.j.to_string(),
                fmt_f64(s.g),
                fmt_f64(s.z),
                fmt_f64(s.mu),
                fmt_f64(dv.pi),
                fmt_f64(dv.mu_prime),
                at(&coeffs.beta),
                at(&coeffs.eta),
                at(&coeffs.chi),
            ]
        })
        .collect();
    let csv = Artifact::csv("flow.csv", "flow-trajectory", &["j", "g", "z", "mu", "pi", "mu_prime", "beta", "eta", "chi_j"], rows);
    let massive = p.mass2 > 0.0;
    let bubble = if massive {
        Some(bubble_diagram(4, p.mass2, &cfg.bz)?.value)
    } else {
        None
    };
    let g_inf = if massive { g_infinity(p.g0, &coeffs).ok() } else { None };
    let data = json!({
        "g0": p.g0,
        "mass2": p.mass2,
        "L": p.base,
        "scales": p.scales,
        "gamma": traj.gamma,
        "mu0_c": traj.mu0_c(),
        "z0_c": traj.z0_c(),
        "g_final": traj.last().g,
        "g_infinity": g_inf,
        "g_inf": g_inf,
        "c_est": traj.derivative_summary().map(|s| s.c_est),
        "bubble": bubble,
        "g_infinity_times_bubble": g_inf.zip(bubble).map(|(g, b)| g * b),
        "nu_prime_limit": if massive { Some(nu_prime_limit(&traj)?) } else { None },
        "derivative": traj.derivative_summary(),
        "truncation_indicator": traj.truncation_indicator(),
        "replay_defect": traj.replay_defect()?,
        "j_m": coeffs.j_m,
        "j_omega": coeffs.j_omega,
    });
    Ok(vec![csv, Artifact::json("flow.json", "flow-summary", &data)?])
}

fn predict(p: &PredictParams) -> anyhow::Result<Vec<Artifact>> {
    let cfg = DecompositionConfig {
        bz: bz(p.grid),
        ..DecompositionConfig::default()
    };
    anyhow::ensure!(
        !(p.c_est && p.c0.is_some()),
        crate::UserError("--c0 and --c-est are exclusive".into())
    );
    let needs_flow = p.mode == NuCMode::Flow || p.c_est;
    let ctx = if needs_flow {
        PredictionContext::with_flow(&cfg, p.scales)?
    } else {
        PredictionContext::leading(&cfg)?
    };
    let c0 = if p.c_est {
        let massless = ctx.massless.clone().context("massless coefficients missing")?;
        let g0 = invert_g(p.g, |g0| Ok(ctx.critical_data(g0)?.1), wsaw_core::rg_flow::MAX_COUPLING)?;
        let t = solve_boundary_value(g0, massless, p.scales)?.with_derivative()?;
        Some(t.derivative_summary().context("derivative track missing")?.c_est)
    } else {
        p.c0
    };
    let pred = Prediction::new(p.g, p.mode, &ctx, c0)?;
    let data = json!({
        "prediction": pred,
        "mode": p.mode,
        "a": ctx.a,
        "eps": p.eps,
        "chi": pred.chi_of_eps(p.eps)?,
        "m2": pred.m2_of_eps(p.eps)?,
    });
    let mut grid: Vec<f64> = (0..=44).map(|k| 10f64.powf(-1.0 - 0.25 * k as f64)).collect();
    grid.push(p.eps);
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    let rows = grid
        .iter()
        .map(|&e| Ok(vec![fmt_f64(e), fmt_f64(pred.chi_of_eps(e)?), fmt_f64(pred.m2_of_eps(e)?)]))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(vec![
        Artifact::json("predict.json", "prediction", &data)?,
        Artifact::csv("predict.csv", "prediction-table", &["eps", "chi", "m2"], rows),
    ])
}

fn ode(p: &OdeParams) -> anyhow::Result<Vec<Artifact>> {
    let table = ode_asymptotics(p.gamma, p.t_min)?;
    let gaps: Vec<f64> = table.iter().map(|r| (r.ratio - 1.0).abs()).collect();
    let data = json!({
        "gamma": p.gamma,
        "t_min": p.t_min,
        "rows": table.len(),
        "first_ratio": table.first().map(|r| r.ratio),
        "last_ratio": table.last().map(|r| r.ratio),
        "monotone": gaps.windows(2).all(|w| w[1] <= w[0]),
    });
    let rows = table
        .iter()
        .map(|r| vec![fmt_f64(r.t), fmt_f64(r.u), fmt_f64(r.reference), fmt_f64(r.ratio)])
        .collect();
    Ok(vec![
        Artifact::csv("ode.csv", "ode-table", &["t", "u", "reference", "ratio"], rows),
        Artifact::json("ode.json", "ode-summary", &data)?,
    ])
}

fn susy(p: &SusyParams) -> anyhow::Result<Vec<Artifact>> {
    let lap = GraphLaplacian::from_name(&p.graph)?;
    let cfg = PolarConfig {
        order: p.order,
        panels: p.panels,
        angular: p.angular,
        cutoff: p.cutoff,
        exec: Exec::default(),
    };
    let value = two_point_integral(&lap, p.g, p.nu, p.a, p.b, p.method, &cfg)?;
    let alt_method = match p.method {
        TwoPointMethod::Grassmann => TwoPointMethod::Determinant,
        TwoPointMethod::Determinant => TwoPointMethod::Grassmann,
    };
    // the alternative route may be out of its size budget; that is reported, not fatal
    let alt = two_point_integral(&lap, p.g, p.nu, p.a, p.b, alt_method, &cfg);
    let couplings = LocalCouplings::uniform(lap.sites(), 1.0, p.g, p.nu);
    let norm = self_normalisation(&lap, &couplings, p.method, &cfg)?;
    let data = json!({
        "graph": p.graph,
        "sites": lap.sites(),
        "g": p.g,
        "nu": p.nu,
        "a": p.a,
        "b": p.b,
        "method": p.method,
        "value": value.value.re,
        "value_imag": value.value.im,
        "abs_error": value.abs_error,
        "evaluations": value.evaluations,
        "alt_method": alt_method,
        "alt_value": alt.as_ref().ok().map(|e| e.value.re),
        "residual_vs_alt_method": alt.as_ref().ok().map(|e| (e.value - value.value).norm()),
        "alt_unavailable": alt.as_ref().err().map(|e| e.to_string()),
        "self_norm": norm.value.re,
        "self_norm_residual": (norm.value - 1.0).norm(),
    });
    Ok(vec![Artifact::json("susy.json", "susy-verify", &data)?])
}

fn walk(p: &WalkParams) -> anyhow::Result<Vec<Artifact>> {
    let spec = parse_geometry(p.dim, &p.geometry)?;
    let exec = Exec::default();
    let stats = path_statistics(&spec, p.g, p.horizon, p.samples, p.seed, exec)?;
    let chi = match p.nu {
        Some(nu) => Some(susceptibility_mc(&spec, p.g, nu, p.t_max, p.samples, p.seed, exec)?),
        None => None,
    };
    let data = json!({
        "dim": p.dim,
        "geometry": p.geometry,
        "g": p.g,
        "T": p.horizon,
        "samples": p.samples,
        "seed": p.seed,
        "intersection": stats.intersection,
        "ct": stats.ct,
        "jumps": stats.jumps,
        "nu": p.nu,
        "susceptibility": chi,
        "free_susceptibility": p.nu.map(|nu| 1.0 / nu),
    });
    let mut rows = vec![
        estimate_row("intersection", &stats.intersection),
        estimate_row("ct", &stats.ct),
        estimate_row("jumps", &stats.jumps),
    ];
    if let Some(c) = &chi {
        rows.push(estimate_row("susceptibility", &c.truncated));
    }
    Ok(vec![
        Artifact::json("walk.json", "walk-mc", &data)?,
        Artifact::csv("walk.csv", "walk-mc-table", &["quantity", "mean", "std_error", "n_samples", "seed"], rows),
    ])
}

fn estimate_row(name: &str, e: &Estimate) -> Vec<String> {
    vec![name.into(), fmt_f64(e.mean), fmt_f64(e.std_error), e.n_samples.to_string(), e.seed.to_string()]
}
