//! Command-line surface. Each subcommand resolves to a complete [`Params`] value before any
//! computation starts.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use wsaw_core::cov_decomp::CoefficientTable;
use wsaw_core::grassmann::TwoPointMethod;
use wsaw_core::susceptibility::NuCMode;

use crate::params::*;
use crate::UserError;

#[derive(Debug, Parser)]
#[command(name = "wsaw", version, about = "Numerics for the 4D weakly self-avoiding walk")]
pub struct Cli {
    /// Output directory [default: wsaw-runs/<subcommand>-<digest>]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for the parallel kernels
    #[arg(long, global = true, env = "WSAW_THREADS")]
    pub threads: Option<usize>,
    /// Replace an existing output directory
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lattice Green function at one point
    Green(GreenArgs),
    /// Bubble diagram
    Bubble(BubbleArgs),
    /// Finite-range covariance decomposition and its coefficient sequences
    Decompose(DecomposeArgs),
    /// Critical quadratic flow with derivative track
    Flow(FlowArgs),
    /// Susceptibility and critical-point predictions
    Predict(PredictArgs),
    /// Asymptotics of the γ-ODE
    OdeLemma(OdeArgs),
    /// Supersymmetric integral checks on small graphs
    SusyVerify(SusyArgs),
    /// Continuous-time walk Monte Carlo
    WalkMc(WalkArgs),
    /// Replay a manifest and compare output digests
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct GreenArgs {
    #[arg(long, default_value_t = 4)]
    dim: usize,
    #[arg(long, default_value = "infinite")]
    geometry: String,
    #[arg(long, default_value_t = 0.0)]
    mass2: f64,
    /// Lattice point, comma separated [default: origin]
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x: Vec<i64>,
    /// Gauss–Legendre order per panel
    #[arg(long, default_value_t = 12)]
    grid: usize,
}

#[derive(Debug, Args)]
pub struct BubbleArgs {
    #[arg(long, default_value_t = 4)]
    dim: usize,
    #[arg(long)]
    mass2: f64,
    #[arg(long, default_value_t = 12)]
    grid: usize,
    /// Exact sum on the torus of this period instead of the infinite lattice
    #[arg(long)]
    torus: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long, default_value_t = 4)]
    dim: usize,
    #[arg(long, default_value = "infinite")]
    geometry: String,
    #[arg(long, default_value_t = 0.0)]
    mass2: f64,
    #[arg(long = "L", default_value_t = 2)]
    base: u32,
    #[arg(long, default_value_t = 24)]
    scales: usize,
    #[arg(long, default_value_t = 2.0)]
    omega: f64,
    #[arg(long, default_value_t = 12)]
    grid: usize,
    /// Modes used for the positivity audit of each slice
    #[arg(long, default_value_t = 4096)]
    audit_modes: usize,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[arg(long)]
    g0: f64,
    #[arg(long, default_value_t = 0.0)]
    mass2: f64,
    #[arg(long = "L", default_value_t = 2)]
    base: u32,
    #[arg(long, default_value_t = 24)]
    scales: usize,
    #[arg(long, default_value_t = 2.0)]
    omega: f64,
    #[arg(long, default_value_t = 12)]
    grid: usize,
    /// CSV with columns j, theta, xi, pi
    #[arg(long = "coeff-table", alias = "table")]
    coeff_table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    g: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value = "leading", value_parser = lowercase_enum::<NuCMode>)]
    mode: NuCMode,
    #[arg(long, default_value_t = 24)]
    scales: usize,
    #[arg(long, default_value_t = 12)]
    grid: usize,
    /// Amplitude of the log correction
    #[arg(long)]
    c0: Option<f64>,
    /// Estimate the amplitude from the massless derivative flow
    #[arg(long)]
    c_est: bool,
}

#[derive(Debug, Args)]
pub struct OdeArgs {
    #[arg(long, default_value_t = 0.25)]
    gamma: f64,
    #[arg(long = "tmin", default_value_t = 1e-8)]
    t_min: f64,
}

#[derive(Debug, Args)]
pub struct SusyArgs {
    /// one-site, path2, triangle, torus:<n>, path<n> or complete<n>
    #[arg(long, default_value = "one-site")]
    graph: String,
    #[arg(long, default_value_t = 0.1)]
    g: f64,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 0)]
    a: usize,
    #[arg(long, default_value_t = 0)]
    b: usize,
    #[arg(long, default_value = "grassmann", value_parser = lowercase_enum::<TwoPointMethod>)]
    method: TwoPointMethod,
    #[arg(long, default_value_t = 12)]
    order: usize,
    #[arg(long, default_value_t = 6)]
    panels: usize,
    #[arg(long, default_value_t = 16)]
    angular: usize,
    #[arg(long, default_value_t = 60.0)]
    cutoff: f64,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    #[arg(long, default_value_t = 4)]
    dim: usize,
    #[arg(long, default_value = "infinite")]
    geometry: String,
    #[arg(long, default_value_t = 0.0)]
    g: f64,
    /// Time horizon for the path statistics
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    /// Also estimate the susceptibility at this ν
    #[arg(long)]
    nu: Option<f64>,
    /// Laplace-transform cutoff [default: 40/ν]
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    pub manifest: PathBuf,
}

fn lowercase_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::from(s)).map_err(|e| e.to_string())
}

impl Command {
    /// The resolved parameter set, or `None` for `reproduce`.
    pub fn params(&self) -> Result<Option<Params>, UserError> {
        let p = match self {
            Command::Green(a) => Params::Green(GreenParams {
                dim: a.dim,
                geometry: a.geometry.clone(),
                mass2: a.mass2,
                x: a.x.clone(),
                grid: a.grid,
            }),
            Command::Bubble(a) => Params::Bubble(BubbleParams {
                dim: a.dim,
                mass2: a.mass2,
                grid: a.grid,
                torus: a.torus,
            }),
            Command::Decompose(a) => Params::Decompose(DecomposeParams {
                dim: a.dim,
                geometry: a.geometry.clone(),
                mass2: a.mass2,
                base: a.base,
                scales: a.scales,
                omega: a.omega,
                grid: a.grid,
                audit_modes: a.audit_modes,
            }),
            Command::Flow(a) => {
                let table = match &a.coeff_table {
                    Some(path) => {
                        let file = std::fs::File::open(path)
                            .map_err(|e| UserError(format!("reading {}: {e}", path.display())))?;
                        Some(
                            CoefficientTable::from_csv(file)
                                .map_err(|e| UserError(format!("{}: {e}", path.display())))?,
                        )
                    }
                    None => None,
                };
                Params::Flow(FlowParams {
                    g0: a.g0,
                    mass2: a.mass2,
                    base: a.base,
                    scales: a.scales,
                    omega: a.omega,
                    grid: a.grid,
                    table,
                })
            }
            Command::Predict(a) => Params::Predict(PredictParams {
                g: a.g,
                eps: a.eps,
                mode: a.mode,
                scales: a.scales,
                grid: a.grid,
                c0: a.c0,
                c_est: a.c_est,
            }),
            Command::OdeLemma(a) => Params::OdeLemma(OdeParams {
                gamma: a.gamma,
                t_min: a.t_min,
            }),
            Command::SusyVerify(a) => Params::SusyVerify(SusyParams {
                graph: a.graph.clone(),
                g: a.g,
                nu: a.nu,
                a: a.a,
                b: a.b,
                method: a.method,
                order: a.order,
                panels: a.panels,
                angular: a.angular,
                cutoff: a.cutoff,
            }),
            Command::WalkMc(a) => Params::WalkMc(WalkParams {
                dim: a.dim,
                geometry: a.geometry.clone(),
                g: a.g,
                horizon: a.horizon,
                nu: a.nu,
                t_max: a.t_max.unwrap_or_else(|| 40.0 / a.nu.unwrap_or(1.0)),
                samples: a.samples,
                seed: a.seed,
            }),
            Command::Reproduce(_) => return Ok(None),
        };
        Ok(Some(p))
    }
}
