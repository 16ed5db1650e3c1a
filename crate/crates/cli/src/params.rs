//! Fully resolved parameter sets, one per subcommand. These are what a manifest records and
//! what `reproduce` replays.

use serde::{Deserialize, Serialize};

use wsaw_core::cov_decomp::CoefficientTable;
use wsaw_core::grassmann::TwoPointMethod;
use wsaw_core::susceptibility::NuCMode;
use wsaw_core::{Geometry, GraphLaplacian, LatticeSpec};

use crate::UserError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", content = "params", rename_all = "kebab-case")]
pub enum Params {
    Green(GreenParams),
    Bubble(BubbleParams),
    Decompose(DecomposeParams),
    Flow(FlowParams),
    Predict(PredictParams),
    OdeLemma(OdeParams),
    SusyVerify(SusyParams),
    WalkMc(WalkParams),
}

impl Params {
    pub fn subcommand(&self) -> &'static str {
        match self {
            Params::Green(_) => "green",
            Params::Bubble(_) => "bubble",
            Params::Decompose(_) => "decompose",
            Params::Flow(_) => "flow",
            Params::Predict(_) => "predict",
            Params::OdeLemma(_) => "ode-lemma",
            Params::SusyVerify(_) => "susy-verify",
            Params::WalkMc(_) => "walk-mc",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Params::WalkMc(p) => Some(p.seed),
            _ => None,
        }
    }

    /// Rebuilds the parameter set from the pieces stored in a manifest.
    pub fn from_manifest(subcommand: &str, params: serde_json::Value) -> Result<Self, UserError> {
        let tagged = serde_json::json!({ "subcommand": subcommand, "params": params });
        serde_json::from_value(tagged).map_err(|e| UserError(format!("manifest parameters: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenParams {
    pub dim: usize,
    pub geometry: String,
    pub mass2: f64,
    pub x: Vec<i64>,
    pub grid: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleParams {
    pub dim: usize,
    pub mass2: f64,
    pub grid: usize,
    pub torus: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeParams {
    pub dim: usize,
    pub geometry: String,
    pub mass2: f64,
    pub base: u32,
    pub scales: usize,
    pub omega: f64,
    pub grid: usize,
    pub audit_modes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParams {
    pub g0: f64,
    pub mass2: f64,
    pub base: u32,
    pub scales: usize,
    pub omega: f64,
    pub grid: usize,
    /// Contents of the `--table` file, stored inline so a replay does not depend on it.
    pub table: Option<CoefficientTable>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictParams {
    pub g: f64,
    pub eps: f64,
    pub mode: NuCMode,
    pub scales: usize,
    pub grid: usize,
    pub c0: Option<f64>,
    /// Take `c₀` from the massless derivative flow.
    pub c_est: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeParams {
    pub gamma: f64,
    pub t_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SusyParams {
    pub graph: String,
    pub g: f64,
    pub nu: f64,
    pub a: usize,
    pub b: usize,
    pub method: TwoPointMethod,
    pub order: usize,
    pub panels: usize,
    pub angular: usize,
    pub cutoff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkParams {
    pub dim: usize,
    pub geometry: String,
    pub g: f64,
    pub horizon: f64,
    pub nu: Option<f64>,
    pub t_max: f64,
    pub samples: u64,
    pub seed: u64,
}

/// `infinite`, `torus:<P>` or `graph:<name>`.
pub fn parse_geometry(dim: usize, name: &str) -> Result<LatticeSpec, UserError> {
    let spec = if name == "infinite" {
        LatticeSpec::infinite(dim)
    } else if let Some(p) = name.strip_prefix("torus:") {
        let period = p
            .parse::<u64>()
            .map_err(|_| UserError(format!("bad torus period in {name}")))?;
        LatticeSpec::new(dim, Geometry::Torus { period })
    } else if let Some(g) = name.strip_prefix("graph:") {
        GraphLaplacian::from_name(g).map(LatticeSpec::graph)
    } else {
        return Err(UserError(format!(
            "unknown geometry {name}; expected infinite, torus:<P> or graph:<name>"
        )));
    };
    spec.map_err(|e| UserError(e.to_string()))
}
