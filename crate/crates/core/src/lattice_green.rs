//! Lattice Green functions `(−Δ + m²)⁻¹` and bubble diagrams.
//!
//! Infinite-lattice values come from the graded Brillouin-zone rule in [`crate::quad`], torus
//! values from exact finite Fourier sums and graph values from a dense Cholesky solve.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::lattice::{Geometry, LatticeSpec};
use crate::quad::{integrate_bz, sum_torus, BzConfig, BzIntegral, Infrared};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    GradedGauss,
    TorusFourier,
    MatrixInverse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub scheme: Scheme,
    pub order: usize,
    pub shells: usize,
    pub nodes: usize,
}

impl GridInfo {
    fn from_bz(b: &BzIntegral) -> Self {
        GridInfo {
            scheme: Scheme::GradedGauss,
            order: b.order,
            shells: b.shells,
            nodes: b.nodes,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub grid: GridInfo,
}

fn check_mass(m2: f64) -> Result<()> {
    if !(m2.is_finite() && m2 >= 0.0) {
        return invalid(format!("mass-squared must be finite and nonnegative, got {m2}"));
    }
    Ok(())
}

fn infrared(m2: f64) -> Infrared {
    if m2 > 0.0 {
        Infrared::Regular { scale: m2.sqrt() }
    } else {
        Infrared::Singular
    }
}

/// `(−Δ + m²)⁻¹_{0x}`.
///
/// On a graph `x` holds a single vertex index and the source is vertex 0. Torus displacements
/// are reduced modulo the period.
pub fn green_function(spec: &LatticeSpec, m2: f64, x: &[i64], cfg: &BzConfig) -> Result<Evaluation> {
    check_mass(m2)?;
    cfg.validate()?;
    let d = spec.dim;
    match &spec.geometry {
        Geometry::Window { .. } => {
            if x.len() != d {
                return invalid(format!("displacement has {} entries, lattice has d = {d}", x.len()));
            }
            if m2 == 0.0 && d <= 2 {
                return Err(Error::Divergent(format!(
                    "massless Green function in d = {d}"
                )));
            }
            let xs: Vec<f64> = x.iter().map(|&xi| xi as f64).collect();
            let b = integrate_bz(d, 1, infrared(m2), cfg, |k, s, out| {
                let phase: f64 = k.iter().zip(&xs).map(|(ki, xi)| (ki * xi).cos()).product();
                out[0] = phase / (s + m2);
            });
            Ok(Evaluation {
                value: b.values[0],
                abs_error_estimate: b.abs_errors[0],
                grid: GridInfo::from_bz(&b),
            })
        }
        Geometry::Torus { period } => {
            if x.len() != d {
                return invalid(format!("displacement has {} entries, lattice has d = {d}", x.len()));
            }
            if m2 == 0.0 {
                return Err(Error::Singular("massless Green function on a torus".into()));
            }
            let p = *period as usize;
            let xs: Vec<f64> = x.iter().map(|&xi| xi.rem_euclid(p as i64) as f64).collect();
            let v = sum_torus(d, p, 1, cfg.exec, |k, s, out| {
                let phase: f64 = k.iter().zip(&xs).map(|(ki, xi)| (ki * xi).cos()).product();
                out[0] = phase / (s + m2);
            });
            Ok(Evaluation {
                value: v[0],
                abs_error_estimate: 0.0,
                grid: GridInfo {
                    scheme: Scheme::TorusFourier,
                    order: p,
                    shells: 0,
                    nodes: p.pow(d as u32),
                },
            })
        }
        Geometry::Graph(lap) => {
            let n = lap.sites();
            let target = match x {
                [t] if *t >= 0 && (*t as usize) < n => *t as usize,
                _ => return invalid(format!("graph target must be one vertex index below {n}")),
            };
            let column = graph_green_column(lap.minus_laplacian(), m2, 0)?;
            Ok(Evaluation {
                value: column[target],
                abs_error_estimate: 0.0,
                grid: GridInfo {
                    scheme: Scheme::MatrixInverse,
                    order: n,
                    shells: 0,
                    nodes: n,
                },
            })
        }
    }
}

fn graph_green_column(minus_lap: nalgebra::DMatrix<f64>, m2: f64, source: usize) -> Result<Vec<f64>> {
    let n = minus_lap.nrows();
    let a = minus_lap + nalgebra::DMatrix::<f64>::identity(n, n) * m2;
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Singular("-Δ + m² is not positive definite".into()))?;
    let mut e = DVector::zeros(n);
    e[source] = 1.0;
    Ok(chol.solve(&e).iter().copied().collect())
}

/// `𝖡_{m²} = 8 Σ_x C_{m²}(x)²` on ℤᵈ, via Parseval.
pub fn bubble_diagram(d: usize, m2: f64, cfg: &BzConfig) -> Result<Evaluation> {
    check_mass(m2)?;
    cfg.validate()?;
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    if m2 == 0.0 && d <= 4 {
        return Err(Error::Divergent(format!("massless bubble diagram in d = {d}")));
    }
    let b = integrate_bz(d, 1, infrared(m2), cfg, |_, s, out| {
        let c = 1.0 / (s + m2);
        out[0] = 8.0 * c * c;
    });
    Ok(Evaluation {
        value: b.values[0],
        abs_error_estimate: b.abs_errors[0],
        grid: GridInfo::from_bz(&b),
    })
}

/// The bubble diagram of the torus `(ℤ/Pℤ)^d` as a Fourier mode sum.
pub fn bubble_on_torus(d: usize, period: usize, m2: f64, exec: Exec) -> Result<f64> {
    check_mass(m2)?;
    if m2 == 0.0 {
        return Err(Error::Singular("massless bubble on a torus".into()));
    }
    if d == 0 || period == 0 {
        return invalid("dimension and period must be positive");
    }
    let v = sum_torus(d, period, 1, exec, |_, s, out| {
        let c = 1.0 / (s + m2);
        out[0] = 8.0 * c * c;
    });
    Ok(v[0])
}

/// `𝖺 = 2 C₀(0)` in four dimensions.
pub fn constant_a(cfg: &BzConfig) -> Result<Evaluation> {
    let c = green_function(&LatticeSpec::infinite(4)?, 0.0, &[0, 0, 0, 0], cfg)?;
    Ok(Evaluation {
        value: 2.0 * c.value,
        abs_error_estimate: 2.0 * c.abs_error_estimate,
        grid: c.grid,
    })
}

/// `𝖻 = 1/(2π²)`, the coefficient of `log(1/m²)` in the four-dimensional bubble.
pub const BUBBLE_LOG_COEFFICIENT: f64 = 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::PI);
