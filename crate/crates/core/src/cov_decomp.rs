//! Multiscale decomposition of `(−Δ + m²)⁻¹` and the coefficient sequences of the flow.
//!
//! Scale `j ≥ 1` keeps the Schwinger times `t ∈ [T_{j-1}, T_j)` with `T_0 = 0` and
//! `T_j = L^{2(j-1)}`:
//!
//! ```text
//! Ĉ_j(k) = (e^{-T_{j-1} s} − e^{-T_j s}) / s,    s = 4Σ sin²(k_i/2) + m²,
//! ```
//!
//! so `Ĉ_j = Ĉ u_j` with `u_j = e^{-T_{j-1}s} − e^{-T_j s}` a smooth partition of unity
//! concentrated where `s ~ L^{-2(j-1)}`. The remainder after `J` scales is `e^{-T_J s}/s`.
//! In position space `C_j(x) = ∫ e^{-m²t} p_t(x) dt` over the same window, where `p_t` is the
//! transition kernel of the rate-`2d` walk, so each slice is a positive kernel.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::lattice::{Geometry, LatticeSpec};
use crate::quad::{integrate_bz, laplacian_symbol, sum_torus, BzConfig, Infrared, Rule};

/// Schwinger time `T_j` bounding scale `j` from above.
pub fn scale_time(base: u32, j: usize) -> f64 {
    if j == 0 {
        0.0
    } else {
        (base as f64).powi(2 * (j as i32 - 1))
    }
}

/// `(e^{-a s} − e^{-b s}) / s` for `0 ≤ a < b ≤ ∞`, accurate for small `s`.
#[inline]
pub fn window_multiplier(a: f64, b: f64, s: f64) -> f64 {
    if s == 0.0 {
        return b - a;
    }
    if b.is_infinite() {
        return (-a * s).exp() / s;
    }
    (-a * s).exp() * -(-(b - a) * s).exp_m1() / s
}

/// `Ĉ_j` at full symbol `s` (including the mass).
#[inline]
pub fn slice_multiplier(base: u32, j: usize, s: f64) -> f64 {
    window_multiplier(scale_time(base, j - 1), scale_time(base, j), s)
}

/// `ŵ_k = Σ_{i≤k} Ĉ_i = (1 − e^{-T_k s}) / s`.
#[inline]
pub fn partial_multiplier(base: u32, k: usize, s: f64) -> f64 {
    window_multiplier(0.0, scale_time(base, k), s)
}

/// Remainder multiplier `e^{-T_J s} / s`.
#[inline]
pub fn remainder_multiplier(base: u32, scales: usize, s: f64) -> f64 {
    window_multiplier(scale_time(base, scales), f64::INFINITY, s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSlice {
    /// Scale index; the remainder carries `J + 1`.
    pub index: usize,
    pub time_lo: f64,
    /// `f64::INFINITY` for the remainder.
    pub time_hi: f64,
    /// `C_{j;0,0}`.
    pub diagonal: f64,
    pub diagonal_error: f64,
    /// Nominal range `L^j / 2`.
    pub range: f64,
    /// Share of `Σ_x C_j(x)` carried by `|x|_∞ ≥ range`.
    pub tail_fraction: f64,
    /// Smallest multiplier met on the sampled modes.
    pub min_multiplier: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub spec: LatticeSpec,
    pub base: u32,
    pub m2: f64,
    pub slices: Vec<KernelSlice>,
    pub remainder: KernelSlice,
    /// `8 Σ_x w_k(x)²` for `k = 0..=J`.
    pub w_norms: Vec<f64>,
    beta: Vec<f64>,
    /// Largest relative telescoping defect over the sampled modes.
    pub telescoping_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionConfig {
    pub bz: BzConfig,
    /// Number of sampled modes for the telescoping and positivity audit.
    pub audit_modes: usize,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        DecompositionConfig {
            bz: BzConfig::default(),
            audit_modes: 4096,
        }
    }
}

/// Builds `J` slices plus the remainder for `(−Δ + m²)⁻¹` on a window or torus.
pub fn build_decomposition(
    spec: &LatticeSpec,
    base: u32,
    m2: f64,
    scales: usize,
    cfg: &DecompositionConfig,
) -> Result<Decomposition> {
    if base < 2 {
        return invalid("scale base L must be at least 2");
    }
    if scales == 0 {
        return invalid("need at least one scale");
    }
    if !(m2.is_finite() && m2 >= 0.0) {
        return invalid(format!("mass-squared must be finite and nonnegative, got {m2}"));
    }
    cfg.bz.validate()?;
    let d = spec.dim;
    let j_max = scales;
    let t = |j: usize| scale_time(base, j);
    if !t(j_max).is_finite() {
        return invalid("too many scales for double precision");
    }

    // components: [diag_1..diag_J | beta_0..beta_{J-1} | wnorm_1..wnorm_J]
    let n_out = 3 * j_max;
    let times: Vec<f64> = (0..=j_max).map(t).collect();
    let integrand = |s: f64, out: &mut [f64]| {
        // m_j = expm1(-T_j s), p_j = exp(-T_j s); ŵ_j = -m_j / s
        let mut m_prev = 0.0;
        let mut p_prev = 1.0;
        let mut w_prev = 0.0;
        let mut saturated = false;
        for j in 1..=j_max {
            let (c, w) = if s == 0.0 {
                (times[j] - times[j - 1], times[j])
            } else if saturated {
                (0.0, 1.0 / s)
            } else {
                let x = times[j] * s;
                let m = (-x).exp_m1();
                let p = if x > 0.5 { (-x).exp() } else { 1.0 + m };
                let c = if times[j - 1] * s <= 0.5 {
                    (m_prev - m) / s
                } else {
                    (p_prev - p) / s
                };
                m_prev = m;
                p_prev = p;
                saturated = x > 800.0;
                (c, -m / s)
            };
            out[j - 1] = c;
            out[j_max + j - 1] = 8.0 * c * (c + 2.0 * w_prev);
            out[2 * j_max + j - 1] = 8.0 * w * w;
            w_prev = w;
        }
    };

    let (sums, errs, remainder_diag, remainder_err) = match &spec.geometry {
        Geometry::Window { .. } => {
            let floor = if m2 > 0.0 { m2.sqrt() } else { 0.0 };
            let ir_scale = floor.max(1.0 / t(j_max).sqrt()).min(1.0);
            let b = integrate_bz(d, n_out, Infrared::Regular { scale: ir_scale }, &cfg.bz, |_, s0, out| {
                integrand(s0 + m2, out)
            });
            let (rd, re) = if m2 > 0.0 || d > 2 {
                let ir = if m2 > 0.0 {
                    Infrared::Regular { scale: m2.sqrt().min(1.0 / t(j_max).sqrt()) }
                } else {
                    Infrared::Singular
                };
                let r = integrate_bz(d, 1, ir, &cfg.bz, |_, s0, out| {
                    out[0] = remainder_multiplier(base, j_max, s0 + m2)
                });
                (r.values[0], r.abs_errors[0])
            } else {
                (f64::INFINITY, 0.0)
            };
            (b.values, b.abs_errors, rd, re)
        }
        Geometry::Torus { period } => {
            if m2 == 0.0 {
                return Err(Error::Singular("massless decomposition on a torus".into()));
            }
            let p = *period as usize;
            let v = sum_torus(d, p, n_out + 1, cfg.bz.exec, |_, s0, out| {
                integrand(s0 + m2, &mut out[..n_out]);
                out[n_out] = remainder_multiplier(base, j_max, s0 + m2);
            });
            let errs = vec![0.0; n_out];
            (v[..n_out].to_vec(), errs, v[n_out], 0.0)
        }
        Geometry::Graph(_) => {
            return invalid("scale decompositions need a translation-invariant lattice");
        }
    };

    let (min_mult, residual) = audit_modes(d, base, m2, j_max, cfg.audit_modes, cfg.bz.exec);
    for (j, &m) in min_mult.iter().enumerate() {
        if m < 0.0 || m.is_nan() {
            return Err(Error::NegativeMultiplier { slice: j + 1, value: m });
        }
    }

    let tails = cfg.bz.exec.map(j_max + 1, |j| {
        let lo = t(j);
        let hi = if j == j_max { f64::INFINITY } else { t(j + 1) };
        let range = 0.5 * (base as f64).powi(j as i32 + 1);
        tail_fraction(&spec.geometry, d, m2, lo, hi, range)
    });

    let slices = (1..=j_max)
        .map(|j| KernelSlice {
            index: j,
            time_lo: t(j - 1),
            time_hi: t(j),
            diagonal: sums[j - 1],
            diagonal_error: errs[j - 1],
            range: 0.5 * (base as f64).powi(j as i32),
            tail_fraction: tails[j - 1],
            min_multiplier: min_mult[j - 1],
        })
        .collect();
    let remainder = KernelSlice {
        index: j_max + 1,
        time_lo: t(j_max),
        time_hi: f64::INFINITY,
        diagonal: remainder_diag,
        diagonal_error: remainder_err,
        range: 0.5 * (base as f64).powi(j_max as i32 + 1),
        tail_fraction: tails[j_max],
        min_multiplier: min_mult[j_max],
    };
    let mut w_norms = vec![0.0];
    w_norms.extend_from_slice(&sums[2 * j_max..3 * j_max]);
    Ok(Decomposition {
        spec: spec.clone(),
        base,
        m2,
        slices,
        remainder,
        w_norms,
        beta: sums[j_max..2 * j_max].to_vec(),
        telescoping_residual: residual,
    })
}

/// Deterministic sample of modes: a Kronecker sequence over the zone plus dyadically small
/// momenta along the diagonal.
pub fn audit_points(d: usize, n: usize) -> Vec<Vec<f64>> {
    let pi = std::f64::consts::PI;
    // generalized golden ratio increments
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=d).map(|i| phi.powi(-(i as i32)).fract()).collect();
    let mut pts: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            alpha
                .iter()
                .map(|a| (2.0 * ((0.5 + a * i as f64).fract()) - 1.0) * pi)
                .collect()
        })
        .collect();
    let mut scale = 1.0;
    while scale > 1e-12 {
        pts.push(vec![scale; d]);
        scale *= 0.25;
    }
    pts.push(vec![0.0; d]);
    pts.push(vec![pi; d]);
    pts
}

fn audit_modes(d: usize, base: u32, m2: f64, j_max: usize, n: usize, exec: Exec) -> (Vec<f64>, f64) {
    let pts = audit_points(d, n);
    let per: Vec<(Vec<f64>, f64)> = exec.map(pts.len(), |i| {
        let s = laplacian_symbol(&pts[i]) + m2;
        let mut mins = Vec::with_capacity(j_max + 1);
        let mut total = 0.0;
        for j in 1..=j_max {
            let c = slice_multiplier(base, j, s);
            mins.push(c);
            total += c;
        }
        let r = if s > 0.0 { remainder_multiplier(base, j_max, s) } else { 0.0 };
        mins.push(r);
        let resid = if s > 0.0 {
            ((total + r) - 1.0 / s).abs() * s
        } else {
            0.0
        };
        (mins, resid)
    });
    let mut mins = vec![f64::INFINITY; j_max + 1];
    let mut worst: f64 = 0.0;
    for (m, r) in &per {
        for (a, b) in mins.iter_mut().zip(m) {
            *a = a.min(*b);
        }
        worst = worst.max(*r);
    }
    (mins, worst)
}

/// Largest relative telescoping defect `|Σ_j Ĉ_j + R̂ − Ĉ| / Ĉ` over the given modes.
pub fn telescoping_defect(decomp: &Decomposition, modes: &[Vec<f64>]) -> f64 {
    let j_max = decomp.slices.len();
    modes
        .iter()
        .map(|k| {
            let s = laplacian_symbol(k) + decomp.m2;
            if s == 0.0 {
                return 0.0;
            }
            let total: f64 = (1..=j_max).map(|j| slice_multiplier(decomp.base, j, s)).sum::<f64>()
                + remainder_multiplier(decomp.base, j_max, s);
            (total * s - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// `P(|X_t| ≤ n)` for the rate-2 walk on ℤ, as `(1/π)∫₀^π e^{-2t(1-cos θ)} D_n(θ) dθ` with the
/// Dirichlet kernel `D_n`.
pub(crate) fn walk_ball_probability(t: f64, n: u64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let pi = std::f64::consts::PI;
    let upper = (12.0 / t.sqrt()).min(pi);
    let nn = n as f64 + 0.5;
    let panels = ((upper * nn / 3.0).ceil() as usize).clamp(4, 2000);
    let rule = Rule::legendre(16);
    let h = upper / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        acc += rule.integrate(p as f64 * h, (p + 1) as f64 * h, |th| {
            let half = 0.5 * th;
            let s = half.sin();
            let kernel = (nn * th).sin() / s;
            (-4.0 * t * s * s).exp() * kernel
        });
    }
    (acc / pi).clamp(0.0, 1.0)
}

/// Same on the cycle `ℤ/Pℤ`, by a finite mode sum.
fn cycle_ball_probability(t: f64, n: u64, period: u64) -> f64 {
    let p = period as usize;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut total = 0.0;
    let r = n.min(period / 2);
    for x in 0..p {
        let dist = x.min(p - x) as u64;
        if dist > r {
            continue;
        }
        let mut v = 0.0;
        for m in 0..p {
            let k = two_pi * m as f64 / p as f64;
            v += (-2.0 * t * (1.0 - k.cos())).exp() * (k * x as f64).cos();
        }
        total += v / p as f64;
    }
    total.clamp(0.0, 1.0)
}

fn tail_fraction(geometry: &Geometry, d: usize, m2: f64, lo: f64, hi: f64, range: f64) -> f64 {
    // inside means every coordinate satisfies |x_i| ≤ ceil(range) - 1
    let inner = (range.ceil() as u64).saturating_sub(1);
    let ball = |t: f64| match geometry {
        Geometry::Torus { period } => {
            if 2 * inner + 1 >= *period {
                1.0
            } else {
                cycle_ball_probability(t, inner, *period)
            }
        }
        _ => walk_ball_probability(t, inner),
    };
    let tail = |t: f64| ((1.0 - ball(t).powi(d as i32)).max(0.0), (-m2 * (t - lo)).exp());
    let hi_eff = if m2 > 0.0 { hi.min(lo + 60.0 / m2) } else { hi };
    if !hi_eff.is_finite() {
        // the massless remainder is eventually entirely out of range
        return 1.0;
    }
    let rule = Rule::legendre(12);
    let mut breaks = vec![lo];
    let start = if lo > 0.0 { lo } else { (hi_eff * 1e-4).min(1e-2) };
    if lo == 0.0 {
        breaks.push(start);
    }
    let mut x = start;
    while x < hi_eff {
        x = (x * 1.5).min(hi_eff);
        if x <= *breaks.last().unwrap() {
            x = hi_eff;
        }
        breaks.push(x);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for ab in breaks.windows(2) {
        for (tt, w) in rule.mapped(ab[0], ab[1]) {
            let (f, weight) = tail(tt);
            num += w * weight * f;
            den += w * weight;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

impl Decomposition {
    pub fn scales(&self) -> usize {
        self.slices.len()
    }
}

/// `β_j = 8 Σ_x (w_{j+1}(x)² − w_j(x)²)` for `j = 0..J`.
pub fn beta_sequence(decomp: &Decomposition) -> Vec<f64> {
    decomp.beta.clone()
}

/// `η_j = 2 L^{2(j+1)} C_{j+1;0,0}` for `j = 0..J`.
pub fn eta_sequence(decomp: &Decomposition) -> Vec<f64> {
    let l2 = (decomp.base as f64).powi(2);
    decomp
        .slices
        .iter()
        .enumerate()
        .map(|(j, s)| 2.0 * l2.powi(j as i32 + 1) * s.diagonal)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleIndices {
    /// `None` when `m² = 0`.
    pub j_m: Option<usize>,
    pub j_omega: usize,
    pub chi: Vec<f64>,
}

/// Smallest `j` with `L^{2j} m² ≥ 1`.
pub fn mass_scale(m2: f64, base: u32) -> Option<usize> {
    if !(m2 > 0.0) {
        return None;
    }
    let l2 = (base as f64).powi(2);
    let mut j = 0;
    let mut p = 1.0;
    while p * m2 < 1.0 {
        p *= l2;
        j += 1;
    }
    Some(j)
}

/// Mass scale, Ω-scale `inf{k : β_j ≤ Ω^{-(j-k)} max β for all j}` and `χ_j = Ω^{-(j-j_Ω)₊}`.
pub fn scale_indices(m2: f64, base: u32, omega: f64, beta: &[f64]) -> Result<ScaleIndices> {
    if !(omega > 1.0) {
        return invalid("Omega must exceed 1");
    }
    if base < 2 {
        return invalid("scale base L must be at least 2");
    }
    let max = beta.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut j_omega = 0usize;
    if max > 0.0 {
        for (j, &b) in beta.iter().enumerate() {
            if b.abs() == 0.0 {
                continue;
            }
            // need Ω^{k-j} ≥ |β_j| / max
            let need = j as f64 + (b.abs() / max).ln() / omega.ln();
            let mut k = need.ceil().max(0.0) as usize;
            while k > 0 && omega.powi(k as i32 - 1 - j as i32) * max >= b.abs() {
                k -= 1;
            }
            while omega.powi(k as i32 - j as i32) * max < b.abs() {
                k += 1;
            }
            j_omega = j_omega.max(k);
        }
    }
    let chi = (0..beta.len())
        .map(|j| omega.powi(-(j.saturating_sub(j_omega) as i32)))
        .collect();
    Ok(ScaleIndices {
        j_m: mass_scale(m2, base),
        j_omega,
        chi,
    })
}

/// User-supplied `θ_j, ξ_j, π_j`; scales not listed are zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub rows: Vec<TableRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub j: usize,
    pub theta: f64,
    pub xi: f64,
    pub pi: f64,
}

impl CoefficientTable {
    /// Reads CSV with header `j,theta,xi,pi`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Table(e.to_string()))?.clone();
        let expected = ["j", "theta", "xi", "pi"];
        if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::Table(format!("expected header j,theta,xi,pi, got {headers:?}")));
        }
        let mut rows = Vec::new();
        for rec in rdr.deserialize() {
            let row: TableRow = rec.map_err(|e| Error::Table(e.to_string()))?;
            if rows.iter().any(|r: &TableRow| r.j == row.j) {
                return Err(Error::Table(format!("scale {} listed twice", row.j)));
            }
            if !(row.theta.is_finite() && row.xi.is_finite() && row.pi.is_finite()) {
                return Err(Error::Table(format!("non-finite entry at scale {}", row.j)));
            }
            rows.push(row);
        }
        Ok(CoefficientTable { rows })
    }
}

/// Everything the quadratic flow consumes at each scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSequences {
    pub base: u32,
    pub m2: f64,
    pub beta: Vec<f64>,
    pub eta: Vec<f64>,
    pub theta: Vec<f64>,
    pub xi: Vec<f64>,
    pub pi: Vec<f64>,
    pub chi: Vec<f64>,
    pub j_m: Option<usize>,
    pub j_omega: usize,
    pub omega: f64,
}

impl CoefficientSequences {
    pub fn from_decomposition(decomp: &Decomposition, omega: f64) -> Result<Self> {
        let beta = beta_sequence(decomp);
        let eta = eta_sequence(decomp);
        CoefficientSequences::from_parts(decomp.base, decomp.m2, beta, eta, omega)
    }

    pub fn from_parts(base: u32, m2: f64, beta: Vec<f64>, eta: Vec<f64>, omega: f64) -> Result<Self> {
        if beta.len() != eta.len() {
            return invalid("beta and eta must have equal length");
        }
        let idx = scale_indices(m2, base, omega, &beta)?;
        let n = beta.len();
        Ok(CoefficientSequences {
            base,
            m2,
            beta,
            eta,
            theta: vec![0.0; n],
            xi: vec![0.0; n],
            pi: vec![0.0; n],
            chi: idx.chi,
            j_m: idx.j_m,
            j_omega: idx.j_omega,
            omega,
        })
    }

    /// Constant sequences, mainly for tests of the recursion itself.
    pub fn constant(len: usize, base: u32, beta: f64, eta: f64) -> Self {
        CoefficientSequences {
            base,
            m2: 0.0,
            beta: vec![beta; len],
            eta: vec![eta; len],
            theta: vec![0.0; len],
            xi: vec![0.0; len],
            pi: vec![0.0; len],
            chi: vec![1.0; len],
            j_m: None,
            j_omega: 0,
            omega: 2.0,
        }
    }

    pub fn with_table(mut self, table: &CoefficientTable) -> Result<Self> {
        for row in &table.rows {
            if row.j >= self.len() {
                return Err(Error::ScaleOutOfRange {
                    scale: row.j,
                    len: self.len(),
                });
            }
            self.theta[row.j] = row.theta;
            self.xi[row.j] = row.xi;
            self.pi[row.j] = row.pi;
        }
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_scale_examples() {
        assert_eq!(mass_scale(1.0, 2), Some(0));
        assert_eq!(mass_scale(0.2, 2), Some(2));
        assert_eq!(mass_scale(0.0, 2), None);
        assert_eq!(mass_scale(1e-3, 2), Some(5));
    }

    #[test]
    fn omega_scale_of_geometric_tail() {
        // flat until 3, then halving: every j ≥ 3 needs k ≥ 3
        let beta = [1.0, 1.0, 1.0, 1.0, 0.5, 0.25, 0.125];
        let idx = scale_indices(0.0, 2, 2.0, &beta).unwrap();
        assert_eq!(idx.j_omega, 3);
        assert_eq!(idx.chi, vec![1.0, 1.0, 1.0, 1.0, 0.5, 0.25, 0.125]);
        // faster than Ω decay keeps the first flat index
        let idx = scale_indices(0.0, 2, 2.0, &[1.0, 1.0, 0.1, 0.001]).unwrap();
        assert_eq!(idx.j_omega, 1);
        assert!(scale_indices(0.0, 2, 1.0, &beta).is_err());
    }

    #[test]
    fn multipliers_telescope_and_stay_positive() {
        for &s in &[0.0, 1e-14, 1e-6, 0.3, 16.0] {
            let total: f64 = (1..=10).map(|j| slice_multiplier(2, j, s)).sum();
            assert!((total - partial_multiplier(2, 10, s)).abs() <= 1e-13 * total.abs().max(1.0));
            for j in 1..=10 {
                assert!(slice_multiplier(2, j, s) >= 0.0);
            }
        }
    }

    #[test]
    fn ball_probability_small_cases() {
        // P(X_t = 0) = e^{-2t} I_0(2t); at t = 1: e^{-2} I_0(2) = 0.3085083225...
        let p = walk_ball_probability(1.0, 0);
        assert!((p - 0.308_508_322_553_671).abs() < 1e-12, "{p}");
        assert!(walk_ball_probability(0.5, 40) > 1.0 - 1e-12);
        let c = cycle_ball_probability(0.7, 0, 5);
        let direct = {
            let mut v = 0.0;
            for m in 0..5 {
                let k = 2.0 * std::f64::consts::PI * m as f64 / 5.0;
                v += (-2.0 * 0.7 * (1.0 - k.cos())).exp();
            }
            v / 5.0
        };
        assert!((c - direct).abs() < 1e-15);
    }

    #[test]
    fn table_loading() {
        let csv = "j,theta,xi,pi\n0,0.1,0.2,0.3\n2,1,2,3\n";
        let t = CoefficientTable::from_csv(csv.as_bytes()).unwrap();
        let c = CoefficientSequences::constant(4, 2, 0.1, 0.0).with_table(&t).unwrap();
        assert_eq!(c.theta, vec![0.1, 0.0, 1.0, 0.0]);
        assert_eq!(c.pi[2], 3.0);
        assert!(CoefficientTable::from_csv("j,a,b,c\n".as_bytes()).is_err());
        assert!(CoefficientTable::from_csv("j,theta,xi,pi\n1,1,1\n".as_bytes()).is_err());
        let big = CoefficientTable::from_csv("j,theta,xi,pi\n9,1,1,1\n".as_bytes()).unwrap();
        assert!(CoefficientSequences::constant(4, 2, 0.1, 0.0).with_table(&big).is_err());
    }
}
