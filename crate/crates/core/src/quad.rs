//! Quadrature rules and the graded Brillouin-zone integrator.

use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussLaguerre, GaussLegendre};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::Exec;

/// A one-dimensional node/weight rule.
#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Gauss–Legendre on `[-1, 1]`.
    pub fn legendre(n: usize) -> Rule {
        let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
        let (nodes, weights) = rule.iter().map(|(x, w)| (*x, *w)).unzip();
        Rule { nodes, weights }
    }

    /// Gauss–Laguerre for `∫₀^∞ e^{-x} f(x) dx`.
    pub fn laguerre(n: usize) -> Rule {
        let alpha = FiniteAboveNegOneF64::new(0.0).unwrap();
        let rule = GaussLaguerre::new(NonZeroUsize::new(n.max(1)).unwrap(), alpha);
        let (nodes, weights) = rule.iter().map(|(x, w)| (*x, *w)).unzip();
        Rule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights of a Legendre rule mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Composite rule over consecutive break points.
pub fn integrate_panels<F: FnMut(f64) -> f64>(rule: &Rule, breaks: &[f64], mut f: F) -> f64 {
    breaks
        .windows(2)
        .map(|ab| rule.integrate(ab[0], ab[1], &mut f))
        .sum()
}

/// `∫_a^∞ f` over geometrically growing panels `[a, a+h], [a+h, a+3h], …` until four
/// consecutive panels contribute less than `rel_tol` of the running total.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
    rule: &Rule,
    a: f64,
    h: f64,
    rel_tol: f64,
    mut f: F,
) -> f64 {
    let mut total = 0.0;
    let mut lo = a;
    let mut width = h;
    let mut quiet = 0;
    for _ in 0..400 {
        let part = rule.integrate(lo, lo + width, &mut f);
        total += part;
        if part.abs() <= rel_tol * total.abs() {
            quiet += 1;
            if quiet >= 4 {
                break;
            }
        } else {
            quiet = 0;
        }
        lo += width;
        width *= 2.0;
    }
    total
}

/// `4 Σ sin²(k_i/2)`, the symbol of `-Δ` on ℤᵈ.
#[inline]
pub fn laplacian_symbol(k: &[f64]) -> f64 {
    k.iter().map(|&ki| symbol_1d(ki)).sum()
}

#[inline]
pub(crate) fn symbol_1d(k: f64) -> f64 {
    let s = (0.5 * k).sin();
    4.0 * s * s
}

/// Resolution of the graded Brillouin-zone rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BzConfig {
    /// Gauss–Legendre points per axis on every box.
    pub order: usize,
    /// Shells are refined until their side falls below `ir_margin` times the infrared scale.
    pub ir_margin: f64,
    /// Innermost shell side for integrands singular at `k = 0`.
    pub singular_floor: f64,
    pub exec: Exec,
}

impl Default for BzConfig {
    fn default() -> Self {
        BzConfig {
            order: 12,
            ir_margin: 1e-3,
            singular_floor: 1e-6,
            exec: Exec::Parallel,
        }
    }
}

impl BzConfig {
    pub fn with_order(order: usize) -> Self {
        BzConfig {
            order,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 3 {
            return invalid("quadrature order must be at least 3");
        }
        if !(self.ir_margin > 0.0 && self.ir_margin < 1.0) {
            return invalid("ir_margin must lie in (0, 1)");
        }
        if !(self.singular_floor > 0.0 && self.singular_floor < 0.1) {
            return invalid("singular_floor must lie in (0, 0.1)");
        }
        Ok(())
    }

    fn low_order(&self) -> usize {
        (2 * self.order / 3).max(2)
    }
}

/// Behaviour of the integrand near `k = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Infrared {
    /// Smooth near the origin on momentum scales below `scale`; the central cube is integrated
    /// directly once the shells are fine enough.
    Regular { scale: f64 },
    /// Integrable singularity at the origin; the central cube is estimated by geometric
    /// extrapolation of the shell contributions.
    Singular,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BzIntegral {
    pub values: Vec<f64>,
    pub abs_errors: Vec<f64>,
    pub order: usize,
    pub shells: usize,
    pub nodes: usize,
}

struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
    shell: usize,
}

/// `∫_{[-π,π]^d} f(k) dk/(2π)^d` for an integrand even in every coordinate.
///
/// The octant `[0,π]^d` is split into dyadic shells `[0,a]^d \ [0,a/2]^d`, each a union of
/// `2^d - 1` boxes carrying a tensor Gauss–Legendre rule. `f(k, s, out)` writes `n_out`
/// components, where `s = 4Σ sin²(k_i/2)`. Errors are estimated from an embedded lower-order
/// rule on the same boxes.
pub fn integrate_bz<F>(d: usize, n_out: usize, ir: Infrared, cfg: &BzConfig, f: F) -> BzIntegral
where
    F: Fn(&[f64], f64, &mut [f64]) + Sync + Send,
{
    assert!(d >= 1, "dimension must be positive");
    let stop = match ir {
        Infrared::Regular { scale } => (cfg.ir_margin * scale).max(1e-300),
        Infrared::Singular => cfg.singular_floor,
    };
    let mut cells = Vec::new();
    let mut side = std::f64::consts::PI;
    let mut shell = 0;
    loop {
        let half = 0.5 * side;
        for mask in 1usize..(1 << d) {
            let (lo, hi) = (0..d)
                .map(|i| if mask >> i & 1 == 1 { (half, side) } else { (0.0, half) })
                .unzip();
            cells.push(Cell { lo, hi, shell });
        }
        side = half;
        shell += 1;
        if side <= stop || shell > 1100 {
            break;
        }
    }
    let n_shells = shell;
    if let Infrared::Regular { .. } = ir {
        cells.push(Cell {
            lo: vec![0.0; d],
            hi: vec![side; d],
            shell: n_shells,
        });
    }

    let high = Rule::legendre(cfg.order);
    let low = Rule::legendre(cfg.low_order());
    let per_cell: Vec<(Vec<f64>, Vec<f64>)> = cfg.exec.map(cells.len(), |c| {
        let cell = &cells[c];
        (
            tensor_box(d, n_out, &high, &cell.lo, &cell.hi, &f),
            tensor_box(d, n_out, &low, &cell.lo, &cell.hi, &f),
        )
    });

    let norm = (1.0 / std::f64::consts::PI).powi(d as i32);
    let mut values = vec![0.0; n_out];
    let mut abs_errors = vec![0.0; n_out];
    let mut shell_sums = vec![vec![0.0; n_out]; n_shells + 1];
    for (cell, (hi_v, lo_v)) in cells.iter().zip(&per_cell) {
        for i in 0..n_out {
            values[i] += hi_v[i];
            abs_errors[i] += (hi_v[i] - lo_v[i]).abs();
            shell_sums[cell.shell][i] += hi_v[i];
        }
    }
    if ir == Infrared::Singular && n_shells >= 3 {
        for i in 0..n_out {
            let s = |l: usize| shell_sums[l][i];
            let tail_from = |l: usize| {
                let r = s(l) / s(l - 1);
                if r.is_finite() && r > 0.0 && r < 1.0 {
                    s(l) * r / (1.0 - r)
                } else {
                    0.0
                }
            };
            let last = n_shells - 1;
            let tail = tail_from(last);
            let tail_prev = tail_from(last - 1);
            values[i] += tail;
            abs_errors[i] += (tail_prev - s(last) - tail).abs();
        }
    }
    for i in 0..n_out {
        values[i] *= norm;
        abs_errors[i] *= norm;
    }
    let nodes = cells.len() * (high.len().pow(d as u32) + low.len().pow(d as u32));
    BzIntegral {
        values,
        abs_errors,
        order: cfg.order,
        shells: n_shells,
        nodes,
    }
}

fn tensor_box<F>(d: usize, n_out: usize, rule: &Rule, lo: &[f64], hi: &[f64], f: &F) -> Vec<f64>
where
    F: Fn(&[f64], f64, &mut [f64]),
{
    let q = rule.len();
    let axes: Vec<Vec<(f64, f64, f64)>> = (0..d)
        .map(|i| {
            rule.mapped(lo[i], hi[i])
                .map(|(x, w)| (x, w, symbol_1d(x)))
                .collect()
        })
        .collect();
    let mut acc = vec![0.0; n_out];
    let mut out = vec![0.0; n_out];
    let mut idx = vec![0usize; d];
    let mut k = vec![0.0; d];
    loop {
        let mut w = 1.0;
        let mut s = 0.0;
        for i in 0..d {
            let (x, wi, si) = axes[i][idx[i]];
            k[i] = x;
            w *= wi;
            s += si;
        }
        f(&k, s, &mut out);
        for (a, o) in acc.iter_mut().zip(&out) {
            *a += w * o;
        }
        let mut axis = 0;
        loop {
            idx[axis] += 1;
            if idx[axis] < q {
                break;
            }
            idx[axis] = 0;
            axis += 1;
            if axis == d {
                return acc;
            }
        }
    }
}

/// Exact average over the Fourier modes `k = 2πn/P` of the torus `(ℤ/Pℤ)^d`.
pub fn sum_torus<F>(d: usize, period: usize, n_out: usize, exec: Exec, f: F) -> Vec<f64>
where
    F: Fn(&[f64], f64, &mut [f64]) + Sync + Send,
{
    let p = period;
    let modes: Vec<(f64, f64)> = (0..p)
        .map(|n| {
            let k = 2.0 * std::f64::consts::PI * n as f64 / p as f64;
            (k, symbol_1d(k))
        })
        .collect();
    let inner = p.pow(d as u32 - 1);
    let partial: Vec<Vec<f64>> = exec.map(p, |first| {
        let mut acc = vec![0.0; n_out];
        let mut out = vec![0.0; n_out];
        let mut k = vec![0.0; d];
        for rest in 0..inner {
            let mut r = rest;
            k[0] = modes[first].0;
            let mut s = modes[first].1;
            for ki in k.iter_mut().skip(1) {
                let (kk, ss) = modes[r % p];
                *ki = kk;
                s += ss;
                r /= p;
            }
            f(&k, s, &mut out);
            for (a, o) in acc.iter_mut().zip(&out) {
                *a += o;
            }
        }
        acc
    });
    let mut total = vec![0.0; n_out];
    for part in &partial {
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
    }
    let vol = (p as f64).powi(d as i32);
    total.iter_mut().for_each(|t| *t /= vol);
    total
}
