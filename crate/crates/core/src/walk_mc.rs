//! Direct simulation of the continuous-time weakly self-avoiding walk.
//!
//! Randomness is keyed by `(seed, sample index)`: sample `i` draws from a ChaCha8 generator
//! seeded with `seed` on stream `i`. Samples are reduced in chunks of fixed size and the chunk
//! statistics merged pairwise in a fixed tree, so estimates do not depend on the worker count.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::lattice::{Geometry, LatticeSpec};
use crate::quad::Rule;

pub const MAX_WALK_DIM: usize = 4;

/// A lattice point, a torus point with reduced coordinates, or `[vertex, 0, 0, 0]` on a graph.
pub type Site = [i64; MAX_WALK_DIM];

const CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct WalkSample {
    pub horizon: f64,
    pub jump_times: Vec<f64>,
    /// `path[k]` is the position after `k` jumps.
    pub path: Vec<Site>,
    /// Residence times in order of first visit.
    pub local_times: Vec<(Site, f64)>,
    pub intersection: f64,
}

impl WalkSample {
    pub fn distinct_sites(&self) -> usize {
        self.local_times.len()
    }

    pub fn endpoint(&self) -> Site {
        *self.path.last().expect("path starts at the origin")
    }

    /// `Σ_x L_T^x`.
    pub fn total_time(&self) -> f64 {
        self.local_times.iter().map(|(_, l)| l).sum()
    }

    fn residence(&self, k: usize) -> f64 {
        let start = if k == 0 { 0.0 } else { self.jump_times[k - 1] };
        let end = self.jump_times.get(k).copied().unwrap_or(self.horizon);
        end - start
    }
}

fn intersection_of<I: Iterator<Item = (Site, f64)>>(intervals: I) -> (Vec<(Site, f64)>, f64) {
    let mut index: HashMap<Site, usize> = HashMap::new();
    let mut local: Vec<(Site, f64)> = Vec::new();
    for (site, dt) in intervals {
        match index.get(&site) {
            Some(&i) => local[i].1 += dt,
            None => {
                index.insert(site, local.len());
                local.push((site, dt));
            }
        }
    }
    let i = local.iter().map(|(_, l)| l * l).sum();
    (local, i)
}

enum Mover {
    Lattice { dim: usize, period: Option<i64> },
    Graph { rates: Vec<Vec<(usize, f64)>>, totals: Vec<f64> },
}

impl Mover {
    fn new(spec: &LatticeSpec) -> Result<Self> {
        match &spec.geometry {
            Geometry::Window { .. } | Geometry::Torus { .. } if spec.dim > MAX_WALK_DIM => {
                invalid(format!("walks are simulated for d <= {MAX_WALK_DIM}"))
            }
            Geometry::Window { .. } => Ok(Mover::Lattice {
                dim: spec.dim,
                period: None,
            }),
            Geometry::Torus { period } => Ok(Mover::Lattice {
                dim: spec.dim,
                period: Some(*period as i64),
            }),
            Geometry::Graph(lap) => {
                let n = lap.sites();
                let m = lap.matrix();
                let rates: Vec<Vec<(usize, f64)>> = (0..n)
                    .map(|x| (0..n).filter(|&y| y != x && m[(x, y)] > 0.0).map(|y| (y, m[(x, y)])).collect())
                    .collect();
                let totals = rates.iter().map(|r| r.iter().map(|(_, w)| w).sum()).collect();
                Ok(Mover::Graph { rates, totals })
            }
        }
    }

    fn rate(&self, site: &Site) -> f64 {
        match self {
            Mover::Lattice { dim, .. } => 2.0 * *dim as f64,
            Mover::Graph { totals, .. } => totals[site[0] as usize],
        }
    }

    fn step<R: Rng>(&self, site: &Site, rng: &mut R) -> Site {
        match self {
            Mover::Lattice { dim, period } => {
                let dir = rng.gen_range(0..2 * dim);
                let mut next = *site;
                let axis = dir / 2;
                next[axis] += if dir % 2 == 0 { 1 } else { -1 };
                if let Some(p) = period {
                    next[axis] = next[axis].rem_euclid(*p);
                }
                next
            }
            Mover::Graph { rates, totals } => {
                let x = site[0] as usize;
                let mut u = rng.gen::<f64>() * totals[x];
                let mut target = rates[x].last().map(|(y, _)| *y).unwrap_or(x);
                for &(y, w) in &rates[x] {
                    if u < w {
                        target = y;
                        break;
                    }
                    u -= w;
                }
                [target as i64, 0, 0, 0]
            }
        }
    }
}

fn origin(spec: &LatticeSpec, start: usize) -> Result<Site> {
    match &spec.geometry {
        Geometry::Graph(lap) => {
            if start >= lap.sites() {
                return invalid(format!("start vertex {start} outside the graph"));
            }
            Ok([start as i64, 0, 0, 0])
        }
        _ => Ok([0; MAX_WALK_DIM]),
    }
}

fn simulate_with<R: Rng>(mover: &Mover, start: Site, horizon: f64, rng: &mut R) -> WalkSample {
    let mut jump_times = Vec::new();
    let mut path = vec![start];
    let mut t = 0.0;
    loop {
        let here = *path.last().unwrap();
        let rate = mover.rate(&here);
        if rate <= 0.0 {
            break;
        }
        t += Exp::new(rate).expect("positive rate").sample(rng);
        if t >= horizon {
            break;
        }
        jump_times.push(t);
        path.push(mover.step(&here, rng));
    }
    let mut sample = WalkSample {
        horizon,
        jump_times,
        path,
        local_times: Vec::new(),
        intersection: 0.0,
    };
    let (local, i) = intersection_of((0..sample.path.len()).map(|k| (sample.path[k], sample.residence(k))));
    sample.local_times = local;
    sample.intersection = i;
    sample
}

/// One walk from the origin (or vertex 0 of a graph) up to time `horizon`.
pub fn simulate<R: Rng>(spec: &LatticeSpec, horizon: f64, rng: &mut R) -> Result<WalkSample> {
    simulate_from(spec, 0, horizon, rng)
}

pub fn simulate_from<R: Rng>(spec: &LatticeSpec, start: usize, horizon: f64, rng: &mut R) -> Result<WalkSample> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return invalid("time horizon must be positive and finite");
    }
    let mover = Mover::new(spec)?;
    Ok(simulate_with(&mover, origin(spec, start)?, horizon, rng))
}

/// The generator for sample `index`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl Estimate {
    /// `|a − b| ≤ k √(SE_a² + SE_b²)`.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        (self.mean - other.mean).abs() <= k * self.std_error.hypot(other.std_error)
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Welford, b: Welford) -> Welford {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        let (na, nb) = (a.n as f64, b.n as f64);
        Welford {
            n,
            mean: a.mean + d * nb / n as f64,
            m2: a.m2 + b.m2 + d * d * na * nb / n as f64,
        }
    }

    fn estimate(self, seed: u64) -> Estimate {
        let se = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean: self.mean,
            std_error: se,
            n_samples: self.n,
            seed,
        }
    }
}

fn tree_merge(mut level: Vec<Vec<Welford>>) -> Vec<Welford> {
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => a.iter().zip(b).map(|(x, y)| Welford::merge(*x, *y)).collect(),
                [a] => a.clone(),
                _ => unreachable!(),
            })
            .collect();
    }
    level.pop().unwrap_or_default()
}

/// Runs `n` samples, each writing `k` statistics, and estimates their means.
pub fn estimate_many<F>(n: u64, seed: u64, k: usize, exec: Exec, f: F) -> Vec<Estimate>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK as u64) as usize;
    let partial = exec.map(chunks, |c| {
        let mut acc = vec![Welford::default(); k];
        let mut buf = vec![0.0; k];
        let lo = c as u64 * CHUNK as u64;
        let hi = (lo + CHUNK as u64).min(n);
        for i in lo..hi {
            let mut rng = sample_rng(seed, i);
            f(&mut rng, &mut buf);
            for (a, &v) in acc.iter_mut().zip(&buf) {
                a.push(v);
            }
        }
        acc
    });
    let merged = tree_merge(partial);
    if merged.is_empty() {
        return vec![Welford::default().estimate(seed); k];
    }
    merged.into_iter().map(|w| w.estimate(seed)).collect()
}

fn check_samples(n: u64) -> Result<()> {
    if n == 0 {
        return invalid("at least one sample required");
    }
    Ok(())
}

/// `c_T = E(e^{−g I(T)})`.
pub fn estimate_ct(spec: &LatticeSpec, g: f64, horizon: f64, n: u64, seed: u64, exec: Exec) -> Result<Estimate> {
    if !(g >= 0.0) {
        return invalid("coupling must be nonnegative");
    }
    check_samples(n)?;
    simulate(spec, horizon, &mut sample_rng(seed, 0))?;
    let mover = Mover::new(spec)?;
    let start = origin(spec, 0)?;
    Ok(estimate_many(n, seed, 1, exec, |rng, out| {
        let s = simulate_with(&mover, start, horizon, rng);
        out[0] = (-g * s.intersection).exp();
    })[0])
}

/// Monte Carlo means of `I(T)`, `e^{−gI(T)}` and the number of jumps from the same paths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathStatistics {
    pub intersection: Estimate,
    pub ct: Estimate,
    pub jumps: Estimate,
}

pub fn path_statistics(spec: &LatticeSpec, g: f64, horizon: f64, n: u64, seed: u64, exec: Exec) -> Result<PathStatistics> {
    if !(g >= 0.0) {
        return invalid("coupling must be nonnegative");
    }
    check_samples(n)?;
    simulate(spec, horizon, &mut sample_rng(seed, 0))?;
    let mover = Mover::new(spec)?;
    let start = origin(spec, 0)?;
    let e = estimate_many(n, seed, 3, exec, |rng, out| {
        let s = simulate_with(&mover, start, horizon, rng);
        out[0] = s.intersection;
        out[1] = (-g * s.intersection).exp();
        out[2] = s.jump_times.len() as f64;
    });
    Ok(PathStatistics {
        intersection: e[0],
        ct: e[1],
        jumps: e[2],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub periods: Vec<u64>,
    /// `I_T` of the walk folded onto each torus, in the order of `periods`.
    pub folded: Vec<f64>,
    pub unfolded: f64,
    /// `I_T(X^{Ln}) ≤ I_T(X^n)` along the list and `I_T(X^n) ≥ I_T(X)` for every period.
    pub monotone: bool,
}

/// `I_T` of the trajectory projected onto `(ℤ/Pℤ)^d`.
pub fn folded_intersection(sample: &WalkSample, dim: usize, period: u64) -> f64 {
    let p = period as i64;
    let fold = |s: &Site| {
        let mut f = *s;
        for c in f.iter_mut().take(dim) {
            *c = c.rem_euclid(p);
        }
        f
    };
    intersection_of((0..sample.path.len()).map(|k| (fold(&sample.path[k]), sample.residence(k)))).1
}

/// Compares a ℤᵈ trajectory folded onto tori with periods `L^N, L^{N+1}, …`.
pub fn fold_and_compare(sample: &WalkSample, dim: usize, periods: &[u64]) -> Result<FoldReport> {
    if periods.is_empty() {
        return invalid("at least one period required");
    }
    if periods.iter().any(|&p| p < 3) {
        return invalid("folding comparisons need periods of at least 3");
    }
    if periods.windows(2).any(|w| w[1] <= w[0] || w[1] % w[0] != 0) {
        return invalid("periods must increase, each a multiple of the previous one");
    }
    if !(1..=MAX_WALK_DIM).contains(&dim) {
        return invalid("dimension out of range");
    }
    let folded: Vec<f64> = periods.iter().map(|&p| folded_intersection(sample, dim, p)).collect();
    let nested = folded.windows(2).all(|w| w[1] <= w[0]);
    let above = folded.iter().all(|&f| f >= sample.intersection);
    Ok(FoldReport {
        periods: periods.to_vec(),
        folded,
        unfolded: sample.intersection,
        monotone: nested && above,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEstimate {
    /// `∫₀^{T_max} c_T e^{−νT} dT` (with an endpoint indicator for two-point functions).
    pub truncated: Estimate,
    /// Bound `e^{−ν T_max}/ν` on the neglected tail.
    pub tail_bound: f64,
    pub t_max: f64,
}

impl LaplaceEstimate {
    /// Whether `value` lies within `k` standard errors of the truncated estimate once the tail
    /// is allowed for. A relative `1e-12` covers rounding when the variance vanishes.
    pub fn brackets(&self, value: f64, k: f64) -> bool {
        let slack = k * self.truncated.std_error + 1e-12 * value.abs();
        value >= self.truncated.mean - slack && value <= self.truncated.mean + self.tail_bound + slack
    }
}

/// `∫₀^{T_max} e^{−gI(t) − νt} dt` along one path. `I(t)` is quadratic on each residence
/// interval, so a Gauss–Legendre rule per interval is accurate to rounding for short intervals.
fn laplace_along(sample: &WalkSample, g: f64, nu: f64, rule: &Rule, endpoint: Option<Site>) -> f64 {
    let mut acc_local: HashMap<Site, f64> = HashMap::new();
    let mut i_before = 0.0;
    let mut total = 0.0;
    for k in 0..sample.path.len() {
        let site = sample.path[k];
        let start = if k == 0 { 0.0 } else { sample.jump_times[k - 1] };
        let dt = sample.residence(k);
        let l0 = *acc_local.get(&site).unwrap_or(&0.0);
        if endpoint.map_or(true, |e| e == site) && dt > 0.0 {
            let f = |u: f64| (-g * (i_before + 2.0 * l0 * u + u * u) - nu * (start + u)).exp();
            // split long intervals so the rule stays accurate
            let pieces = (dt * (nu.abs() + g * (l0 + dt) + 1.0)).ceil().max(1.0) as usize;
            let h = dt / pieces as f64;
            for p in 0..pieces {
                total += rule.integrate(p as f64 * h, (p + 1) as f64 * h, f);
            }
        }
        i_before += 2.0 * l0 * dt + dt * dt;
        acc_local.insert(site, l0 + dt);
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn laplace_mc(
    spec: &LatticeSpec,
    g: f64,
    nu: f64,
    t_max: f64,
    n: u64,
    seed: u64,
    exec: Exec,
    start: usize,
    endpoint: Option<Site>,
) -> Result<LaplaceEstimate> {
    if !(g >= 0.0) {
        return invalid("coupling must be nonnegative");
    }
    if !(nu > 0.0) {
        return invalid("Monte Carlo Laplace transforms need nu > 0");
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return invalid("T_max must be positive and finite");
    }
    check_samples(n)?;
    let mover = Mover::new(spec)?;
    let origin = origin(spec, start)?;
    let rule = Rule::legendre(8);
    let e = estimate_many(n, seed, 1, exec, |rng, out| {
        let s = simulate_with(&mover, origin, t_max, rng);
        out[0] = laplace_along(&s, g, nu, &rule, endpoint);
    })[0];
    Ok(LaplaceEstimate {
        truncated: e,
        tail_bound: (-nu * t_max).exp() / nu,
        t_max,
    })
}

/// `χ = ∫₀^∞ c_T e^{−νT} dT`, truncated at `T_max`.
pub fn susceptibility_mc(
    spec: &LatticeSpec,
    g: f64,
    nu: f64,
    t_max: f64,
    n: u64,
    seed: u64,
    exec: Exec,
) -> Result<LaplaceEstimate> {
    laplace_mc(spec, g, nu, t_max, n, seed, exec, 0, None)
}

/// `G_{g,ν}(a, b) = ∫₀^∞ E_a(e^{−gI(T)} 1{X(T) = b}) e^{−νT} dT` on a graph, truncated at `T_max`.
#[allow(clippy::too_many_arguments)]
pub fn two_point_mc(
    spec: &LatticeSpec,
    g: f64,
    nu: f64,
    a: usize,
    b: usize,
    t_max: f64,
    n: u64,
    seed: u64,
    exec: Exec,
) -> Result<LaplaceEstimate> {
    match &spec.geometry {
        Geometry::Graph(lap) if b < lap.sites() => {}
        Geometry::Graph(_) => return invalid("target vertex outside the graph"),
        _ => return invalid("two-point walk estimates are defined on graphs"),
    }
    laplace_mc(spec, g, nu, t_max, n, seed, exec, a, Some([b as i64, 0, 0, 0]))
}

/// `E(I(T) | n jumps)`: the jump times are uniform order statistics, and for a path visiting
/// `n + 1` distinct sites `I(T)` is the sum of squared gaps.
pub fn conditioned_intersection(horizon: f64, jumps: usize, n: u64, seed: u64, exec: Exec) -> Result<Estimate> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return invalid("time horizon must be positive and finite");
    }
    check_samples(n)?;
    Ok(estimate_many(n, seed, 1, exec, |rng, out| {
        let mut times: Vec<f64> = (0..jumps).map(|_| rng.gen::<f64>() * horizon).collect();
        times.sort_by(f64::total_cmp);
        let mut prev = 0.0;
        let mut acc = 0.0;
        for t in times.iter().chain(std::iter::once(&horizon)) {
            acc += (t - prev) * (t - prev);
            prev = *t;
        }
        out[0] = acc;
    })[0])
}

/// `2T²/(n + 2)`.
pub fn conditioned_intersection_exact(horizon: f64, jumps: usize) -> f64 {
    2.0 * horizon * horizon / (jumps as f64 + 2.0)
}

/// Largest `n` enumerated per dimension.
pub fn saw_budget(d: usize) -> Option<usize> {
    match d {
        1 => Some(60),
        2 => Some(18),
        3 => Some(13),
        4 => Some(11),
        _ => None,
    }
}

/// `s_0, …, s_{n_max}`: numbers of `n`-step strictly self-avoiding walks from the origin.
pub fn saw_counts(d: usize, n_max: usize) -> Result<Vec<u64>> {
    let budget = saw_budget(d).ok_or_else(|| Error::InvalidArgument(format!("dimension {d} outside 1..=4")))?;
    if n_max > budget {
        return Err(Error::Budget(format!("n = {n_max} exceeds {budget} in d = {d}")));
    }
    let mut counts = vec![0u64; n_max + 1];
    counts[0] = 1;
    if n_max == 0 {
        return Ok(counts);
    }
    if d == 1 {
        for c in counts.iter_mut().skip(1) {
            *c = 2;
        }
        return Ok(counts);
    }
    let side = 2 * n_max + 1;
    let strides: Vec<usize> = (0..d).map(|i| side.pow(i as u32)).collect();
    let mut visited = vec![false; side.pow(d as u32)];
    let centre: usize = strides.iter().map(|s| s * n_max).sum();
    visited[centre] = true;
    // by symmetry the first step may be fixed to +e_1
    let first = centre + strides[0];
    visited[first] = true;
    let mut partial = vec![0u64; n_max + 1];
    extend(first, 1, n_max, &strides, &mut visited, &mut partial);
    for k in 1..=n_max {
        counts[k] = partial[k] * 2 * d as u64;
    }
    Ok(counts)
}

fn extend(pos: usize, len: usize, n_max: usize, strides: &[usize], visited: &mut [bool], counts: &mut [u64]) {
    counts[len] += 1;
    if len == n_max {
        return;
    }
    for &s in strides {
        for next in [pos + s, pos - s] {
            if !visited[next] {
                visited[next] = true;
                extend(next, len + 1, n_max, strides, visited, counts);
                visited[next] = false;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JensenReport {
    pub mean_intersection: Estimate,
    /// `2T C₀(0)`.
    pub bound: f64,
    pub ct: Estimate,
    /// `e^{−g Ê I(T)}`.
    pub jensen_lower: f64,
    /// `Ê I(T) ≤ 2T C₀(0) + 3 SE`.
    pub bound_holds: bool,
    /// `ĉ_T ≥ e^{−g Ê I(T)} − 3 SE`.
    pub jensen_holds: bool,
}

/// Checks `E I(T) ≤ 2T C₀(0)` and Jensen's inequality `c_T ≥ e^{−g E I(T)}` on ℤ⁴.
/// `a` is `2 C₀(0)`.
pub fn jensen_bound_check(g: f64, horizon: f64, n: u64, seed: u64, a: f64, exec: Exec) -> Result<JensenReport> {
    let spec = LatticeSpec::infinite(4)?;
    let st = path_statistics(&spec, g, horizon, n, seed, exec)?;
    let bound = horizon * a;
    let jensen_lower = (-g * st.intersection.mean).exp();
    // delta method for the error of e^{−g Ê I}
    let lower_se = g * jensen_lower * st.intersection.std_error;
    Ok(JensenReport {
        mean_intersection: st.intersection,
        bound,
        ct: st.ct,
        jensen_lower,
        bound_holds: st.intersection.mean <= bound + 3.0 * st.intersection.std_error,
        jensen_holds: st.ct.mean >= jensen_lower - 3.0 * st.ct.std_error.hypot(lower_se),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::GraphLaplacian;

    #[test]
    fn welford_merge_matches_direct() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut all = Welford::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Welford::default();
        let mut b = Welford::default();
        xs[..333].iter().for_each(|&x| a.push(x));
        xs[333..].iter().for_each(|&x| b.push(x));
        let m = Welford::merge(a, b);
        assert!((m.mean - all.mean).abs() < 1e-12);
        assert!((m.m2 - all.m2).abs() < 1e-9 * all.m2);
    }

    #[test]
    fn one_site_walks_never_move() {
        let mut rng = sample_rng(1, 0);
        let s = simulate(&LatticeSpec::torus(3, 1).unwrap(), 2.5, &mut rng).unwrap();
        assert_eq!(s.distinct_sites(), 1);
        assert_eq!(s.intersection, 6.25);
        let g = LatticeSpec::graph(GraphLaplacian::one_site());
        let s = simulate(&g, 2.5, &mut rng).unwrap();
        assert!(s.jump_times.is_empty());
        assert_eq!(s.intersection, 6.25);
    }

    #[test]
    fn guards() {
        let spec = LatticeSpec::infinite(4).unwrap();
        assert!(simulate(&spec, 0.0, &mut sample_rng(0, 0)).is_err());
        assert!(simulate(&LatticeSpec::infinite(5).unwrap(), 1.0, &mut sample_rng(0, 0)).is_err());
        assert!(susceptibility_mc(&spec, 0.0, 0.0, 5.0, 10, 0, Exec::Sequential).is_err());
        assert!(saw_counts(4, 12).is_err());
        assert!(saw_counts(5, 2).is_err());
        let s = simulate(&spec, 1.0, &mut sample_rng(0, 0)).unwrap();
        assert!(fold_and_compare(&s, 4, &[2, 4]).is_err());
        assert!(fold_and_compare(&s, 4, &[3, 4]).is_err());
    }

    #[test]
    fn small_saw_counts() {
        assert_eq!(saw_counts(2, 4).unwrap(), vec![1, 4, 12, 36, 100]);
        assert_eq!(saw_counts(1, 3).unwrap(), vec![1, 2, 2, 2]);
    }
}
