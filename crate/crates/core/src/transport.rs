//! Wasserstein-1 distances between discrete measures.
//!
//! W1(μ,σ) = sup over 1-Lipschitz φ of |∫φdμ − ∫φdσ|, computed as the
//! optimal transport cost for the geodesic ground metric. Exact values come
//! from a network simplex on the bipartite transportation problem; an
//! entropic solver with annealing covers larger supports with a certified
//! bracket.

use crate::error::{Error, Result};
use crate::potential::{DiscreteMeasure, PointMeasure};
use crate::surface::{build_grid, distance, Layout, Point, SurfaceGrid, SurfaceModel};

/// Largest combined support handled by the exact solver.
pub const EXACT_SUPPORT_LIMIT: usize = 4096;

/// Masses below this are dropped before transport; their total, times the
/// diameter, enters the reported bound.
const PRUNE: f64 = 1e-15;

#[derive(Clone, Debug)]
pub struct TransportProblem {
    pub model: SurfaceModel,
    pub source: PointMeasure,
    pub target: PointMeasure,
}

#[derive(Clone, Copy, Debug)]
pub struct ExactW1 {
    pub value: f64,
    /// Largest violation of dual feasibility or of complementary slackness.
    pub dual_residual: f64,
    pub pivots: usize,
}

/// Exact W1. Source and target masses must agree to 1e−8 (they are rescaled
/// to agree exactly); they need not be probability measures.
pub fn w1_exact(problem: &TransportProblem) -> Result<ExactW1> {
    let (a, b) = (&problem.source, &problem.target);
    let total = a.points.len() + b.points.len();
    if total > EXACT_SUPPORT_LIMIT {
        return Err(Error::SupportTooLarge(total, EXACT_SUPPORT_LIMIT));
    }
    let (sa, sb) = (a.total(), b.total());
    if (sa - sb).abs() > 1e-8 * sa.max(sb).max(1e-300) && (sa - sb).abs() > 1e-14 {
        return Err(Error::InvalidArgument(format!("unbalanced transport: {sa} vs {sb}")));
    }
    if a.points.is_empty() || b.points.is_empty() || sa <= 0.0 {
        return Ok(ExactW1 { value: 0.0, dual_residual: 0.0, pivots: 0 });
    }
    let scale = sa / sb;
    let demand: Vec<f64> = b.weights.iter().map(|w| w * scale).collect();
    let m = a.points.len();
    let n = b.points.len();
    let mut cost = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            cost[i * n + j] = distance(problem.model, &a.points[i], &b.points[j]);
        }
    }
    Ok(NetworkSimplex::new(&a.weights, &demand, cost).solve())
}

/// Network simplex for the balanced transportation problem.
struct NetworkSimplex {
    m: usize,
    n: usize,
    cost: Vec<f64>,
    /// Basic arcs (source, sink, flow); always m+n−1 of them.
    arcs: Vec<(usize, usize, f64)>,
    adj: Vec<Vec<usize>>,
    pot: Vec<f64>,
    parent_arc: Vec<usize>,
    parent: Vec<usize>,
    depth: Vec<usize>,
    is_basic: Vec<bool>,
}

impl NetworkSimplex {
    fn new(supply: &[f64], demand: &[f64], cost: Vec<f64>) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut arcs = Vec::with_capacity(m + n - 1);
        let (mut ra, mut rb) = (supply.to_vec(), demand.to_vec());
        let (mut i, mut j) = (0, 0);
        // North-west corner start: a staircase spanning tree.
        loop {
            let f = ra[i].min(rb[j]).max(0.0);
            arcs.push((i, j, f));
            ra[i] -= f;
            rb[j] -= f;
            if i + 1 == m && j + 1 == n {
                break;
            }
            if (ra[i] <= rb[j] && i + 1 < m) || j + 1 == n {
                i += 1;
            } else {
                j += 1;
            }
        }
        let mut adj = vec![Vec::new(); m + n];
        let mut is_basic = vec![false; m * n];
        for (k, &(i, j, _)) in arcs.iter().enumerate() {
            adj[i].push(k);
            adj[m + j].push(k);
            is_basic[i * n + j] = true;
        }
        NetworkSimplex {
            m,
            n,
            cost,
            arcs,
            adj,
            pot: vec![0.0; m + n],
            parent_arc: vec![usize::MAX; m + n],
            parent: vec![usize::MAX; m + n],
            depth: vec![0; m + n],
            is_basic,
        }
    }

    /// Potentials with u_i + v_j = c_ij on basic arcs, rooted at source 0.
    fn refresh_tree(&mut self) {
        let m = self.m;
        self.parent[0] = usize::MAX;
        self.parent_arc[0] = usize::MAX;
        self.depth[0] = 0;
        self.pot[0] = 0.0;
        let mut stack = vec![0usize];
        let mut seen = vec![false; self.m + self.n];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &k in &self.adj[x] {
                let (i, j, _) = self.arcs[k];
                let y = if x == i { m + j } else { i };
                if seen[y] {
                    continue;
                }
                seen[y] = true;
                let c = self.cost[i * self.n + j];
                self.pot[y] = c - self.pot[x];
                self.parent[y] = x;
                self.parent_arc[y] = k;
                self.depth[y] = self.depth[x] + 1;
                stack.push(y);
            }
        }
    }

    fn reduced(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j] - self.pot[i] - self.pot[self.m + j]
    }

    fn solve(mut self) -> ExactW1 {
        let (m, n) = (self.m, self.n);
        let total = m * n;
        let max_cost = self.cost.iter().cloned().fold(0.0, f64::max).max(1e-300);
        let eps = 1e-12 * max_cost;
        let block = ((total as f64).sqrt() as usize).max(64).min(total);
        let mut cursor = 0usize;
        let mut pivots = 0usize;
        let max_pivots = 200 * (m + n) + 10_000;
        self.refresh_tree();
        loop {
            // Block search pricing.
            let mut best = (0usize, 0.0f64);
            let mut scanned = 0;
            while scanned < total {
                let end = (scanned + block).min(total);
                for _ in scanned..end {
                    let e = cursor;
                    cursor = if cursor + 1 == total { 0 } else { cursor + 1 };
                    if self.is_basic[e] {
                        continue;
                    }
                    let r = self.reduced(e / n, e % n);
                    if r < best.1 {
                        best = (e, r);
                    }
                }
                scanned = end;
                if best.1 < -eps {
                    break;
                }
            }
            if best.1 >= -eps || pivots >= max_pivots {
                break;
            }
            pivots += 1;
            let (ei, ej) = (best.0 / n, best.0 % n);

            // Tree path from sink ej back to source ei; arcs alternate −,+,−,…
            let mut x = m + ej;
            let mut y = ei;
            let mut from_x = Vec::new();
            let mut from_y = Vec::new();
            while self.depth[x] > self.depth[y] {
                from_x.push(self.parent_arc[x]);
                x = self.parent[x];
            }
            while self.depth[y] > self.depth[x] {
                from_y.push(self.parent_arc[y]);
                y = self.parent[y];
            }
            while x != y {
                from_x.push(self.parent_arc[x]);
                x = self.parent[x];
                from_y.push(self.parent_arc[y]);
                y = self.parent[y];
            }
            from_y.reverse();
            let path: Vec<usize> = from_x.into_iter().chain(from_y).collect();
            let mut theta = f64::INFINITY;
            let mut leave = usize::MAX;
            for (pos, &k) in path.iter().enumerate() {
                if pos % 2 == 0 && self.arcs[k].2 < theta {
                    theta = self.arcs[k].2;
                    leave = k;
                }
            }
            for (pos, &k) in path.iter().enumerate() {
                if pos % 2 == 0 {
                    self.arcs[k].2 -= theta;
                } else {
                    self.arcs[k].2 += theta;
                }
            }
            let (li, lj, _) = self.arcs[leave];
            self.is_basic[li * n + lj] = false;
            self.adj[li].retain(|&k| k != leave);
            self.adj[m + lj].retain(|&k| k != leave);
            self.arcs[leave] = (ei, ej, theta);
            self.is_basic[ei * n + ej] = true;
            self.adj[ei].push(leave);
            self.adj[m + ej].push(leave);
            self.refresh_tree();
        }
        let mut value = 0.0;
        let mut residual: f64 = 0.0;
        for &(i, j, f) in &self.arcs {
            value += f.max(0.0) * self.cost[i * n + j];
            residual = residual.max(self.reduced(i, j).abs());
        }
        for i in 0..m {
            for j in 0..n {
                residual = residual.max(-self.reduced(i, j));
            }
        }
        ExactW1 { value, dual_residual: residual, pivots }
    }
}

/// Geometric ε-annealing schedule for the entropic solver.
#[derive(Clone, Copy, Debug)]
pub struct EpsSchedule {
    pub start: f64,
    pub end: f64,
    pub factor: f64,
    pub iters_per_stage: usize,
    /// Marginal violation (L1) at which a stage stops early.
    pub tol: f64,
}

impl EpsSchedule {
    /// Default for a model: from a quarter of the diameter down to 1e−4 of it.
    pub fn default_for(model: SurfaceModel) -> Self {
        let d = model.diameter();
        EpsSchedule { start: 0.25 * d, end: 1e-4 * d, factor: 0.5, iters_per_stage: 2000, tol: 1e-10 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EntropicW1 {
    /// Cost of a feasible plan (an upper bound on W1).
    pub value: f64,
    /// Dual lower bound on W1.
    pub lower: f64,
    /// value − lower.
    pub bound: f64,
    pub converged: bool,
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Log-domain Sinkhorn with ε-annealing. The returned bracket is rigorous:
/// `value` is the cost of the rounded (exactly feasible) plan and `lower` the
/// dual value of the c-transformed potentials.
pub fn w1_entropic(problem: &TransportProblem, schedule: &EpsSchedule) -> EntropicW1 {
    let (a, b) = (&problem.source, &problem.target);
    let (m, n) = (a.points.len(), b.points.len());
    let sa = a.total();
    if m == 0 || n == 0 || sa <= 0.0 {
        return EntropicW1 { value: 0.0, lower: 0.0, bound: 0.0, converged: true };
    }
    let pa: Vec<f64> = a.weights.iter().map(|w| w / sa).collect();
    let sb = b.total();
    let pb: Vec<f64> = b.weights.iter().map(|w| w / sb).collect();
    let la: Vec<f64> = pa.iter().map(|w| w.ln()).collect();
    let lb: Vec<f64> = pb.iter().map(|w| w.ln()).collect();
    let mut cost = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            cost[i * n + j] = distance(problem.model, &a.points[i], &b.points[j]);
        }
    }
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    let mut eps = schedule.start.max(schedule.end);
    let mut converged;
    loop {
        converged = false;
        for _ in 0..schedule.iters_per_stage {
            for i in 0..m {
                let row = &cost[i * n..(i + 1) * n];
                f[i] = -eps * log_sum_exp((0..n).map(|j| (g[j] - row[j]) / eps + lb[j]));
            }
            let mut err = 0.0;
            for j in 0..n {
                let lse = log_sum_exp((0..m).map(|i| (f[i] - cost[i * n + j]) / eps + la[i]));
                let new = -eps * lse;
                // Column marginal before the update, for the stopping test.
                err += (pb[j] * ((g[j] - new) / eps).exp() - pb[j]).abs();
                g[j] = new;
            }
            if err < schedule.tol {
                converged = true;
                break;
            }
        }
        if eps <= schedule.end {
            break;
        }
        eps = (eps * schedule.factor).max(schedule.end);
    }
    // Plan, then rounding onto the exact marginals.
    let mut plan = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            plan[i * n + j] = (la[i] + lb[j] + (f[i] + g[j] - cost[i * n + j]) / eps).exp();
        }
    }
    for i in 0..m {
        let r: f64 = plan[i * n..(i + 1) * n].iter().sum();
        if r > pa[i] {
            let s = pa[i] / r;
            plan[i * n..(i + 1) * n].iter_mut().for_each(|p| *p *= s);
        }
    }
    for j in 0..n {
        let c: f64 = (0..m).map(|i| plan[i * n + j]).sum();
        if c > pb[j] {
            let s = pb[j] / c;
            (0..m).for_each(|i| plan[i * n + j] *= s);
        }
    }
    let ra: Vec<f64> = (0..m).map(|i| pa[i] - plan[i * n..(i + 1) * n].iter().sum::<f64>()).collect();
    let rb: Vec<f64> = (0..n).map(|j| pb[j] - (0..m).map(|i| plan[i * n + j]).sum::<f64>()).collect();
    let deficit: f64 = ra.iter().map(|x| x.max(0.0)).sum();
    let mut upper = 0.0;
    for i in 0..m {
        for j in 0..n {
            let mut p = plan[i * n + j];
            if deficit > 0.0 {
                p += ra[i].max(0.0) * rb[j].max(0.0) / deficit;
            }
            upper += p * cost[i * n + j];
        }
    }
    let gt: Vec<f64> = (0..n).map(|j| (0..m).map(|i| cost[i * n + j] - f[i]).fold(f64::INFINITY, f64::min)).collect();
    let lower: f64 =
        pa.iter().zip(&f).map(|(a, f)| a * f).sum::<f64>() + pb.iter().zip(&gt).map(|(b, g)| b * g).sum::<f64>();
    let lower = lower.min(upper).max(0.0);
    EntropicW1 { value: sa * upper, lower: sa * lower, bound: sa * (upper - lower), converged }
}

/// W1 value with an additive error bound.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct W1Estimate {
    pub value: f64,
    pub bound: f64,
}

/// Signed measure on grid nodes → W1 between its positive and negative
/// parts (Kantorovich–Rubinstein). Coarsens until the exact solver applies;
/// every move of mass |σ_i| by distance d adds |σ_i|·d to the bound.
fn w1_signed(grid: &SurfaceGrid, signed: &[f64]) -> Result<W1Estimate> {
    let mut pts: Vec<(Point, f64)> = Vec::new();
    let mut bound = 0.0;
    for (i, &s) in signed.iter().enumerate() {
        if s.abs() > PRUNE {
            pts.push((grid.nodes[i], s));
        } else {
            bound += s.abs() * grid.model.diameter();
        }
    }
    let mut res = grid.resolution;
    loop {
        if pts.len() <= EXACT_SUPPORT_LIMIT {
            let (pos, neg): (Vec<_>, Vec<_>) = pts.iter().partition(|(_, s)| *s > 0.0);
            let sp: f64 = pos.iter().map(|(_, s)| s).sum();
            let sn: f64 = -neg.iter().map(|(_, s)| s).sum::<f64>();
            // Residual imbalance from pruning goes to the bound.
            let excess = (sp - sn).abs();
            bound += excess * grid.model.diameter();
            let (sp_w, sn_w) = if sp > sn { (sn / sp, 1.0) } else { (1.0, sp / sn.max(1e-300)) };
            let problem = TransportProblem {
                model: grid.model,
                source: PointMeasure {
                    points: pos.iter().map(|(p, _)| *p).collect(),
                    weights: pos.iter().map(|(_, s)| s * sp_w).collect(),
                },
                target: PointMeasure {
                    points: neg.iter().map(|(p, _)| *p).collect(),
                    weights: neg.iter().map(|(_, s)| -s * sn_w).collect(),
                },
            };
            let exact = w1_exact(&problem)?;
            return Ok(W1Estimate { value: exact.value, bound });
        }
        res = coarser(grid.model, res);
        let coarse = build_grid(grid.model, res)?;
        let mut acc = vec![0.0; coarse.len()];
        for (p, s) in &pts {
            let c = coarse.locate(p);
            bound += s.abs() * distance(grid.model, p, &coarse.nodes[c]);
            acc[c] += s;
        }
        pts = acc.iter().enumerate().filter(|(_, s)| s.abs() > PRUNE).map(|(c, s)| (coarse.nodes[c], *s)).collect();
    }
}

fn coarser(model: SurfaceModel, res: usize) -> usize {
    match model {
        SurfaceModel::Sphere => (res / 2).max(4) / 4 * 4,
        SurfaceModel::Torus => (res / 2).max(4),
    }
}

/// W1 between two measures on the same grid.
pub fn w1_grid(grid: &SurfaceGrid, a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<W1Estimate> {
    let signed: Vec<f64> = a.weights.iter().zip(&b.weights).map(|(x, y)| x - y).collect();
    w1_signed(grid, &signed)
}

/// W1 between a grid measure and a measure on free points. The points are
/// aggregated to the grid cells (bounded by the moved mass times distance)
/// unless the exact solver applies directly.
pub fn w1_grid_points(grid: &SurfaceGrid, a: &DiscreteMeasure, b: &PointMeasure) -> Result<W1Estimate> {
    let pa = a.to_points(grid);
    if pa.points.len() + b.points.len() <= EXACT_SUPPORT_LIMIT {
        let exact = w1_exact(&TransportProblem { model: grid.model, source: pa, target: b.clone() })?;
        return Ok(W1Estimate { value: exact.value, bound: 0.0 });
    }
    let mut bound = 0.0;
    let mut agg = vec![0.0; grid.len()];
    for (p, w) in b.points.iter().zip(&b.weights) {
        let c = grid.locate(p);
        bound += w * distance(grid.model, p, &grid.nodes[c]);
        agg[c] += w;
    }
    let est = w1_grid(grid, a, &DiscreteMeasure { weights: agg })?;
    Ok(W1Estimate { value: est.value, bound: est.bound + bound })
}

/// Largest distance from a node to the points of its cell, an upper bound
/// for the aggregation error of one unit of mass.
pub fn cell_radius(grid: &SurfaceGrid) -> f64 {
    match &grid.layout {
        Layout::Torus { .. } => grid.h / std::f64::consts::SQRT_2,
        Layout::Sphere(_) => (0..grid.len())
            .map(|i| {
                grid.cell_samples(i, 5).iter().map(|p| distance(grid.model, p, &grid.nodes[i])).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max),
    }
}
