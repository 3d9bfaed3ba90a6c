//! Minimizers of the energy over probability measures on X∖D.
//!
//! Two independent algorithms: Frank–Wolfe on the simplex of the allowed
//! nodes, and the envelope fixed-point iteration μ ↦ ν̂(μ).

use serde::Serialize;

use crate::envelope::{decompose, solve_envelope, Decomposition, EnvelopeResult, ObstacleProblem, SolveOptions};
use crate::error::{Error, Result};
use crate::green::{kernel_matrix, GreenKernel, KernelMatrix, MIN_TORUS_TERMS};
use crate::laplacian::Laplacian;
use crate::potential::{energy, energy_from_potential, DiscreteMeasure, EnergyValue};
use crate::surface::{build_grid, components, domain_mask, DomainMasks, DomainSpec, SurfaceGrid, SurfaceModel};
use crate::transport::w1_grid;

/// Default forbidden-mass tolerance.
pub const F_TOL: f64 = 1e-2;

/// Grid, hole and operators shared by the solvers.
pub struct Problem {
    pub grid: SurfaceGrid,
    pub domain: DomainSpec,
    pub masks: DomainMasks,
    pub kernel: GreenKernel,
    pub matrix: KernelMatrix,
    pub laplacian: Laplacian,
}

impl Problem {
    pub fn new(model: SurfaceModel, resolution: usize, domain: DomainSpec, torus_terms: usize) -> Result<Self> {
        let grid = build_grid(model, resolution)?;
        let masks = domain_mask(&grid, &domain)?;
        let kernel = GreenKernel::for_model(model, torus_terms.max(MIN_TORUS_TERMS))?;
        let matrix = kernel_matrix(&grid, &kernel)?;
        let laplacian = Laplacian::for_grid(&grid);
        Ok(Problem { grid, domain, masks, kernel, matrix, laplacian })
    }

    /// ω restricted to X∖D̄, normalized; ω itself for an empty hole.
    pub fn default_init(&self) -> Result<DiscreteMeasure> {
        let outside: Vec<bool> = self.masks.closure().iter().map(|c| !c).collect();
        DiscreteMeasure::omega_on(&self.grid, &outside)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    FrankWolfe,
    FixedPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    Stalled,
    /// Frank–Wolfe ran its full iteration budget (its normal end).
    Completed,
}

#[derive(Clone, Debug)]
pub struct EquilibriumReport {
    pub solver: SolverKind,
    pub measure: DiscreteMeasure,
    pub energy: EnergyValue,
    pub decomposition: Decomposition,
    /// Type-M potential (Frank–Wolfe) or envelope (fixed point) at the output.
    pub field: Vec<f64>,
    pub iterations: usize,
    pub energy_trace: Vec<f64>,
    /// Frank–Wolfe duality gaps or fixed-point W1 gaps, per iteration.
    pub gap_trace: Vec<f64>,
    pub fixed_point_gap: Option<f64>,
    pub status: Status,
    pub flags: Vec<String>,
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Frank–Wolfe with step 2/(k+2). The subgradient of the max term is the
/// atom at the lowest-index argmax of Gw.
pub fn minimize_frank_wolfe(
    problem: &Problem,
    iters: usize,
    init: Option<&DiscreteMeasure>,
) -> Result<EquilibriumReport> {
    if iters < 100 {
        return Err(Error::InvalidArgument(format!("Frank–Wolfe needs at least 100 iterations, got {iters}")));
    }
    let allowed = problem.masks.allowed();
    let allowed_idx: Vec<usize> = (0..allowed.len()).filter(|&i| allowed[i]).collect();
    if allowed_idx.is_empty() {
        return Err(Error::InvalidDomain("no allowed nodes".into()));
    }
    let g = &problem.matrix;
    let n = g.len();
    let mut w = match init {
        Some(mu) => {
            if allowed.iter().zip(&mu.weights).any(|(a, w)| !a && *w > 0.0) {
                return Err(Error::InvalidArgument("initial measure charges the hole".into()));
            }
            mu.clone()
        }
        None => DiscreteMeasure::omega_on(&problem.grid, &allowed)?,
    };
    let mut gw = g.matvec(&w.weights);
    let mut q: f64 = w.weights.iter().zip(&gw).map(|(a, b)| a * b).sum();
    let gdiag = g.diagonal_value();
    let mut col_star = vec![0.0; n];
    let mut col_v = vec![0.0; n];
    let mut energy_trace = Vec::with_capacity(iters);
    let mut gap_trace = Vec::with_capacity(iters);
    for k in 0..iters {
        let jstar = argmax(&gw);
        g.column_into(jstar, &mut col_star);
        let mut v = allowed_idx[0];
        let mut best = f64::INFINITY;
        for &j in &allowed_idx {
            let s = col_star[j] - gw[j];
            if s < best {
                best = s;
                v = j;
            }
        }
        // ⟨grad, w − e_v⟩ with grad = −2Gw + 2G[:, j*].
        let along: f64 = w.weights.iter().enumerate().map(|(i, wi)| wi * (col_star[i] - gw[i])).sum();
        gap_trace.push(2.0 * (along - best));
        let gamma = 2.0 / (k as f64 + 2.0);
        g.column_into(v, &mut col_v);
        q = (1.0 - gamma).powi(2) * q + 2.0 * gamma * (1.0 - gamma) * gw[v] + gamma * gamma * gdiag;
        for i in 0..n {
            gw[i] = (1.0 - gamma) * gw[i] + gamma * col_v[i];
            w.weights[i] *= 1.0 - gamma;
        }
        w.weights[v] += gamma;
        let max = gw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        energy_trace.push(-q + 2.0 * max);
    }
    // Fresh product, dropping accumulated rounding.
    let total = w.total();
    w.weights.iter_mut().for_each(|x| *x /= total);
    let u = g.matvec(&w.weights);
    let e = energy_from_potential(&w, &u, &problem.grid.cell_mass);
    let max = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let field: Vec<f64> = u.iter().map(|x| x - max).collect();
    let decomposition = decompose(&problem.grid, &problem.masks, &field, &w, None, F_TOL)?;
    let mut flags = Vec::new();
    if e.atomic_warning {
        flags.push("atomic".into());
    }
    Ok(EquilibriumReport {
        solver: SolverKind::FrankWolfe,
        measure: w,
        energy: e,
        decomposition,
        field,
        iterations: iters,
        energy_trace,
        gap_trace,
        fixed_point_gap: None,
        status: Status::Completed,
        flags,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FixedPointOptions {
    pub max_outer: usize,
    /// Stop when W1 between consecutive iterates drops below this.
    pub gap_tol: f64,
    pub envelope: SolveOptions,
}

impl FixedPointOptions {
    pub fn for_grid(grid: &SurfaceGrid) -> Self {
        FixedPointOptions { max_outer: 30, gap_tol: 0.5 * grid.h, envelope: SolveOptions::default() }
    }
}

/// Envelope values at or above −ACTIVE_TOL count as touching the cap: PSOR
/// sets active nodes to exactly 0.
pub const ACTIVE_TOL: f64 = 1e-12;

/// Solution of Lu = μ − m, the grid-consistent potential of μ (defined up to
/// a constant). Using it as the obstacle keeps the discrete fixed point
/// exact: the envelope reproduces μ without spreading its atoms.
pub fn discrete_potential(problem: &Problem, mu: &DiscreteMeasure, guess: Option<&[f64]>) -> Vec<f64> {
    let f: Vec<f64> = mu.weights.iter().zip(&problem.grid.cell_mass).map(|(a, b)| a - b).collect();
    problem.laplacian.solve(&f, guess, 1e-13)
}

/// Obstacle U′_μ shifted by its maximum over each component of D̄.
fn obstacle(u: &[f64], labels: &[usize], count: usize) -> Vec<f64> {
    let mut max = vec![f64::NEG_INFINITY; count];
    for (i, &l) in labels.iter().enumerate() {
        if l != usize::MAX {
            max[l] = max[l].max(u[i]);
        }
    }
    u.iter().zip(labels).map(|(v, &l)| if l == usize::MAX { 0.0 } else { v - max[l] }).collect()
}

fn step(
    problem: &Problem,
    mu: &DiscreteMeasure,
    labels: &[usize],
    count: usize,
    u_guess: Option<&[f64]>,
    warm: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<(Vec<f64>, EnvelopeResult)> {
    let u = discrete_potential(problem, mu, u_guess);
    let obs = obstacle(&u, labels, count);
    let obstacle_problem = ObstacleProblem::new(&problem.grid, &problem.laplacian, &problem.masks, &obs)?;
    let env = solve_envelope(&obstacle_problem, opts, warm)?;
    Ok((u, env))
}

/// One application of μ ↦ ν̂(μ).
pub fn envelope_map(problem: &Problem, mu: &DiscreteMeasure, opts: &SolveOptions) -> Result<EnvelopeResult> {
    let (labels, count) = components(&problem.grid, &problem.masks.closure());
    Ok(step(problem, mu, &labels, count, None, None, opts)?.1)
}

/// W1(ν̂(ν), ν) plus its error bound: how far ν is from being a fixed point.
pub fn fixed_point_residual(problem: &Problem, nu: &DiscreteMeasure) -> Result<f64> {
    let env = envelope_map(problem, nu, &SolveOptions::default())?;
    let w = w1_grid(&problem.grid, &env.measure, nu)?;
    Ok(w.value + w.bound)
}

/// Iterates μ ↦ ν̂(μ) with the obstacle U_μ on D̄; averages with the
/// previous iterate whenever the gap grows.
pub fn fixed_point_envelope(
    problem: &Problem,
    init: Option<&DiscreteMeasure>,
    opts: &FixedPointOptions,
) -> Result<EquilibriumReport> {
    let closure = problem.masks.closure();
    let (labels, count) = components(&problem.grid, &closure);
    let mut mu = match init {
        Some(m) => m.clone(),
        None => problem.default_init()?,
    };
    let mut warm: Option<Vec<f64>> = None;
    let mut gap_trace = Vec::new();
    let mut energy_trace = Vec::new();
    let mut flags = Vec::new();
    let mut status = Status::Stalled;
    let mut last = None;
    let mut u_prev: Option<Vec<f64>> = None;
    for k in 0..opts.max_outer.max(1) {
        energy_trace.push(energy(&mu, &problem.matrix, &problem.grid).value);
        let (u, env) = step(problem, &mu, &labels, count, u_prev.as_deref(), warm.as_deref(), &opts.envelope)?;
        u_prev = Some(u);
        if !env.converged {
            flags.push(format!("envelope residual {:.2e} at outer step {k}", env.residual));
        }
        let gap = w1_grid(&problem.grid, &env.measure, &mu)?;
        let gap = gap.value + gap.bound;
        let oscillating = gap_trace.last().is_some_and(|g: &f64| gap > *g);
        gap_trace.push(gap);
        warm = Some(env.field.values.clone());
        let done = gap < opts.gap_tol;
        mu = if oscillating && !done { mu.mix(&env.measure, 0.5) } else { env.measure.clone() };
        last = Some(env);
        if done {
            status = Status::Converged;
            break;
        }
    }
    let env = last.expect("at least one outer step");
    let nu = env.measure;
    let e = energy(&nu, &problem.matrix, &problem.grid);
    let decomposition = decompose(&problem.grid, &problem.masks, &env.field.values, &nu, Some(ACTIVE_TOL), F_TOL)?;
    if e.atomic_warning {
        flags.push("atomic".into());
    }
    Ok(EquilibriumReport {
        solver: SolverKind::FixedPoint,
        measure: nu,
        energy: e,
        decomposition,
        field: env.field.values,
        iterations: gap_trace.len(),
        energy_trace,
        fixed_point_gap: gap_trace.last().copied(),
        gap_trace,
        status,
        flags,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Comparison {
    pub w1: f64,
    pub w1_bound: f64,
    pub energy_diff: f64,
    pub bd_diff: f64,
    pub s_diff: f64,
    pub forbidden_diff: f64,
}

pub fn cross_validate(grid: &SurfaceGrid, a: &EquilibriumReport, b: &EquilibriumReport) -> Result<Comparison> {
    let w = w1_grid(grid, &a.measure, &b.measure)?;
    let (da, db) = (&a.decomposition, &b.decomposition);
    Ok(Comparison {
        w1: w.value,
        w1_bound: w.bound,
        energy_diff: (a.energy.value - b.energy.value).abs(),
        bd_diff: (da.mass_bd - db.mass_bd).abs(),
        s_diff: (da.mass_s - db.mass_s).abs(),
        forbidden_diff: (da.mass_forbidden - db.mass_forbidden).abs(),
    })
}
