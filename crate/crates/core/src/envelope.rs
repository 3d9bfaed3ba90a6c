//! Discrete Perron envelope as an obstacle problem.
//!
//! Û is the largest φ with φ ≤ ψ and Lφ + m ≥ 0, where ψ = min(0, obstacle)
//! on D̄ and ψ = 0 elsewhere. At every node either the constraint is active
//! or Lφ + m vanishes. Projected SOR sweeps solve it; the measure
//! ν̂ = dd^cÛ + ω is read off as Lφ + m.
//!
//! Upper semicontinuous regularization is a no-op on a grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::laplacian::Laplacian;
use crate::potential::{DiscreteMeasure, FieldKind, PotentialField};
use crate::surface::{DomainMasks, SurfaceGrid};

/// Negative node masses down to this are rounding noise.
pub const CLIP_TOL: f64 = 1e-8;
/// Allowed deviation of the raw total mass from 1.
pub const MASS_TOL: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct ObstacleProblem<'a> {
    pub grid: &'a SurfaceGrid,
    pub laplacian: &'a Laplacian,
    pub masks: &'a DomainMasks,
    /// Upper constraint ψ per node.
    pub upper: Vec<f64>,
}

impl<'a> ObstacleProblem<'a> {
    /// `obstacle` is read on D̄ only and clipped at 0 there.
    pub fn new(
        grid: &'a SurfaceGrid,
        laplacian: &'a Laplacian,
        masks: &'a DomainMasks,
        obstacle: &[f64],
    ) -> Result<Self> {
        if obstacle.len() != grid.len() || laplacian.len() != grid.len() {
            return Err(Error::InvalidArgument("obstacle or operator does not match the grid".into()));
        }
        let closure = masks.closure();
        let mut upper = vec![0.0; grid.len()];
        for i in 0..grid.len() {
            if closure[i] {
                if !obstacle[i].is_finite() {
                    return Err(Error::InvalidArgument(format!("obstacle not finite at node {i}")));
                }
                upper[i] = obstacle[i].min(0.0);
            }
        }
        Ok(ObstacleProblem { grid, laplacian, masks, upper })
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolveOptions {
    pub max_sweeps: usize,
    /// Complementarity residual target, in units of the local cell mass.
    pub tol: f64,
    pub sor: f64,
    pub check_every: usize,
    /// Run primal-dual active-set steps before the sweeps.
    pub active_set: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { max_sweeps: 200_000, tol: 1e-9, sor: 1.8, check_every: 10, active_set: true }
    }
}

#[derive(Clone, Debug)]
pub struct EnvelopeResult {
    pub field: PotentialField,
    /// ν̂ after clipping and renormalization.
    pub measure: DiscreteMeasure,
    /// Lφ + m before clipping.
    pub raw_mass: Vec<f64>,
    /// Factor applied when renormalizing.
    pub renormalization: f64,
    pub clipped_mass: f64,
    /// max_i |φ_i − min(ψ_i, gs_i)|·d_i/m_i.
    pub residual: f64,
    /// max(0, φ − ψ); zero up to rounding by construction.
    pub feasibility: f64,
    pub residual_trace: Vec<f64>,
    pub sweeps: usize,
    pub active_set_steps: usize,
    pub sor_final: f64,
    pub converged: bool,
}

fn complementarity(problem: &ObstacleProblem, phi: &[f64]) -> f64 {
    let (lap, m) = (problem.laplacian, &problem.grid.cell_mass);
    let mut r: f64 = 0.0;
    for i in 0..phi.len() {
        let d = lap.diag[i];
        let gs = (lap.neighbor_sum(i, phi) + m[i]) / d;
        r = r.max((phi[i] - gs.min(problem.upper[i])).abs() * d / m[i]);
    }
    r
}

/// Projected SOR. `warm` is projected below ψ before use. Non-convergence
/// is reported through `converged`, not as an error.
pub fn solve_envelope(problem: &ObstacleProblem, opts: &SolveOptions, warm: Option<&[f64]>) -> Result<EnvelopeResult> {
    if !(opts.tol > 0.0) || !(opts.sor > 0.0 && opts.sor < 2.0) {
        return Err(Error::InvalidArgument("need tol > 0 and SOR factor in (0, 2)".into()));
    }
    let lap = problem.laplacian;
    let m = &problem.grid.cell_mass;
    let psi = &problem.upper;
    let n = psi.len();
    let mut phi: Vec<f64> = match warm {
        Some(w) if w.len() == n => w.iter().zip(psi).map(|(a, b)| a.min(*b)).collect(),
        _ => psi.clone(),
    };
    let mut active_set_steps = 0;
    if opts.active_set {
        let (p, steps) = active_set(problem, phi);
        phi = p;
        active_set_steps = steps;
    }
    let inv_d: Vec<f64> = lap.diag.iter().map(|d| 1.0 / d).collect();
    let mut omega = opts.sor;
    let every = opts.check_every.max(1);
    let mut residual = complementarity(problem, &phi);
    let mut trace = vec![residual];
    let mut sweeps = 0;
    while residual > opts.tol && sweeps < opts.max_sweeps {
        for _ in 0..every {
            for i in 0..n {
                let gs = (lap.neighbor_sum(i, &phi) + m[i]) * inv_d[i];
                let v = phi[i] + omega * (gs - phi[i]);
                phi[i] = v.min(psi[i]);
            }
        }
        sweeps += every;
        let r = complementarity(problem, &phi);
        if r > residual {
            // Oscillation: halve the over-relaxation.
            omega = 1.0 + 0.5 * (omega - 1.0);
        }
        residual = r;
        trace.push(r);
    }
    let converged = residual <= opts.tol;
    let feasibility = phi.iter().zip(psi).map(|(a, b)| (a - b).max(0.0)).fold(0.0, f64::max);
    let field = PotentialField { values: phi, kind: FieldKind::Envelope };
    let raw = raw_mass(&field, problem);
    let (measure, renormalization, clipped) = clip_measure(&raw, converged)?;
    Ok(EnvelopeResult {
        field,
        measure,
        raw_mass: raw,
        renormalization,
        clipped_mass: clipped,
        residual,
        feasibility,
        residual_trace: trace,
        sweeps,
        active_set_steps,
        sor_final: omega,
        converged,
    })
}

/// Primal-dual active set iteration: fix φ = ψ on the active set, solve the
/// free nodes exactly, then move nodes where φ > ψ into the set and nodes
/// where Lφ + m < 0 out of it. Monotone for this M-matrix structure; the
/// sweeps that follow certify the result.
fn active_set(problem: &ObstacleProblem, start: Vec<f64>) -> (Vec<f64>, usize) {
    let lap = problem.laplacian;
    let m = &problem.grid.cell_mass;
    let psi = &problem.upper;
    let n = psi.len();
    let mut active: Vec<bool> = (0..n).map(|i| start[i] >= psi[i]).collect();
    let mut phi = start;
    for step in 1..=200 {
        // A free component without a fixed neighbour would be a pure
        // Neumann problem; pin it to ψ instead.
        let mut seen = vec![false; n];
        for s in 0..n {
            if active[s] || seen[s] {
                continue;
            }
            let mut comp = vec![s];
            let mut touches = false;
            seen[s] = true;
            let mut k = 0;
            while k < comp.len() {
                let (c, _) = lap.row(comp[k]);
                for &j in c {
                    if active[j] {
                        touches = true;
                    } else if !seen[j] {
                        seen[j] = true;
                        comp.push(j);
                    }
                }
                k += 1;
            }
            if !touches {
                comp.iter().for_each(|&i| active[i] = true);
            }
        }
        let free: Vec<bool> = active.iter().map(|a| !a).collect();
        phi = lap.solve_dirichlet(&free, psi, m, &phi, 1e-14);
        let mut changed = false;
        for i in 0..n {
            let lambda = lap.neighbor_sum(i, &phi) - lap.diag[i] * phi[i] + m[i];
            let next = lambda + lap.diag[i] * (phi[i] - psi[i]) > 0.0;
            if next != active[i] {
                changed = true;
                active[i] = next;
            }
        }
        if !changed {
            return (phi.iter().zip(psi).map(|(a, b)| a.min(*b)).collect(), step);
        }
    }
    (phi.iter().zip(psi).map(|(a, b)| a.min(*b)).collect(), 200)
}

/// Lφ + m without clipping.
pub fn raw_mass(field: &PotentialField, problem: &ObstacleProblem) -> Vec<f64> {
    let lphi = problem.laplacian.apply(&field.values);
    lphi.iter().zip(&problem.grid.cell_mass).map(|(a, b)| a + b).collect()
}

fn clip_measure(raw: &[f64], strict: bool) -> Result<(DiscreteMeasure, f64, f64)> {
    let total: f64 = raw.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::Discretization(format!("envelope measure has total mass {total}")));
    }
    let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    if strict && min < -CLIP_TOL {
        return Err(Error::Discretization(format!("negative node mass {min:e}")));
    }
    let clipped: f64 = raw.iter().filter(|w| **w < 0.0).map(|w| -w).sum();
    let weights: Vec<f64> = raw.iter().map(|w| w.max(0.0)).collect();
    let s: f64 = weights.iter().sum();
    Ok((DiscreteMeasure { weights: weights.iter().map(|w| w / s).collect() }, 1.0 / s, clipped))
}

/// ν̂ = Lφ + m for an arbitrary field, clipped at −1e−8 and renormalized.
/// Returns the measure and the renormalization factor.
pub fn measure_of(field: &PotentialField, problem: &ObstacleProblem) -> Result<(DiscreteMeasure, f64)> {
    let (mu, f, _) = clip_measure(&raw_mass(field, problem), true)?;
    Ok((mu, f))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    D,
    BD,
    S,
    Forbidden,
}

impl Part {
    pub fn label(self) -> &'static str {
        match self {
            Part::D => "D",
            Part::BD => "bD",
            Part::S => "S",
            Part::Forbidden => "forbidden",
        }
    }
}

#[derive(Clone, Serialize)]
pub struct Decomposition {
    #[serde(skip)]
    pub parts: Vec<Part>,
    pub mass_d: f64,
    pub mass_bd: f64,
    pub mass_s: f64,
    pub mass_forbidden: f64,
    /// ω(S).
    pub omega_s: f64,
    /// Σ_S |ν_i − m_i|.
    pub s_l1_abs: f64,
    /// s_l1_abs/ω(S) when ω(S) ≥ 0.05, otherwise s_l1_abs.
    pub s_l1: f64,
    pub forbidden_nodes: usize,
    pub s_tol: f64,
    pub f_tol: f64,
    /// Forbidden mass is below f_tol.
    pub forbidden_ok: bool,
}

impl std::fmt::Debug for Decomposition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Decomposition")
            .field("mass_d", &self.mass_d)
            .field("mass_bd", &self.mass_bd)
            .field("mass_s", &self.mass_s)
            .field("mass_forbidden", &self.mass_forbidden)
            .field("omega_s", &self.omega_s)
            .field("s_l1", &self.s_l1)
            .field("forbidden_nodes", &self.forbidden_nodes)
            .field("s_tol", &self.s_tol)
            .finish()
    }
}

impl Decomposition {
    pub fn mask(&self, part: Part) -> Vec<bool> {
        self.parts.iter().map(|p| *p == part).collect()
    }
}

/// Minimum ω(S) for the relative L1 comparison.
pub const S_RELATIVE_FLOOR: f64 = 0.05;

/// Default s_tol: 3h times the steepest difference quotient of the field
/// across the edge of its zero set.
pub fn default_s_tol(grid: &SurfaceGrid, values: &[f64], masks: &DomainMasks) -> f64 {
    let closure = masks.closure();
    let zero = |i: usize| values[i] >= -1e-12;
    let mut g: f64 = 0.0;
    for i in 0..grid.len() {
        if closure[i] || !zero(i) {
            continue;
        }
        for &j in &grid.neighbors[i] {
            if !zero(j) && !closure[j] {
                g = g.max((values[i] - values[j]).abs() / grid.dist(i, j));
            }
        }
    }
    3.0 * grid.h * g
}

/// Splits ν into D, bD, S and forbidden parts. `values` is Û (or U_ν).
pub fn decompose(
    grid: &SurfaceGrid,
    masks: &DomainMasks,
    values: &[f64],
    nu: &DiscreteMeasure,
    s_tol: Option<f64>,
    f_tol: f64,
) -> Result<Decomposition> {
    let s_tol = s_tol.unwrap_or_else(|| default_s_tol(grid, values, masks));
    let parts: Vec<Part> = (0..grid.len())
        .map(|i| {
            if masks.band[i] {
                Part::BD
            } else if masks.interior[i] {
                Part::D
            } else if values[i] >= -s_tol {
                Part::S
            } else {
                Part::Forbidden
            }
        })
        .collect();
    let mut mass = [0.0; 4];
    let (mut omega_s, mut l1) = (0.0, 0.0);
    let mut forbidden_nodes = 0;
    for i in 0..grid.len() {
        let k = parts[i] as usize;
        mass[k] += nu.weights[i];
        match parts[i] {
            Part::S => {
                omega_s += grid.cell_mass[i];
                l1 += (nu.weights[i] - grid.cell_mass[i]).abs();
            }
            Part::Forbidden => forbidden_nodes += 1,
            _ => {}
        }
    }
    if !masks.is_empty() && forbidden_nodes == 0 {
        return Err(Error::StructureViolation("forbidden set is empty for a nonempty hole".into()));
    }
    let s_l1 = if omega_s >= S_RELATIVE_FLOOR { l1 / omega_s } else { l1 };
    Ok(Decomposition {
        parts,
        mass_d: mass[Part::D as usize],
        mass_bd: mass[Part::BD as usize],
        mass_s: mass[Part::S as usize],
        mass_forbidden: mass[Part::Forbidden as usize],
        omega_s,
        s_l1_abs: l1,
        s_l1,
        forbidden_nodes,
        s_tol,
        f_tol,
        forbidden_ok: mass[Part::Forbidden as usize] <= f_tol,
    })
}

/// CSV rows: node, Û, ν̂ mass, part.
pub fn envelope_csv(values: &[f64], nu: &DiscreteMeasure, parts: &[Part]) -> String {
    let mut out = String::from("node,u_hat,nu_mass,part\n");
    for i in 0..values.len() {
        out.push_str(&format!("{i},{:e},{:e},{}\n", values[i], nu.weights[i], parts[i].label()));
    }
    out
}
