//! JSON summaries and CSV tables for solver outputs.

use serde::Serialize;

use crate::envelope::{Decomposition, Part};
use crate::equilibrium::{EquilibriumReport, SolverKind, Status};
use crate::montecarlo::ZeroSet;
use crate::potential::EnergyValue;
use crate::surface::{DomainSpec, Ext, Point, SurfaceGrid, SurfaceModel};

#[derive(Clone, Debug, Serialize)]
pub struct Masses {
    pub bd: f64,
    pub s: f64,
    pub forbidden: f64,
    /// Mass left inside D, a discretization residue.
    pub interior: f64,
}

impl From<&Decomposition> for Masses {
    fn from(d: &Decomposition) -> Self {
        Masses { bd: d.mass_bd, s: d.mass_s, forbidden: d.mass_forbidden, interior: d.mass_d }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumSummary {
    pub model: SurfaceModel,
    pub domain: DomainSpec,
    pub resolution: usize,
    pub h: f64,
    pub solver: SolverKind,
    pub energy: EnergyValue,
    pub masses: Masses,
    pub coincidence_l1: f64,
    pub forbidden_nodes: usize,
    pub iterations: usize,
    pub status: Status,
    pub fixed_point_gap: Option<f64>,
    pub flags: Vec<String>,
    pub energy_trace: Vec<f64>,
    pub gap_trace: Vec<f64>,
}

pub fn summarize(grid: &SurfaceGrid, domain: &DomainSpec, r: &EquilibriumReport) -> EquilibriumSummary {
    EquilibriumSummary {
        model: grid.model,
        domain: domain.clone(),
        resolution: grid.resolution,
        h: grid.h,
        solver: r.solver,
        energy: r.energy,
        masses: (&r.decomposition).into(),
        coincidence_l1: r.decomposition.s_l1,
        forbidden_nodes: r.decomposition.forbidden_nodes,
        iterations: r.iterations,
        status: r.status,
        fixed_point_gap: r.fixed_point_gap,
        flags: r.flags.clone(),
        energy_trace: r.energy_trace.clone(),
        gap_trace: r.gap_trace.clone(),
    }
}

fn coord_cells(p: &Point) -> String {
    match p {
        Point::Sphere(Ext::Infinity) => "inf,inf".into(),
        _ => {
            let (x, y) = p.coords();
            format!("{x:.12},{y:.12}")
        }
    }
}

/// One row per node: position, ω-mass, then the named columns.
pub fn node_table(grid: &SurfaceGrid, columns: &[(&str, &[f64])], parts: Option<&[Part]>) -> String {
    let mut out = String::from("node,x,y,omega");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    if parts.is_some() {
        out.push_str(",part");
    }
    out.push('\n');
    for i in 0..grid.len() {
        out.push_str(&format!("{i},{},{:e}", coord_cells(&grid.nodes[i]), grid.cell_mass[i]));
        for (_, col) in columns {
            out.push_str(&format!(",{:e}", col[i]));
        }
        if let Some(p) = parts {
            out.push(',');
            out.push_str(p[i].label());
        }
        out.push('\n');
    }
    out
}

/// Node table of a solver output: ν, the field, and the part labels.
pub fn equilibrium_table(grid: &SurfaceGrid, r: &EquilibriumReport) -> String {
    node_table(grid, &[("nu", &r.measure.weights), ("field", &r.field)], Some(&r.decomposition.parts))
}

/// Zero sets as rows (sample, index, x, y); roots at ∞ print as `inf`.
pub fn zero_sets_csv(degree: usize, sets: &[ZeroSet]) -> String {
    let mut out = String::from("degree,sample,root,x,y\n");
    for (k, z) in sets.iter().enumerate() {
        for (j, p) in z.points.iter().enumerate() {
            out.push_str(&format!("{degree},{k},{j},{}\n", coord_cells(&Point::Sphere(*p))));
        }
    }
    out
}
