//! Measures, potentials and the energy functional.
//!
//! I(μ) = −∫U′_μ dμ + 2 max U′_μ, which equals the form −∫U_μ ω − ∫U_μ dμ
//! written with the type-M potential U_μ = U′_μ − max U′_μ (the two agree
//! because ∫U′_μ ω = 0). Only the first form is evaluated here. Integrals
//! against ω use the cell masses; maxima are taken over grid nodes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::green::{GreenKernel, KernelMatrix};
use crate::surface::{Point, SurfaceGrid};

/// Relative weight above which an atom triggers the atomic warning.
pub const ATOMIC_FACTOR: f64 = 10.0;

/// Probability weights on the nodes of a grid (dense).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Validates nonnegativity and unit mass.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::InvalidArgument(format!("negative or NaN weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("total mass {total} is not 1")));
        }
        Ok(DiscreteMeasure { weights })
    }

    /// Normalizes nonnegative weights to unit mass.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument("cannot normalize these weights".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(DiscreteMeasure { weights })
    }

    pub fn omega(grid: &SurfaceGrid) -> Self {
        DiscreteMeasure { weights: grid.cell_mass.clone() }
    }

    /// ω restricted to `mask`, normalized.
    pub fn omega_on(grid: &SurfaceGrid, mask: &[bool]) -> Result<Self> {
        let w = grid.cell_mass.iter().zip(mask).map(|(m, &k)| if k { *m } else { 0.0 }).collect();
        Self::normalized(w)
    }

    pub fn atom(n: usize, i: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[i] = 1.0;
        DiscreteMeasure { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Nodes carrying positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    pub fn mass_on(&self, mask: &[bool]) -> f64 {
        self.weights.iter().zip(mask).filter(|(_, &k)| k).map(|(w, _)| w).sum()
    }

    /// (1−t)·self + t·other.
    pub fn mix(&self, other: &Self, t: f64) -> Self {
        DiscreteMeasure {
            weights: self.weights.iter().zip(&other.weights).map(|(a, b)| (1.0 - t) * a + t * b).collect(),
        }
    }

    pub fn to_points(&self, grid: &SurfaceGrid) -> PointMeasure {
        let support = self.support();
        PointMeasure {
            points: support.iter().map(|&i| grid.nodes[i]).collect(),
            weights: support.iter().map(|&i| self.weights[i]).collect(),
        }
    }
}

/// Probability weights on arbitrary points of a model.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMeasure {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl PointMeasure {
    pub fn uniform(points: Vec<Point>) -> Self {
        let w = 1.0 / points.len() as f64;
        PointMeasure { weights: vec![w; points.len()], points }
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Aggregates the mass onto the cells of a grid.
    pub fn to_grid(&self, grid: &SurfaceGrid) -> DiscreteMeasure {
        let mut weights = vec![0.0; grid.len()];
        for (p, w) in self.points.iter().zip(&self.weights) {
            weights[grid.locate(p)] += w;
        }
        DiscreteMeasure { weights }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// U′_μ.
    Raw,
    /// U_μ = U′_μ − max U′_μ.
    TypeM,
    /// Perron envelope Û.
    Envelope,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialField {
    pub values: Vec<f64>,
    pub kind: FieldKind,
}

impl PotentialField {
    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// ∫ field dμ.
    pub fn integrate(&self, measure: &DiscreteMeasure) -> f64 {
        self.values.iter().zip(&measure.weights).map(|(a, b)| a * b).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyValue {
    pub value: f64,
    /// −∫U′_μ dμ.
    pub self_term: f64,
    /// 2 max U′_μ.
    pub max_term: f64,
    pub atomic_warning: bool,
}

/// U′_μ on the grid nodes (matrix path).
pub fn potential_of(measure: &DiscreteMeasure, matrix: &KernelMatrix) -> PotentialField {
    PotentialField { values: matrix.matvec(&measure.weights), kind: FieldKind::Raw }
}

/// U′_μ on the grid nodes for a measure on free points (kernel path). Points
/// coinciding with a node contribute the regularized diagonal there.
pub fn potential_of_points(measure: &PointMeasure, kernel: &GreenKernel, grid: &SurfaceGrid) -> PotentialField {
    let diag = kernel.diagonal(grid.cell_mass[0]);
    let values = grid
        .nodes
        .iter()
        .map(|x| {
            measure
                .points
                .iter()
                .zip(&measure.weights)
                .map(|(p, w)| {
                    let g = kernel.eval(x, p);
                    w * if g.is_finite() { g } else { diag }
                })
                .sum()
        })
        .collect();
    PotentialField { values, kind: FieldKind::Raw }
}

pub fn type_m(field: &PotentialField) -> Result<PotentialField> {
    let m = field.max();
    if !m.is_finite() {
        return Err(Error::InvalidArgument("field has no finite maximum".into()));
    }
    Ok(PotentialField { values: field.values.iter().map(|v| v - m).collect(), kind: FieldKind::TypeM })
}

/// Energy from a precomputed U′_μ = G w.
pub fn energy_from_potential(measure: &DiscreteMeasure, potential: &[f64], cell_mass: &[f64]) -> EnergyValue {
    let quad: f64 = measure.weights.iter().zip(potential).map(|(w, u)| w * u).sum();
    let max = potential.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let atomic_warning = measure.weights.iter().zip(cell_mass).any(|(w, m)| *w > ATOMIC_FACTOR * m);
    EnergyValue { value: -quad + 2.0 * max, self_term: -quad, max_term: 2.0 * max, atomic_warning }
}

pub fn energy(measure: &DiscreteMeasure, matrix: &KernelMatrix, grid: &SurfaceGrid) -> EnergyValue {
    let u = matrix.matvec(&measure.weights);
    energy_from_potential(measure, &u, &grid.cell_mass)
}

/// ∫U_μ dν − ∫U_ν dν; nonpositive for every μ on X∖D when ν is the
/// equilibrium measure.
pub fn characterization_check(mu: &DiscreteMeasure, nu: &DiscreteMeasure, matrix: &KernelMatrix) -> f64 {
    let u_nu = matrix.matvec(&nu.weights);
    characterization_with(mu, nu, &u_nu, matrix)
}

/// Same as [`characterization_check`] with U′_ν supplied.
pub fn characterization_with(mu: &DiscreteMeasure, nu: &DiscreteMeasure, u_nu: &[f64], matrix: &KernelMatrix) -> f64 {
    if mu == nu {
        return 0.0;
    }
    let u_mu = matrix.matvec(&mu.weights);
    let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dot = |v: &[f64]| -> f64 { v.iter().zip(&nu.weights).map(|(a, b)| a * b).sum() };
    (dot(&u_mu) - max(&u_mu)) - (dot(u_nu) - max(u_nu))
}
