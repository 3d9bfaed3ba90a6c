//! Equilibrium measures of holes on compact Riemann surfaces.
//!
//! Two surface models are supported: the Riemann sphere with its
//! Fubini–Study form and the flat square torus, both normalized to total mass
//! one. Given a hole D, the equilibrium measure ν minimizes
//! I(μ) = −∫U′_μ dμ + 2 max U′_μ over probability measures on X∖D, where
//! U′_μ is the Green potential of μ.

pub mod envelope;
pub mod equilibrium;
pub mod error;
pub mod green;
pub mod laplacian;
pub mod montecarlo;
pub mod poly;
pub mod potential;
pub mod radial_oracle;
pub mod report;
pub mod surface;
pub mod transport;
pub mod validation;

pub use envelope::{Decomposition, EnvelopeResult, ObstacleProblem};
pub use equilibrium::{EquilibriumReport, SolverKind};
pub use error::{Error, Result};
pub use green::{GreenKernel, KernelMatrix};
pub use potential::{DiscreteMeasure, EnergyValue, PointMeasure, PotentialField};
pub use radial_oracle::RadialProfile;
pub use surface::{DomainMasks, DomainSpec, Point, SurfaceGrid, SurfaceModel};
