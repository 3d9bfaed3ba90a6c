//! Surface models, grids and hole domains.
//!
//! The sphere is the Riemann sphere with the Fubini–Study form of total mass
//! one, seen through the stereographic coordinate z (0 is the south pole). Its
//! metric is the round metric of total area one, so the radius is 1/(2√π) and
//! antipodes sit at distance √π/2. The torus is the unit square with periodic
//! identification and the flat metric.
//!
//! Sphere grids are equal-area: latitude bands uniform in u = |z|²/(1+|z|²)
//! (which is uniformly distributed under ω), uniform in angle, plus one polar
//! cap cell around 0 and one around ∞. Every cell carries the same mass.

use std::f64::consts::{PI, SQRT_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radius of the round sphere of area one.
pub const SPHERE_RADIUS: f64 = 0.282_094_791_773_878_14;

/// Smallest admissible grid resolution.
pub const MIN_RESOLUTION: usize = 4;

/// Minimum ω-mass that must stay outside the closed hole.
pub const MIN_OUTSIDE_MASS: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceModel {
    Sphere,
    Torus,
}

impl SurfaceModel {
    /// Largest distance between two points.
    pub fn diameter(self) -> f64 {
        match self {
            SurfaceModel::Sphere => PI * SPHERE_RADIUS,
            SurfaceModel::Torus => SQRT_2 / 2.0,
        }
    }

    pub fn id(self) -> u64 {
        match self {
            SurfaceModel::Sphere => 0,
            SurfaceModel::Torus => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SurfaceModel::Sphere => "sphere",
            SurfaceModel::Torus => "torus",
        }
    }
}

/// A point of the extended complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ext {
    Finite(Complex64),
    Infinity,
}

impl Ext {
    /// u = |z|²/(1+|z|²), the ω-mass of the disk through z.
    pub fn u(self) -> f64 {
        match self {
            Ext::Finite(z) => {
                let r2 = z.norm_sqr();
                r2 / (1.0 + r2)
            }
            Ext::Infinity => 1.0,
        }
    }

    pub fn abs(self) -> f64 {
        match self {
            Ext::Finite(z) => z.norm(),
            Ext::Infinity => f64::INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    Sphere(Ext),
    /// Coordinates reduced to [0, 1).
    Torus {
        x: f64,
        y: f64,
    },
}

impl Point {
    pub fn sphere(re: f64, im: f64) -> Self {
        Point::Sphere(Ext::Finite(Complex64::new(re, im)))
    }

    pub fn infinity() -> Self {
        Point::Sphere(Ext::Infinity)
    }

    pub fn torus(x: f64, y: f64) -> Self {
        Point::Torus { x: x.rem_euclid(1.0) % 1.0, y: y.rem_euclid(1.0) % 1.0 }
    }

    /// Point of the sphere with given u and angle.
    pub fn from_u_theta(u: f64, theta: f64) -> Self {
        if u >= 1.0 {
            return Point::infinity();
        }
        let r = (u / (1.0 - u)).sqrt();
        Point::Sphere(Ext::Finite(Complex64::from_polar(r, theta)))
    }

    pub fn model(&self) -> SurfaceModel {
        match self {
            Point::Sphere(_) => SurfaceModel::Sphere,
            Point::Torus { .. } => SurfaceModel::Torus,
        }
    }

    /// Chart coordinates as two reals (z for the sphere, (x, y) for the torus).
    /// The point at infinity is reported as (inf, 0).
    pub fn coords(&self) -> (f64, f64) {
        match *self {
            Point::Sphere(Ext::Finite(z)) => (z.re, z.im),
            Point::Sphere(Ext::Infinity) => (f64::INFINITY, 0.0),
            Point::Torus { x, y } => (x, y),
        }
    }
}

/// Representative of t modulo 1 in [−½, ½].
#[inline]
pub fn wrap_half(t: f64) -> f64 {
    t - t.round()
}

/// Half the chordal distance between the images of z and w on the unit
/// sphere: |z−w| / √((1+|z|²)(1+|w|²)).
pub fn half_chord(z: Ext, w: Ext) -> f64 {
    match (z, w) {
        (Ext::Finite(a), Ext::Finite(b)) => (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt(),
        (Ext::Finite(a), Ext::Infinity) | (Ext::Infinity, Ext::Finite(a)) => 1.0 / (1.0 + a.norm_sqr()).sqrt(),
        (Ext::Infinity, Ext::Infinity) => 0.0,
    }
}

/// Geodesic distance for the metric induced by ω.
pub fn distance(model: SurfaceModel, p: &Point, q: &Point) -> f64 {
    match (p, q) {
        (Point::Sphere(a), Point::Sphere(b)) => {
            debug_assert_eq!(model, SurfaceModel::Sphere);
            2.0 * SPHERE_RADIUS * half_chord(*a, *b).min(1.0).asin()
        }
        (Point::Torus { x: x1, y: y1 }, Point::Torus { x: x2, y: y2 }) => {
            debug_assert_eq!(model, SurfaceModel::Torus);
            wrap_half(x1 - x2).hypot(wrap_half(y1 - y2))
        }
        _ => panic!("distance between points of different models"),
    }
}

#[derive(Clone, Debug)]
pub struct SphereLayout {
    pub bands: usize,
    pub angles: usize,
    /// Band boundaries in u; band b spans `u_faces[b]..u_faces[b+1]`.
    pub u_faces: Vec<f64>,
}

impl SphereLayout {
    #[inline]
    pub fn node(&self, band: usize, angle: usize) -> usize {
        1 + band * self.angles + angle
    }

    pub fn south(&self) -> usize {
        0
    }

    pub fn north(&self) -> usize {
        self.bands * self.angles + 1
    }

    /// (band, angle) of a band node, `None` for the poles.
    pub fn band_angle(&self, i: usize) -> Option<(usize, usize)> {
        if i == 0 || i == self.north() {
            None
        } else {
            Some(((i - 1) / self.angles, (i - 1) % self.angles))
        }
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.angles as f64
    }

    pub fn band_u(&self, b: usize) -> f64 {
        0.5 * (self.u_faces[b] + self.u_faces[b + 1])
    }
}

#[derive(Clone, Debug)]
pub enum Layout {
    Sphere(SphereLayout),
    Torus { n: usize },
}

#[derive(Clone, Debug)]
pub struct SurfaceGrid {
    pub model: SurfaceModel,
    pub resolution: usize,
    pub nodes: Vec<Point>,
    pub cell_mass: Vec<f64>,
    pub neighbors: Vec<Vec<usize>>,
    /// Characteristic spacing: the equatorial cell width on the sphere, 1/N on the torus.
    pub h: f64,
    pub layout: Layout,
}

/// Builds the grid of the given model. Sphere resolutions must be multiples
/// of 4 (N angles, N/2 bands, an even number of bands keeps the grid
/// symmetric under z ↦ 1/z).
pub fn build_grid(model: SurfaceModel, resolution: usize) -> Result<SurfaceGrid> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!("resolution {resolution} below minimum {MIN_RESOLUTION}")));
    }
    match model {
        SurfaceModel::Torus => Ok(torus_grid(resolution)),
        SurfaceModel::Sphere => {
            if resolution % 4 != 0 {
                return Err(Error::InvalidArgument(format!("sphere resolution {resolution} must be a multiple of 4")));
            }
            Ok(sphere_grid(resolution))
        }
    }
}

fn torus_grid(n: usize) -> SurfaceGrid {
    let h = 1.0 / n as f64;
    let mut nodes = Vec::with_capacity(n * n);
    let mut neighbors = Vec::with_capacity(n * n);
    for ix in 0..n {
        for iy in 0..n {
            nodes.push(Point::Torus { x: ix as f64 * h, y: iy as f64 * h });
            let idx = |a: usize, b: usize| a * n + b;
            neighbors.push(vec![
                idx((ix + n - 1) % n, iy),
                idx((ix + 1) % n, iy),
                idx(ix, (iy + n - 1) % n),
                idx(ix, (iy + 1) % n),
            ]);
        }
    }
    SurfaceGrid {
        model: SurfaceModel::Torus,
        resolution: n,
        cell_mass: vec![1.0 / (n * n) as f64; n * n],
        nodes,
        neighbors,
        h,
        layout: Layout::Torus { n },
    }
}

fn sphere_grid(res: usize) -> SurfaceGrid {
    let angles = res;
    let bands = res / 2;
    let cells = angles * bands + 2;
    let u_faces: Vec<f64> = (0..=bands).map(|k| (1 + k * angles) as f64 / cells as f64).collect();
    let layout = SphereLayout { bands, angles, u_faces };
    let dtheta = layout.dtheta();

    let mut nodes = Vec::with_capacity(cells);
    nodes.push(Point::sphere(0.0, 0.0));
    for b in 0..bands {
        let u = layout.band_u(b);
        for a in 0..angles {
            nodes.push(Point::from_u_theta(u, (a as f64 + 0.5) * dtheta));
        }
    }
    nodes.push(Point::infinity());

    let mut neighbors = vec![Vec::new(); cells];
    neighbors[0] = (0..angles).map(|a| layout.node(0, a)).collect();
    neighbors[cells - 1] = (0..angles).map(|a| layout.node(bands - 1, a)).collect();
    for b in 0..bands {
        for a in 0..angles {
            let i = layout.node(b, a);
            let nb = &mut neighbors[i];
            nb.push(if b == 0 { 0 } else { layout.node(b - 1, a) });
            nb.push(if b + 1 == bands { cells - 1 } else { layout.node(b + 1, a) });
            nb.push(layout.node(b, (a + angles - 1) % angles));
            nb.push(layout.node(b, (a + 1) % angles));
        }
    }

    SurfaceGrid {
        model: SurfaceModel::Sphere,
        resolution: res,
        nodes,
        cell_mass: vec![1.0 / cells as f64; cells],
        neighbors,
        h: PI.sqrt() / res as f64,
        layout: Layout::Sphere(layout),
    }
}

impl SurfaceGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        distance(self.model, &self.nodes[i], &self.nodes[j])
    }

    pub fn sphere_layout(&self) -> Option<&SphereLayout> {
        match &self.layout {
            Layout::Sphere(l) => Some(l),
            Layout::Torus { .. } => None,
        }
    }

    /// Index of the node whose cell contains `p`.
    pub fn locate(&self, p: &Point) -> usize {
        match (&self.layout, p) {
            (Layout::Torus { n }, Point::Torus { x, y }) => {
                let n = *n;
                let ix = ((x * n as f64).round() as usize) % n;
                let iy = ((y * n as f64).round() as usize) % n;
                ix * n + iy
            }
            (Layout::Sphere(l), Point::Sphere(e)) => {
                let u = e.u();
                if u < l.u_faces[0] {
                    return l.south();
                }
                if u >= l.u_faces[l.bands] {
                    return l.north();
                }
                let width = l.u_faces[1] - l.u_faces[0];
                let b = (((u - l.u_faces[0]) / width) as usize).min(l.bands - 1);
                let theta = match e {
                    Ext::Finite(z) => z.arg().rem_euclid(TAU),
                    Ext::Infinity => 0.0,
                };
                let a = ((theta / l.dtheta()) as usize).min(l.angles - 1);
                l.node(b, a)
            }
            _ => panic!("point does not belong to the grid's model"),
        }
    }

    /// Sample points covering the closed cell of node `i` (corners and edges
    /// included).
    pub fn cell_samples(&self, i: usize, per_side: usize) -> Vec<Point> {
        let k = per_side.max(2);
        let lerp = |a: f64, b: f64, t: usize| a + (b - a) * t as f64 / (k - 1) as f64;
        let mut out = Vec::with_capacity(k * k);
        match &self.layout {
            Layout::Torus { .. } => {
                let (x, y) = self.nodes[i].coords();
                let hh = 0.5 * self.h;
                for s in 0..k {
                    for t in 0..k {
                        out.push(Point::torus(lerp(x - hh, x + hh, s), lerp(y - hh, y + hh, t)));
                    }
                }
            }
            Layout::Sphere(l) => {
                let (u_lo, u_hi, t_lo, t_hi) = match l.band_angle(i) {
                    Some((b, a)) => {
                        (l.u_faces[b], l.u_faces[b + 1], a as f64 * l.dtheta(), (a + 1) as f64 * l.dtheta())
                    }
                    None if i == l.south() => (0.0, l.u_faces[0], 0.0, TAU),
                    None => (l.u_faces[l.bands], 1.0, 0.0, TAU),
                };
                let kt = if t_hi - t_lo > PI { 4 * k } else { k };
                for s in 0..k {
                    for t in 0..kt {
                        let th = t_lo + (t_hi - t_lo) * t as f64 / (kt - 1) as f64;
                        out.push(Point::from_u_theta(lerp(u_lo, u_hi, s), th));
                    }
                }
            }
        }
        out
    }
}

/// Description of the hole D.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    /// {|z| < r} on the sphere.
    Disk {
        r: f64,
    },
    /// {r1 < |z| < r2} on the sphere.
    Annulus {
        r1: f64,
        r2: f64,
    },
    /// {|x| < r/2} (mod 1) on the torus.
    TorusStrip {
        r: f64,
    },
    /// Everything farther than `r` from `center` (chart coordinates).
    ComplementOfBall {
        center: [f64; 2],
        r: f64,
    },
    Empty,
    /// Explicit node sets on a given grid.
    NodeMask {
        interior: Vec<usize>,
        band: Vec<usize>,
    },
}

impl DomainSpec {
    pub fn label(&self) -> String {
        match self {
            DomainSpec::Disk { r } => format!("disk(r={r})"),
            DomainSpec::Annulus { r1, r2 } => format!("annulus(r1={r1},r2={r2})"),
            DomainSpec::TorusStrip { r } => format!("torus_strip(r={r})"),
            DomainSpec::ComplementOfBall { center, r } => {
                format!("complement_of_ball(center=({},{}),r={r})", center[0], center[1])
            }
            DomainSpec::Empty => "empty".into(),
            DomainSpec::NodeMask { interior, band } => {
                format!("node_mask({} interior, {} band)", interior.len(), band.len())
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, DomainSpec::Empty)
    }

    /// Checks parameters against the model.
    pub fn validate(&self, model: SurfaceModel) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidDomain(m));
        match (self, model) {
            (DomainSpec::Disk { r }, SurfaceModel::Sphere) => {
                if !(r.is_finite() && *r > 0.0) {
                    return bad(format!("disk radius {r} must be positive"));
                }
            }
            (DomainSpec::Annulus { r1, r2 }, SurfaceModel::Sphere) => {
                if !(*r1 > 0.0 && r2 > r1 && r2.is_finite()) {
                    return bad(format!("annulus needs 0 < r1 < r2, got {r1}, {r2}"));
                }
            }
            (DomainSpec::TorusStrip { r }, SurfaceModel::Torus) => {
                if !(*r > 0.0 && *r < 1.0) {
                    return bad(format!("strip parameter {r} must lie in (0, 1)"));
                }
            }
            (DomainSpec::ComplementOfBall { center, r }, m) => {
                if !(*r > 0.0 && *r < m.diameter()) {
                    return bad(format!("ball radius {r} must lie in (0, {})", m.diameter()));
                }
                if !(center[0].is_finite() && center[1].is_finite()) {
                    return bad("ball center must be finite".into());
                }
            }
            (DomainSpec::Empty, _) | (DomainSpec::NodeMask { .. }, _) => {}
            (spec, m) => {
                return bad(format!("{} is not defined on the {}", spec.label(), m.name()));
            }
        }
        Ok(())
    }

    /// Signed level function, negative exactly on D. `None` for node masks.
    pub fn level(&self, p: &Point) -> Option<f64> {
        Some(match (self, p) {
            (DomainSpec::Disk { r }, Point::Sphere(z)) => z.abs() - r,
            (DomainSpec::Annulus { r1, r2 }, Point::Sphere(z)) => {
                let a = z.abs();
                (r1 - a).max(a - r2)
            }
            (DomainSpec::TorusStrip { r }, Point::Torus { x, .. }) => wrap_half(*x).abs() - r / 2.0,
            (DomainSpec::ComplementOfBall { center, r }, q) => {
                let c = match q {
                    Point::Sphere(_) => Point::sphere(center[0], center[1]),
                    Point::Torus { .. } => Point::torus(center[0], center[1]),
                };
                r - distance(q.model(), &c, q)
            }
            (DomainSpec::Empty, _) => f64::INFINITY,
            _ => return None,
        })
    }

    /// Whether `p` lies in the closed hole, counting points within `tol` of
    /// the boundary as inside.
    pub fn contains_closure(&self, p: &Point, tol: f64) -> bool {
        self.level(p).is_some_and(|f| f <= tol)
    }
}

/// Node classification of a hole on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainMasks {
    /// Nodes strictly inside D and away from its boundary.
    pub interior: Vec<bool>,
    /// Nodes whose cell meets bD.
    pub band: Vec<bool>,
}

impl DomainMasks {
    /// Nodes of the closed hole: interior or band.
    pub fn closure(&self) -> Vec<bool> {
        self.interior.iter().zip(&self.band).map(|(a, b)| *a || *b).collect()
    }

    /// Nodes where the measure may live: everything except the interior.
    pub fn allowed(&self) -> Vec<bool> {
        self.interior.iter().map(|a| !a).collect()
    }

    pub fn is_empty(&self) -> bool {
        !self.interior.iter().chain(&self.band).any(|&b| b)
    }
}

const CELL_SAMPLES: usize = 9;
const BAND_TOL: f64 = 1e-9;

pub fn domain_mask(grid: &SurfaceGrid, spec: &DomainSpec) -> Result<DomainMasks> {
    spec.validate(grid.model)?;
    let n = grid.len();
    let mut interior = vec![false; n];
    let mut band = vec![false; n];
    match spec {
        DomainSpec::Empty => return Ok(DomainMasks { interior, band }),
        DomainSpec::NodeMask { interior: inn, band: bnd } => {
            for &i in inn.iter().chain(bnd) {
                if i >= n {
                    return Err(Error::InvalidDomain(format!("node {i} outside grid of {n}")));
                }
            }
            for &i in inn {
                interior[i] = true;
            }
            for &i in bnd {
                band[i] = true;
                interior[i] = false;
            }
        }
        _ => {
            for i in 0..n {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for p in grid.cell_samples(i, CELL_SAMPLES) {
                    let f = spec.level(&p).expect("level function");
                    lo = lo.min(f);
                    hi = hi.max(f);
                }
                // Closed test: cells touching bD from either side are band.
                if lo <= BAND_TOL && hi >= -BAND_TOL {
                    band[i] = true;
                } else if spec.level(&grid.nodes[i]).expect("level function") < 0.0 {
                    interior[i] = true;
                }
            }
        }
    }
    let outside: f64 = (0..n).filter(|&i| !interior[i] && !band[i]).map(|i| grid.cell_mass[i]).sum();
    if outside < MIN_OUTSIDE_MASS {
        return Err(Error::InvalidDomain(format!(
            "closure of {} leaves only {:.4} of the mass outside (minimum {MIN_OUTSIDE_MASS})",
            spec.label(),
            outside.max(0.0)
        )));
    }
    if !band.iter().any(|&b| b) {
        return Err(Error::InvalidDomain(format!("{} has no boundary nodes at this resolution", spec.label())));
    }
    Ok(DomainMasks { interior, band })
}

/// Connected components of a node set under grid adjacency. Returns a label
/// per node (`usize::MAX` outside the set) and the number of components.
pub fn components(grid: &SurfaceGrid, set: &[bool]) -> (Vec<usize>, usize) {
    let mut label = vec![usize::MAX; grid.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..grid.len() {
        if !set[start] || label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        stack.push(start);
        while let Some(i) = stack.pop() {
            for &j in &grid.neighbors[i] {
                if set[j] && label[j] == usize::MAX {
                    label[j] = count;
                    stack.push(j);
                }
            }
        }
        count += 1;
    }
    (label, count)
}
