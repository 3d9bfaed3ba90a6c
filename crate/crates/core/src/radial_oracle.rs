//! Exact one-dimensional equilibria for rotation-invariant holes on the
//! sphere and x-invariant strips on the torus.
//!
//! Sphere, in s = log|z|. For a radial ν with cumulative mass M(s) the
//! potential is U′_ν = V − b + const, where V(s) = ∫max(s, s′)dν is convex
//! with slope M ∈ [0,1] and b(s) = ½log(1+e^{2s}). At the equilibrium
//! V ≤ b, V = b on the caps (where ν = ω), V is linear on D and on the
//! gaps, and kinks of V are circles carrying the slope jump as mass.
//! With max(V − b) = 0 the energy is
//!
//!   I = Σ_kinks m·(b − V) + ∫(b − V) dω,
//!
//! evaluated piece by piece in u = e^{2s}/(1+e^{2s}), the ω-mass below s.
//! The line on a bounded component of D is tangent to b at a point p
//! chosen to minimize I.
//!
//! Torus, in x: U″ = 2π(ν − ω), so U = −q(x − c)² + const away from the
//! support, with q calibrated from the discrete operator (π here).

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::laplacian::Laplacian;
use crate::potential::{DiscreteMeasure, PointMeasure};
use crate::surface::{Layout, Point, SurfaceGrid, SurfaceModel};

/// ½log(1+e^{2s}).
pub fn obstacle_b(s: f64) -> f64 {
    if s > 0.0 {
        s + 0.5 * (-2.0 * s).exp().ln_1p()
    } else {
        0.5 * (2.0 * s).exp().ln_1p()
    }
}

/// b′(s) = ω-mass of {log|z| < s}.
pub fn mass_below(s: f64) -> f64 {
    if s == f64::INFINITY {
        1.0
    } else if s == f64::NEG_INFINITY {
        0.0
    } else {
        1.0 / (1.0 + (-2.0 * s).exp())
    }
}

/// ∫b du as a function of s.
fn f_b(s: f64) -> f64 {
    if s == f64::NEG_INFINITY {
        return 0.0;
    }
    if s == f64::INFINITY {
        return 0.5;
    }
    let u = mass_below(s);
    0.5 * u - obstacle_b(s) * (1.0 - u)
}

/// ∫s du as a function of s.
fn f_s(s: f64) -> f64 {
    if s.is_infinite() {
        return 0.0;
    }
    mass_below(s) * s - obstacle_b(s)
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Tangent point q > x0 of the line through (x0, v) touching b, when
/// x0 < v < b(x0). `limit` bounds the search.
fn tangent_from_left(x0: f64, v: f64, limit: f64) -> Option<f64> {
    if !(v > x0 && v < obstacle_b(x0)) {
        return None;
    }
    let t = |q: f64| obstacle_b(q) + mass_below(q) * (x0 - q) - v;
    let mut hi = if limit.is_finite() { limit } else { x0 + 1.0 };
    while t(hi) > 0.0 {
        if limit.is_finite() || hi > 350.0 {
            return None;
        }
        hi = x0 + 2.0 * (hi - x0);
    }
    Some(bisect(x0, hi, t))
}

/// Tangent point q < x1 of the line through (x1, v) touching b, when
/// 0 < v < b(x1).
fn tangent_from_right(x1: f64, v: f64, limit: f64) -> Option<f64> {
    if !(v > 0.0 && v < obstacle_b(x1)) {
        return None;
    }
    let t = |q: f64| obstacle_b(q) + mass_below(q) * (x1 - q) - v;
    let mut lo = if limit.is_finite() { limit } else { x1 - 1.0 };
    while t(lo) > 0.0 {
        if limit.is_finite() || lo < -350.0 {
            return None;
        }
        lo = x1 - 2.0 * (x1 - lo);
    }
    Some(bisect(lo, x1, t))
}

/// Solves ½log(1+t²) = t²/(1+t²)·log(t/r) for t > r: the radius where the
/// tangent from the boundary of the disk of radius r touches the obstacle.
pub fn tangency_root(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("tangency root needs 0 < r < 1, got {r}")));
    }
    let q = tangent_from_left(r.ln(), 0.0, f64::INFINITY)
        .ok_or_else(|| Error::InvalidArgument(format!("no tangent for r = {r}")))?;
    Ok(q.exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PieceKind {
    /// V = slope·s + intercept.
    Line { slope: f64, intercept: f64 },
    /// V equals the obstacle.
    Cap,
    /// U = offset − q(x − center)² (torus).
    Quadratic { center: f64, offset: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub kind: PieceKind,
}

/// A circle (sphere) or vertical line (torus) carrying mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Kink {
    pub s: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialProfile {
    pub model: SurfaceModel,
    /// Pieces covering the whole line (sphere) or [0, 1) (torus), in order.
    pub pieces: Vec<Piece>,
    pub kinks: Vec<Kink>,
    /// Intervals where ν = ω.
    pub caps: Vec<(f64, f64)>,
    /// Points where a line meets the obstacle tangentially.
    pub tangency: Vec<f64>,
    /// Torus quadratic coefficient; 0 on the sphere.
    pub q: f64,
    pub energy: f64,
}

impl RadialProfile {
    pub fn obstacle(&self, s: f64) -> f64 {
        match self.model {
            SurfaceModel::Sphere => obstacle_b(s),
            SurfaceModel::Torus => 0.0,
        }
    }

    /// V(s) on the sphere, U(x) on the torus.
    pub fn value(&self, s: f64) -> f64 {
        let piece =
            self.pieces.iter().find(|p| s >= p.lo && s <= p.hi).or(self.pieces.last()).expect("nonempty profile");
        match piece.kind {
            PieceKind::Line { slope, intercept } => slope * s + intercept,
            PieceKind::Cap => self.obstacle(s),
            PieceKind::Quadratic { center, offset } => offset - self.q * (s - center).powi(2),
        }
    }

    pub fn kink_mass(&self) -> f64 {
        self.kinks.iter().map(|k| k.mass).sum()
    }

    pub fn cap_mass(&self) -> f64 {
        self.caps
            .iter()
            .map(|&(a, b)| match self.model {
                SurfaceModel::Sphere => mass_below(b) - mass_below(a),
                SurfaceModel::Torus => b - a,
            })
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.kink_mass() + self.cap_mass()
    }

    /// ω-mass of the part of a cell's coordinate range [lo, hi] inside caps.
    fn cap_overlap(&self, lo: f64, hi: f64) -> f64 {
        self.caps
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (a.max(lo), b.min(hi));
                if y <= x {
                    0.0
                } else {
                    match self.model {
                        SurfaceModel::Sphere => mass_below(y) - mass_below(x),
                        SurfaceModel::Torus => y - x,
                    }
                }
            })
            .sum()
    }

    /// The measure on free points: each kink as `per_kink` equally spaced
    /// points, caps as ω of each grid cell inside them, placed at the node.
    pub fn to_points(&self, grid: &SurfaceGrid, per_kink: usize) -> PointMeasure {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for k in &self.kinks {
            for j in 0..per_kink {
                let t = j as f64 / per_kink as f64;
                points.push(match self.model {
                    SurfaceModel::Sphere => {
                        let th = std::f64::consts::TAU * t;
                        let r = k.s.exp();
                        Point::sphere(r * th.cos(), r * th.sin())
                    }
                    SurfaceModel::Torus => Point::torus(k.s, t),
                });
                weights.push(k.mass / per_kink as f64);
            }
        }
        let cells = self.cap_cells(grid);
        for (i, w) in cells.weights.iter().enumerate() {
            if *w > 0.0 {
                points.push(grid.nodes[i]);
                weights.push(*w);
            }
        }
        PointMeasure { points, weights }
    }

    /// ω restricted to the caps, cell by cell (exact overlaps).
    fn cap_cells(&self, grid: &SurfaceGrid) -> DiscreteMeasure {
        let mut w = vec![0.0; grid.len()];
        if self.caps.is_empty() {
            return DiscreteMeasure { weights: w };
        }
        match &grid.layout {
            Layout::Sphere(l) => {
                let s_of = |u: f64| {
                    if u <= 0.0 {
                        f64::NEG_INFINITY
                    } else if u >= 1.0 {
                        f64::INFINITY
                    } else {
                        0.5 * (u / (1.0 - u)).ln()
                    }
                };
                let faces: Vec<f64> = l.u_faces.iter().map(|&u| s_of(u)).collect();
                w[l.south()] = self.cap_overlap(f64::NEG_INFINITY, faces[0]);
                w[l.north()] = self.cap_overlap(faces[l.bands], f64::INFINITY);
                for b in 0..l.bands {
                    let m = self.cap_overlap(faces[b], faces[b + 1]) / l.angles as f64;
                    for a in 0..l.angles {
                        w[l.node(b, a)] = m;
                    }
                }
            }
            Layout::Torus { n } => {
                let h = 1.0 / *n as f64;
                for ix in 0..*n {
                    let x = ix as f64 * h;
                    let mut m = 0.0;
                    // The column's x-range may wrap around 0.
                    for shift in [-1.0, 0.0, 1.0] {
                        m += self.cap_overlap(x - h / 2.0 + shift, x + h / 2.0 + shift);
                    }
                    for iy in 0..*n {
                        w[ix * n + iy] = m / *n as f64;
                    }
                }
            }
        }
        DiscreteMeasure { weights: w }
    }

    /// The measure aggregated to grid cells.
    pub fn to_grid(&self, grid: &SurfaceGrid) -> DiscreteMeasure {
        let mut w = self.cap_cells(grid).weights;
        let per = match &grid.layout {
            Layout::Sphere(l) => 4 * l.angles,
            Layout::Torus { n } => 4 * n,
        };
        let kinks = RadialProfile { caps: Vec::new(), ..self.clone() }.to_points(grid, per);
        for (p, m) in kinks.points.iter().zip(&kinks.weights) {
            w[grid.locate(p)] += m;
        }
        DiscreteMeasure { weights: w }
    }

    /// CSV of (s, V(s), obstacle(s)) on `samples` points of [lo, hi].
    pub fn csv(&self, lo: f64, hi: f64, samples: usize) -> String {
        let mut out = String::from("s,value,obstacle\n");
        for k in 0..samples {
            let s = lo + (hi - lo) * k as f64 / (samples.max(2) - 1) as f64;
            out.push_str(&format!("{s:.10},{:.12},{:.12}\n", self.value(s), self.obstacle(s)));
        }
        out
    }
}

/// Default range for sphere profile plots.
pub const PLOT_RANGE: f64 = 8.0;

/// D component in s; ends may be infinite.
type Interval = (f64, f64);

fn validate_intervals(d: &[Interval]) -> Result<()> {
    if d.is_empty() {
        return Err(Error::InvalidDomain("radial solve needs at least one interval".into()));
    }
    for (k, &(a, b)) in d.iter().enumerate() {
        if !(a < b) || a.is_nan() || b.is_nan() {
            return Err(Error::InvalidDomain(format!("bad interval ({a}, {b})")));
        }
        if k > 0 && a <= d[k - 1].1 {
            return Err(Error::InvalidDomain("intervals must be sorted and separated".into()));
        }
    }
    if d[0].0 == f64::NEG_INFINITY && d[d.len() - 1].1 == f64::INFINITY && d.len() == 1 {
        return Err(Error::InvalidDomain("hole covers the whole sphere".into()));
    }
    Ok(())
}

fn line_piece(lo: f64, hi: f64, slope: f64, intercept: f64) -> Piece {
    Piece { lo, hi, kind: PieceKind::Line { slope, intercept } }
}

/// Builds the profile for given D lines; `None` if the result is not convex.
fn assemble(d: &[Interval], lines: &[(f64, f64)]) -> Option<RadialProfile> {
    let mut pieces = Vec::new();
    let mut caps = Vec::new();
    let mut tangency = Vec::new();
    let at = |k: usize, s: f64| lines[k].0 * s + lines[k].1;
    // Gap before the first component.
    if d[0].0 > f64::NEG_INFINITY {
        let (x1, v) = (d[0].0, at(0, d[0].0));
        if v <= 0.0 {
            pieces.push(line_piece(f64::NEG_INFINITY, x1, 0.0, v));
        } else {
            let q = tangent_from_right(x1, v, f64::NEG_INFINITY)?;
            let u = mass_below(q);
            pieces.push(Piece { lo: f64::NEG_INFINITY, hi: q, kind: PieceKind::Cap });
            pieces.push(line_piece(q, x1, u, v - u * x1));
            caps.push((f64::NEG_INFINITY, q));
            tangency.push(q);
        }
    }
    for k in 0..d.len() {
        let (a, c) = d[k];
        pieces.push(line_piece(a, c, lines[k].0, lines[k].1));
        let next = d.get(k + 1).map(|i| i.0).unwrap_or(f64::INFINITY);
        if c == f64::INFINITY {
            break;
        }
        let v0 = at(k, c);
        if next == f64::INFINITY {
            if v0 <= c {
                pieces.push(line_piece(c, f64::INFINITY, 1.0, v0 - c));
            } else {
                let q = tangent_from_left(c, v0, f64::INFINITY)?;
                let u = mass_below(q);
                pieces.push(line_piece(c, q, u, v0 - u * c));
                pieces.push(Piece { lo: q, hi: f64::INFINITY, kind: PieceKind::Cap });
                caps.push((q, f64::INFINITY));
                tangency.push(q);
            }
            break;
        }
        let v1 = at(k + 1, next);
        let sigma = (v1 - v0) / (next - c);
        let chord_ok = if sigma > 0.0 && sigma < 1.0 {
            let s_star = 0.5 * (sigma / (1.0 - sigma)).ln();
            !(s_star > c && s_star < next) || v0 + sigma * (s_star - c) <= obstacle_b(s_star)
        } else {
            true
        };
        if chord_ok {
            pieces.push(line_piece(c, next, sigma, v0 - sigma * c));
        } else {
            let q1 = tangent_from_left(c, v0, next)?;
            let q2 = tangent_from_right(next, v1, c)?;
            if q2 < q1 {
                return None;
            }
            let (u1, u2) = (mass_below(q1), mass_below(q2));
            pieces.push(line_piece(c, q1, u1, v0 - u1 * c));
            pieces.push(Piece { lo: q1, hi: q2, kind: PieceKind::Cap });
            pieces.push(line_piece(q2, next, u2, v1 - u2 * next));
            caps.push((q1, q2));
            tangency.extend([q1, q2]);
        }
    }
    // Kinks at every finite break between two lines.
    let slope = |p: &Piece, s: f64| match p.kind {
        PieceKind::Line { slope, .. } => slope,
        _ => mass_below(s),
    };
    let mut kinks = Vec::new();
    for w in pieces.windows(2) {
        let s = w[0].hi;
        let jump = slope(&w[1], s) - slope(&w[0], s);
        if jump < -1e-12 {
            return None;
        }
        if jump > 1e-14 {
            kinks.push(Kink { s, mass: jump });
        }
    }
    let mut profile = RadialProfile { model: SurfaceModel::Sphere, pieces, kinks, caps, tangency, q: 0.0, energy: 0.0 };
    let mut e = 0.0;
    for p in &profile.pieces {
        if let PieceKind::Line { slope, intercept } = p.kind {
            e += (f_b(p.hi) - f_b(p.lo))
                - slope * (f_s(p.hi) - f_s(p.lo))
                - intercept * (mass_below(p.hi) - mass_below(p.lo));
        }
    }
    for k in &profile.kinks {
        e += k.mass * (obstacle_b(k.s) - profile.value(k.s));
    }
    profile.energy = e;
    Some(profile)
}

fn tangent_line(p: f64) -> (f64, f64) {
    let u = mass_below(p);
    (u, obstacle_b(p) - u * p)
}

fn golden(lo: f64, hi: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Equilibrium of a rotation-invariant hole given by its components in
/// s = log|z| (sorted, disjoint, ends may be ±∞).
pub fn sphere_radial_solve(d: &[Interval]) -> Result<RadialProfile> {
    validate_intervals(d)?;
    let mut lines: Vec<(f64, f64)> = d
        .iter()
        .map(|&(a, c)| {
            if a == f64::NEG_INFINITY {
                (0.0, 0.0)
            } else if c == f64::INFINITY {
                (1.0, 0.0)
            } else {
                tangent_line(0.5 * (a + c))
            }
        })
        .collect();
    let bounded: Vec<usize> = (0..d.len()).filter(|&k| d[k].0.is_finite() && d[k].1.is_finite()).collect();
    let energy_with = |lines: &[(f64, f64)]| assemble(d, lines).map(|p| p.energy).unwrap_or(f64::INFINITY);
    let passes = if bounded.len() > 1 { 8 } else { 1 };
    for _ in 0..passes {
        for &k in &bounded {
            let (a, c) = d[k];
            let (lo, hi) = (a - 6.0, c + 6.0);
            let f = |p: f64| {
                let mut l = lines.clone();
                l[k] = tangent_line(p);
                energy_with(&l)
            };
            // Coarse scan, then golden section around the best sample.
            let steps = 480;
            let mut best = (lo, f64::INFINITY);
            for j in 0..=steps {
                let p = lo + (hi - lo) * j as f64 / steps as f64;
                let v = f(p);
                if v < best.1 {
                    best = (p, v);
                }
            }
            let step = (hi - lo) / steps as f64;
            let p = golden(best.0 - step, best.0 + step, &f);
            lines[k] = tangent_line(p);
        }
    }
    assemble(d, &lines).ok_or_else(|| Error::Discretization("radial construction failed".into()))
}

/// Disk {|z| < r} centered at the origin.
pub fn disk_radial_solve(r: f64) -> Result<RadialProfile> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("disk radius {r} must be positive")));
    }
    sphere_radial_solve(&[(f64::NEG_INFINITY, r.ln())])
}

/// Annulus {r1 < |z| < r2}.
pub fn annulus_solve(r1: f64, r2: f64) -> Result<RadialProfile> {
    if !(r1 > 0.0 && r2 > r1 && r2.is_finite()) {
        return Err(Error::InvalidArgument(format!("annulus needs 0 < r1 < r2, got {r1}, {r2}")));
    }
    sphere_radial_solve(&[(r1.ln(), r2.ln())])
}

/// Symmetric annulus {r < |z| < 1/r}.
pub fn annulus_radial_solve(r: f64) -> Result<RadialProfile> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("annulus radius {r} must lie in (0, 1)")));
    }
    annulus_solve(r, 1.0 / r)
}

/// Quadratic coefficient of the torus local potential read off the discrete
/// operator: L(x²) = m/q at any node.
pub fn calibrated_q(grid: &SurfaceGrid, laplacian: &Laplacian) -> Result<f64> {
    if grid.model != SurfaceModel::Torus {
        return Err(Error::InvalidArgument("calibration is for the torus".into()));
    }
    let i = 0;
    let (cols, w) = laplacian.row(i);
    let x0 = grid.nodes[i].coords().0;
    let lx2: f64 = cols
        .iter()
        .zip(w)
        .map(|(&j, wj)| {
            let dx = crate::surface::wrap_half(grid.nodes[j].coords().0 - x0);
            wj * dx * dx
        })
        .sum();
    Ok(grid.cell_mass[i] / lx2)
}

/// Strip D = {|x| < r/2} on the torus (mod 1), with local potential q·x².
pub fn torus_strip_solve(r: f64, q: f64) -> Result<RadialProfile> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("strip parameter {r} must lie in (0, 1)")));
    }
    if !(q > 0.0) {
        return Err(Error::InvalidArgument("quadratic coefficient must be positive".into()));
    }
    let half = r / 2.0;
    // Mass per unit slope jump: U″ = 2q(ν − ω) with q = π.
    let per = 2.0 * q;
    let (pieces, kinks, caps, tangency, energy);
    if r < 0.5 {
        // U = −q x² on D, −q(x − r)² up to the cap [r, 1 − r].
        pieces = vec![
            Piece { lo: 0.0, hi: half, kind: PieceKind::Quadratic { center: 0.0, offset: 0.0 } },
            Piece { lo: half, hi: r, kind: PieceKind::Quadratic { center: r, offset: 0.0 } },
            Piece { lo: r, hi: 1.0 - r, kind: PieceKind::Cap },
            Piece { lo: 1.0 - r, hi: 1.0 - half, kind: PieceKind::Quadratic { center: 1.0 - r, offset: 0.0 } },
            Piece { lo: 1.0 - half, hi: 1.0, kind: PieceKind::Quadratic { center: 1.0, offset: 0.0 } },
        ];
        // Slope jumps from −2q·half to 2q·half.
        let m = 4.0 * q * half / per;
        kinks = vec![Kink { s: half, mass: m }, Kink { s: 1.0 - half, mass: m }];
        caps = vec![(r, 1.0 - r)];
        tangency = vec![r, 1.0 - r];
        // ∫−U dω over D and gaps plus kink terms.
        energy = 4.0 * q * half.powi(3) / 3.0 + 2.0 * m * q * half * half;
    } else {
        let c0 = q * half * half - q * (half - 0.5).powi(2);
        pieces = vec![
            Piece { lo: 0.0, hi: half, kind: PieceKind::Quadratic { center: 0.0, offset: c0 } },
            Piece { lo: half, hi: 1.0 - half, kind: PieceKind::Quadratic { center: 0.5, offset: 0.0 } },
            Piece { lo: 1.0 - half, hi: 1.0, kind: PieceKind::Quadratic { center: 1.0, offset: c0 } },
        ];
        let m = (2.0 * q * half + 2.0 * q * (0.5 - half)) / per;
        debug_assert!((m - 0.5).abs() < 1e-12);
        kinks = vec![Kink { s: half, mass: m }, Kink { s: 1.0 - half, mass: m }];
        caps = Vec::new();
        tangency = vec![0.5];
        let d_part = 2.0 * (q * half.powi(3) / 3.0 - c0 * half);
        let gap_part = 2.0 * q * (0.5 - half).powi(3) / 3.0;
        energy = d_part + gap_part + 2.0 * m * q * (half - 0.5).powi(2);
    }
    Ok(RadialProfile { model: SurfaceModel::Torus, pieces, kinks, caps, tangency, q, energy })
}

/// Closed-form energy of the strip equilibrium for q = π and r < ½.
pub fn torus_strip_energy_small(r: f64) -> f64 {
    2.0 / 3.0 * PI * r.powi(3)
}
