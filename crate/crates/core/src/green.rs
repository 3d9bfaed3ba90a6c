//! Green functions of (X, ω) and their discretization on grids.
//!
//! Normalization: dd^c = (1/2π)Δ in any holomorphic chart, so that
//! dd^c log|z| = δ_0. The Green function satisfies dd^c G(x,·) = δ_x − ω and
//! has zero ω-mean.
//!
//! Sphere: G(z,w) = log|z−w| − ½log(1+|z|²) − ½log(1+|w|²) + ½, i.e. the log
//! of half the chordal distance plus ½.
//!
//! Torus (square lattice, τ = i): G(z) = log|θ₁(πz)| − πy² + C with the
//! product expansion of θ₁ truncated after K factors. The product terms decay
//! like e^{−2π(n−½)}, so K = 16 is already far below double precision. With C
//! chosen for zero mean the expression simplifies to
//! log 2 − π/6 + ½log(sin²πx + sinh²πy) − πy²
//!   + ½Σₙ log|1 − e^{−2πn}e^{2πiz}|² |1 − e^{−2πn}e^{−2πiz}|².

use std::f64::consts::{LN_2, PI, TAU};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::surface::{distance, half_chord, wrap_half, Ext, Layout, Point, SurfaceGrid, SurfaceModel};

/// Smallest admissible torus truncation.
pub const MIN_TORUS_TERMS: usize = 16;

/// ϱ(x,x) = lim (G − log dist) on the sphere: ½ − log(2R) with R = 1/(2√π).
pub const SPHERE_SELF_SMOOTH: f64 = 0.5 + 0.5 * 1.144_729_885_849_400_2;

pub fn green_sphere(z: Ext, w: Ext) -> f64 {
    let hc = half_chord(z, w);
    if hc == 0.0 {
        f64::NEG_INFINITY
    } else {
        hc.ln() + 0.5
    }
}

/// Torus Green function of the displacement (dx, dy).
pub fn green_torus_displacement(dx: f64, dy: f64, terms: usize) -> f64 {
    let x = wrap_half(dx);
    let y = wrap_half(dy);
    let s = (PI * x).sin();
    let sh = (PI * y).sinh();
    let base = s * s + sh * sh;
    if base == 0.0 {
        return f64::NEG_INFINITY;
    }
    let c2 = (TAU * x).cos();
    let ep = (-TAU * y).exp();
    let em = (TAU * y).exp();
    let mut tail = 0.0;
    for n in 1..=terms {
        let a = (-TAU * n as f64).exp();
        let t1 = a * ep * (a * ep - 2.0 * c2);
        let t2 = a * em * (a * em - 2.0 * c2);
        tail += t1.ln_1p() + t2.ln_1p();
    }
    LN_2 - PI / 6.0 + 0.5 * base.ln() - PI * y * y + 0.5 * tail
}

pub fn green_torus(z: &Point, w: &Point, terms: usize) -> f64 {
    match (z, w) {
        (Point::Torus { x: x1, y: y1 }, Point::Torus { x: x2, y: y2 }) => {
            green_torus_displacement(x1 - x2, y1 - y2, terms)
        }
        _ => panic!("green_torus needs torus points"),
    }
}

/// ϱ(x,x) on the torus: log 2 − π/6 + log π + 2Σ log(1 − e^{−2πn}).
pub fn torus_self_smooth(terms: usize) -> f64 {
    let l: f64 = (1..=terms).map(|n| (-(-TAU * n as f64).exp()).ln_1p()).sum();
    LN_2 - PI / 6.0 + PI.ln() + 2.0 * l
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenKernel {
    pub model: SurfaceModel,
    /// Product truncation for the torus; ignored on the sphere.
    pub torus_terms: usize,
}

impl GreenKernel {
    pub fn sphere() -> Self {
        GreenKernel { model: SurfaceModel::Sphere, torus_terms: 0 }
    }

    pub fn torus(terms: usize) -> Result<Self> {
        if terms < MIN_TORUS_TERMS {
            return Err(Error::InvalidArgument(format!("torus truncation {terms} below minimum {MIN_TORUS_TERMS}")));
        }
        Ok(GreenKernel { model: SurfaceModel::Torus, torus_terms: terms })
    }

    pub fn for_model(model: SurfaceModel, terms: usize) -> Result<Self> {
        match model {
            SurfaceModel::Sphere => Ok(Self::sphere()),
            SurfaceModel::Torus => Self::torus(terms),
        }
    }

    pub fn eval(&self, p: &Point, q: &Point) -> f64 {
        match (p, q) {
            (Point::Sphere(a), Point::Sphere(b)) => green_sphere(*a, *b),
            _ => green_torus(p, q, self.torus_terms),
        }
    }

    /// Limit of G − log dist on the diagonal.
    pub fn self_smooth(&self) -> f64 {
        match self.model {
            SurfaceModel::Sphere => SPHERE_SELF_SMOOTH,
            SurfaceModel::Torus => torus_self_smooth(self.torus_terms),
        }
    }

    /// ϱ(p,q) = G(p,q) − log dist(p,q), continuous across the diagonal.
    pub fn smooth_part(&self, p: &Point, q: &Point) -> f64 {
        let d = distance(self.model, p, q);
        if d == 0.0 {
            self.self_smooth()
        } else {
            self.eval(p, q) - d.ln()
        }
    }

    /// Regularized self-interaction of a cell of ω-mass `m`: log ρ + ϱ(x,x)
    /// with ρ = √(m/π) the radius of a disk of the same area.
    pub fn diagonal(&self, m: f64) -> f64 {
        0.5 * (m / PI).ln() + self.self_smooth()
    }
}

enum Repr {
    Sphere(SphereKernel),
    Torus(TorusKernel),
    Dense(Vec<f64>),
}

struct SphereKernel {
    bands: usize,
    angles: usize,
    /// G between band nodes, indexed [bi][bj][angle difference].
    table: Vec<f64>,
    /// Real spectra of the table rows over the angle difference.
    spectra: Vec<f64>,
    south: Vec<f64>,
    north: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

struct TorusKernel {
    n: usize,
    table: Vec<f64>,
    spectrum: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

/// Symmetric kernel matrix G_ij over the nodes of a grid.
///
/// Grids built here are invariant under rotations (sphere) or translations
/// (torus), so the matrix is stored as a table over node differences and
/// products are evaluated by FFT convolution. Entries are bit-for-bit
/// symmetric.
pub struct KernelMatrix {
    pub model: SurfaceModel,
    pub torus_terms: usize,
    n: usize,
    diag: f64,
    repr: Repr,
}

pub fn kernel_matrix(grid: &SurfaceGrid, kernel: &GreenKernel) -> Result<KernelMatrix> {
    if grid.model != kernel.model {
        return Err(Error::InvalidArgument(format!(
            "kernel for the {} applied to a {} grid",
            kernel.model.name(),
            grid.model.name()
        )));
    }
    let diag = kernel.diagonal(grid.cell_mass[0]);
    let repr = match &grid.layout {
        Layout::Sphere(l) => {
            let (bands, angles) = (l.bands, l.angles);
            let phi: Vec<f64> = (0..bands).map(|b| 2.0 * l.band_u(b).sqrt().asin()).collect();
            let half = angles / 2;
            let sin_half: Vec<f64> = (0..=half).map(|d| (0.5 * d as f64 * l.dtheta()).sin().powi(2)).collect();
            let mut table = vec![0.0; bands * bands * angles];
            table.par_chunks_mut(bands * angles).enumerate().for_each(|(bi, rows)| {
                for bj in 0..bands {
                    let row = &mut rows[bj * angles..(bj + 1) * angles];
                    // Same arithmetic for (bi,bj) and (bj,bi) keeps the table symmetric.
                    let (p, q) = if bi <= bj { (phi[bi], phi[bj]) } else { (phi[bj], phi[bi]) };
                    let a = (0.5 * (p - q)).sin().powi(2);
                    let c = p.sin() * q.sin();
                    for d in 0..=half {
                        let hc2 = a + c * sin_half[d];
                        let g = if hc2 == 0.0 { diag } else { 0.5 * hc2.ln() + 0.5 };
                        row[d] = g;
                        row[(angles - d) % angles] = g;
                    }
                }
            });
            let mut planner = FftPlanner::new();
            let fft = planner.plan_fft_forward(angles);
            let ifft = planner.plan_fft_inverse(angles);
            let mut spectra = vec![0.0; table.len()];
            let mut buf = vec![Complex64::new(0.0, 0.0); angles];
            for (row, out) in table.chunks(angles).zip(spectra.chunks_mut(angles)) {
                for (b, &v) in buf.iter_mut().zip(row) {
                    *b = Complex64::new(v, 0.0);
                }
                fft.process(&mut buf);
                for (o, b) in out.iter_mut().zip(&buf) {
                    *o = b.re;
                }
            }
            // G from a pole is ½ log u + ½, radial, so the pole rows take the
            // exact band average instead of the value at the band center.
            let avg = |a: f64, b: f64| {
                let f = |u: f64| if u > 0.0 { u * u.ln() - u } else { 0.0 };
                0.5 * (f(b) - f(a)) / (b - a) + 0.5
            };
            let faces = &l.u_faces;
            let south = (0..bands).map(|b| avg(faces[b], faces[b + 1])).collect();
            let north = (0..bands).map(|b| avg(1.0 - faces[b + 1], 1.0 - faces[b])).collect();
            Repr::Sphere(SphereKernel { bands, angles, table, spectra, south, north, fft, ifft })
        }
        Layout::Torus { n } => {
            let n = *n;
            let terms = kernel.torus_terms;
            let mut table = vec![0.0; n * n];
            let h = 1.0 / n as f64;
            table.par_chunks_mut(n).enumerate().for_each(|(dx, row)| {
                for (dy, v) in row.iter_mut().enumerate() {
                    // Evaluate at the canonical representative of ±(dx,dy).
                    let (mx, my) = ((n - dx) % n, (n - dy) % n);
                    let (ex, ey) = if (dx, dy) <= (mx, my) { (dx, dy) } else { (mx, my) };
                    *v = if ex == 0 && ey == 0 {
                        diag
                    } else {
                        green_torus_displacement(ex as f64 * h, ey as f64 * h, terms)
                    };
                }
            });
            let mut planner = FftPlanner::new();
            let fft = planner.plan_fft_forward(n);
            let ifft = planner.plan_fft_inverse(n);
            let mut buf: Vec<Complex64> = table.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft2(&mut buf, n, &fft);
            let spectrum = buf.iter().map(|c| c.re).collect();
            Repr::Torus(TorusKernel { n, table, spectrum, fft, ifft })
        }
    };
    Ok(KernelMatrix { model: grid.model, torus_terms: kernel.torus_terms, n: grid.len(), diag, repr })
}

fn fft2(buf: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    for row in buf.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = buf[r * n + c];
        }
        fft.process(&mut col);
        for r in 0..n {
            buf[r * n + c] = col[r];
        }
    }
}

impl KernelMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn diagonal_value(&self) -> f64 {
        self.diag
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.repr {
            Repr::Dense(d) => {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                d[upper_index(self.n, a, b)]
            }
            Repr::Torus(t) => {
                let n = t.n;
                let dx = (i / n + n - j / n) % n;
                let dy = (i % n + n - j % n) % n;
                t.table[dx * n + dy]
            }
            Repr::Sphere(s) => {
                let last = self.n - 1;
                match (i, j) {
                    _ if i == j => self.diag,
                    (0, k) | (k, 0) if k == last => 0.5,
                    (0, k) | (k, 0) => s.south[(k - 1) / s.angles],
                    (l, k) | (k, l) if l == last => s.north[(k - 1) / s.angles],
                    _ => {
                        let (bi, ai) = ((i - 1) / s.angles, (i - 1) % s.angles);
                        let (bj, aj) = ((j - 1) / s.angles, (j - 1) % s.angles);
                        let d = (ai + s.angles - aj) % s.angles;
                        s.table[(bi * s.bands + bj) * s.angles + d]
                    }
                }
            }
        }
    }

    /// Column j (equal to row j).
    pub fn column(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.column_into(j, &mut out);
        out
    }

    pub fn column_into(&self, j: usize, out: &mut [f64]) {
        match &self.repr {
            Repr::Dense(_) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = self.get(i, j);
                }
            }
            Repr::Torus(t) => {
                let n = t.n;
                let (jx, jy) = (j / n, j % n);
                for ix in 0..n {
                    let row = &t.table[((ix + n - jx) % n) * n..][..n];
                    let dst = &mut out[ix * n..(ix + 1) * n];
                    for iy in 0..n {
                        dst[iy] = row[(iy + n - jy) % n];
                    }
                }
            }
            Repr::Sphere(s) => {
                let last = self.n - 1;
                let a_n = s.angles;
                if j == 0 || j == last {
                    let pole = if j == 0 { &s.south } else { &s.north };
                    for b in 0..s.bands {
                        out[1 + b * a_n..1 + (b + 1) * a_n].fill(pole[b]);
                    }
                    out[j] = self.diag;
                    out[last - j] = 0.5;
                    return;
                }
                let (bj, aj) = ((j - 1) / a_n, (j - 1) % a_n);
                out[0] = s.south[bj];
                out[last] = s.north[bj];
                for bi in 0..s.bands {
                    let row = &s.table[(bi * s.bands + bj) * a_n..][..a_n];
                    let dst = &mut out[1 + bi * a_n..1 + (bi + 1) * a_n];
                    for ai in 0..a_n {
                        dst[ai] = row[(ai + a_n - aj) % a_n];
                    }
                }
            }
        }
    }

    /// G·w.
    pub fn matvec(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.n);
        match &self.repr {
            Repr::Dense(_) => (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * w[j]).sum()).collect(),
            Repr::Torus(t) => {
                let n = t.n;
                let mut buf: Vec<Complex64> = w.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                fft2(&mut buf, n, &t.fft);
                for (b, k) in buf.iter_mut().zip(&t.spectrum) {
                    *b *= *k;
                }
                fft2(&mut buf, n, &t.ifft);
                let scale = 1.0 / (n * n) as f64;
                buf.iter().map(|c| c.re * scale).collect()
            }
            Repr::Sphere(s) => {
                let (nb, na) = (s.bands, s.angles);
                let last = self.n - 1;
                let mut spec = vec![Complex64::new(0.0, 0.0); nb * na];
                for b in 0..nb {
                    let row = &mut spec[b * na..(b + 1) * na];
                    for (r, &v) in row.iter_mut().zip(&w[1 + b * na..1 + (b + 1) * na]) {
                        *r = Complex64::new(v, 0.0);
                    }
                    s.fft.process(row);
                }
                let mut out = vec![0.0; self.n];
                let mut acc = vec![Complex64::new(0.0, 0.0); na];
                let scale = 1.0 / na as f64;
                for bi in 0..nb {
                    acc.fill(Complex64::new(0.0, 0.0));
                    for bj in 0..nb {
                        let k = &s.spectra[(bi * nb + bj) * na..][..na];
                        let x = &spec[bj * na..(bj + 1) * na];
                        for ((a, &kk), &xx) in acc.iter_mut().zip(k).zip(x) {
                            *a += xx * kk;
                        }
                    }
                    s.ifft.process(&mut acc);
                    let pole = s.south[bi] * w[0] + s.north[bi] * w[last];
                    for (o, a) in out[1 + bi * na..1 + (bi + 1) * na].iter_mut().zip(&acc) {
                        *o = a.re * scale + pole;
                    }
                }
                let mut south = self.diag * w[0] + 0.5 * w[last];
                let mut north = self.diag * w[last] + 0.5 * w[0];
                for b in 0..nb {
                    let band_mass: f64 = w[1 + b * na..1 + (b + 1) * na].iter().sum();
                    south += s.south[b] * band_mass;
                    north += s.north[b] * band_mass;
                }
                out[0] = south;
                out[last] = north;
                out
            }
        }
    }

    /// wᵀ G v.
    pub fn bilinear(&self, w: &[f64], v: &[f64]) -> f64 {
        self.matvec(v).iter().zip(w).map(|(a, b)| a * b).sum()
    }

    /// Upper triangle, row-major.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * (self.n + 1) / 2);
        let mut col = vec![0.0; self.n];
        for i in 0..self.n {
            self.column_into(i, &mut col);
            out.extend_from_slice(&col[i..]);
        }
        out
    }

    /// Writes the binary cache: three little-endian u64 (model id, node
    /// count, torus truncation) followed by the upper triangle as
    /// little-endian f64, row-major.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        for v in [self.model.id(), self.n as u64, self.torus_terms as u64] {
            f.write_all(&v.to_le_bytes())?;
        }
        for v in self.upper_triangle() {
            f.write_all(&v.to_le_bytes())?;
        }
        f.flush()?;
        Ok(())
    }

    /// Reads a cache written by [`KernelMatrix::write_cache`], checking its key.
    pub fn read_cache(path: &Path, model: SurfaceModel, n: usize, torus_terms: usize) -> Result<Self> {
        let mut f = BufReader::new(File::open(path)?);
        let mut word = [0u8; 8];
        let mut header = [0u64; 3];
        for h in &mut header {
            f.read_exact(&mut word)?;
            *h = u64::from_le_bytes(word);
        }
        if header != [model.id(), n as u64, torus_terms as u64] {
            return Err(Error::InvalidArgument(format!(
                "kernel cache key {header:?} does not match ({}, {n}, {torus_terms})",
                model.id()
            )));
        }
        let len = n * (n + 1) / 2;
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            f.read_exact(&mut word)?;
            data.push(f64::from_le_bytes(word));
        }
        let diag = if n > 0 { data[0] } else { 0.0 };
        Ok(KernelMatrix { model, torus_terms, n, diag, repr: Repr::Dense(data) })
    }
}

fn upper_index(n: usize, i: usize, j: usize) -> usize {
    i * n - i * (i + 1) / 2 + j
}
