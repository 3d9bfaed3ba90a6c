//! Discrete dd^c operator.
//!
//! (Lφ)_i = Σ_j w_ij (φ_j − φ_i) with symmetric weights, so rows sum to zero
//! and Σ_i (Lφ)_i = 0 for every φ (discrete Stokes). The weights are finite
//! volume fluxes in a conformal chart, calibrated so that L applied to a local
//! potential of ω returns the cell masses exactly.
//!
//! Sphere: the chart is (s, θ) with s = log|z|, where dd^c = (1/2π)Δ_{s,θ}.
//! Radial faces at u ≤ ½ are calibrated on b = ½log(1+|z|²), faces at u > ½
//! on b − log|z| (the potential in the chart at ∞). The grid is symmetric
//! under z ↦ 1/z, so both calibrations agree on the equator and every node
//! sees a single consistent local potential.
//!
//! Torus: five-point stencil with weight 1/2π; the local potential is π|x|²
//! along any axis, πx² in one variable.

use std::f64::consts::TAU;

use crate::surface::{wrap_half, Layout, Point, SurfaceGrid};

#[derive(Clone, Debug)]
pub struct Laplacian {
    pub offsets: Vec<usize>,
    pub cols: Vec<usize>,
    pub weights: Vec<f64>,
    /// Row weight sums.
    pub diag: Vec<f64>,
}

fn s_of_u(u: f64) -> f64 {
    0.5 * (u / (1.0 - u)).ln()
}

/// b = ½log(1+|z|²) as a function of u.
fn b_south(u: f64) -> f64 {
    -0.5 * (1.0 - u).ln()
}

/// b − log|z| as a function of u.
fn b_north(u: f64) -> f64 {
    -0.5 * u.ln()
}

impl Laplacian {
    pub fn for_grid(grid: &SurfaceGrid) -> Self {
        let n = grid.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        match &grid.layout {
            Layout::Torus { .. } => {
                let w = 1.0 / TAU;
                for (i, nb) in grid.neighbors.iter().enumerate() {
                    rows[i] = nb.iter().map(|&j| (j, w)).collect();
                }
            }
            Layout::Sphere(l) => {
                let dth = l.dtheta();
                let frac = dth / TAU;
                let node_u = |i: usize| -> f64 {
                    match l.band_angle(i) {
                        Some((b, _)) => l.band_u(b),
                        None if i == l.south() => 0.0,
                        None => 1.0,
                    }
                };
                let radial = |lower: usize, upper: usize, uf: f64| -> f64 {
                    let (ul, uu) = (node_u(lower), node_u(upper));
                    if uf <= 0.5 {
                        frac * uf / (b_south(uu) - b_south(ul))
                    } else {
                        frac * (1.0 - uf) / (b_north(ul) - b_north(uu))
                    }
                };
                let add = |i: usize, j: usize, w: f64, rows: &mut Vec<Vec<(usize, f64)>>| {
                    rows[i].push((j, w));
                    rows[j].push((i, w));
                };
                for b in 0..=l.bands {
                    for a in 0..l.angles {
                        let lower = if b == 0 { l.south() } else { l.node(b - 1, a) };
                        let upper = if b == l.bands { l.north() } else { l.node(b, a) };
                        add(lower, upper, radial(lower, upper, l.u_faces[b]), &mut rows);
                    }
                }
                for b in 0..l.bands {
                    let w = (s_of_u(l.u_faces[b + 1]) - s_of_u(l.u_faces[b])) / (TAU * dth);
                    for a in 0..l.angles {
                        add(l.node(b, a), l.node(b, (a + 1) % l.angles), w, &mut rows);
                    }
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        let mut diag = Vec::with_capacity(n);
        offsets.push(0);
        for row in rows {
            diag.push(row.iter().map(|(_, w)| w).sum());
            for (j, w) in row {
                cols.push(j);
                weights.push(w);
            }
            offsets.push(cols.len());
        }
        Laplacian { offsets, cols, weights, diag }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.cols[r.clone()], &self.weights[r])
    }

    /// Σ_j w_ij φ_j.
    #[inline]
    pub fn neighbor_sum(&self, i: usize, phi: &[f64]) -> f64 {
        let (c, w) = self.row(i);
        c.iter().zip(w).map(|(&j, &wj)| wj * phi[j]).sum()
    }

    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.neighbor_sum(i, phi) - self.diag[i] * phi[i]).collect()
    }

    /// Solves Lu = f by Jacobi-preconditioned conjugate gradients. The
    /// mean of f is removed first (constants span the kernel of L); `guess`
    /// warm-starts. Stops at relative residual `tol`.
    pub fn solve(&self, f: &[f64], guess: Option<&[f64]>, tol: f64) -> Vec<f64> {
        let n = self.len();
        let mean = f.iter().sum::<f64>() / n as f64;
        // A = −L is positive semidefinite; solve Au = −f.
        let b: Vec<f64> = f.iter().map(|x| mean - x).collect();
        let neg_apply = |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                out[i] = self.diag[i] * x[i] - self.neighbor_sum(i, x);
            }
        };
        let mut u = guess.map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; n]);
        let mut au = vec![0.0; n];
        neg_apply(&u, &mut au);
        let mut r: Vec<f64> = b.iter().zip(&au).map(|(a, c)| a - c).collect();
        let bnorm = b.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(a, d)| a / d).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; n];
        for _ in 0..20 * n {
            if r.iter().map(|x| x * x).sum::<f64>().sqrt() <= tol * bnorm {
                break;
            }
            neg_apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                u[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
                z[i] = r[i] / self.diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        u
    }

    /// Solves (Lφ)_i + m_i = 0 on `free` nodes with φ = ψ elsewhere, by
    /// Jacobi-preconditioned CG. Every component of `free` must touch a fixed
    /// node.
    pub fn solve_dirichlet(&self, free: &[bool], psi: &[f64], m: &[f64], guess: &[f64], tol: f64) -> Vec<f64> {
        let n = self.len();
        let mut phi: Vec<f64> = (0..n).map(|i| if free[i] { guess[i] } else { psi[i] }).collect();
        // A = D − W restricted to free nodes; b = m + W·ψ over fixed neighbours.
        let apply = |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                if free[i] {
                    let (c, w) = self.row(i);
                    let mut s = self.diag[i] * x[i];
                    for (&j, &wj) in c.iter().zip(w) {
                        if free[j] {
                            s -= wj * x[j];
                        }
                    }
                    out[i] = s;
                } else {
                    out[i] = 0.0;
                }
            }
        };
        let mut b = vec![0.0; n];
        for i in 0..n {
            if free[i] {
                let (c, w) = self.row(i);
                b[i] = m[i] + c.iter().zip(w).filter(|(&j, _)| !free[j]).map(|(&j, &wj)| wj * psi[j]).sum::<f64>();
            }
        }
        let mut x: Vec<f64> = (0..n).map(|i| if free[i] { phi[i] } else { 0.0 }).collect();
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        let mut r: Vec<f64> = (0..n).map(|i| b[i] - ax[i]).collect();
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let mut z: Vec<f64> = (0..n).map(|i| r[i] / self.diag[i]).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; n];
        for _ in 0..20 * n {
            if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= tol * bnorm {
                break;
            }
            apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
                z[i] = r[i] / self.diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        for i in 0..n {
            if free[i] {
                phi[i] = x[i];
            }
        }
        phi
    }

    /// L applied to the local potential of ω centered at node i; equals the
    /// cell mass of i up to rounding.
    pub fn local_potential_image(&self, grid: &SurfaceGrid, i: usize) -> f64 {
        let pot = |j: usize| -> f64 {
            match (&grid.layout, &grid.nodes[j], &grid.nodes[i]) {
                (Layout::Torus { .. }, Point::Torus { x, y }, Point::Torus { x: xi, y: yi }) => {
                    let (dx, dy) = (wrap_half(x - xi), wrap_half(y - yi));
                    0.5 * std::f64::consts::PI * (dx * dx + dy * dy)
                }
                (Layout::Sphere(_), Point::Sphere(zj), Point::Sphere(zi)) => {
                    if zi.u() <= 0.5 {
                        b_south(zj.u())
                    } else {
                        b_north(zj.u())
                    }
                }
                _ => unreachable!(),
            }
        };
        let (c, w) = self.row(i);
        c.iter().zip(w).map(|(&j, &wj)| wj * (pot(j) - pot(i))).sum()
    }
}
