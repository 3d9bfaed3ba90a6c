//! Roots of complex polynomials on the Riemann sphere.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::surface::Ext;

/// Leading coefficients below this in modulus are treated as zero; the
/// corresponding roots sit at ∞.
pub const ZERO_COEFF: f64 = 1e-300;

/// Roots of Σ c_k z^k with multiplicity, degree = c.len() − 1. Returns
/// `None` when the eigenvalue iteration fails.
pub fn roots(c: &[Complex64]) -> Option<Vec<Ext>> {
    let n = c.len().checked_sub(1)?;
    let mut top = n;
    while top > 0 && c[top].norm() < ZERO_COEFF {
        top -= 1;
    }
    let mut out = vec![Ext::Infinity; n - top];
    if top == 0 {
        return if c[0].norm() < ZERO_COEFF { None } else { Some(out) };
    }
    // Exact zeros at the origin.
    let mut low = 0;
    while c[low].norm() < ZERO_COEFF {
        low += 1;
    }
    out.extend(std::iter::repeat_n(Ext::Finite(Complex64::new(0.0, 0.0)), low));
    let coeffs = &c[low..=top];
    let m = coeffs.len() - 1;
    if m == 0 {
        return Some(out);
    }
    // Highly symmetric companions (z^n − 1 is a cyclic permutation) can stall
    // the unshifted QR; solving p(w + σ) breaks the symmetry.
    let eig = companion_eigenvalues(coeffs).or_else(|| {
        let sigma = Complex64::new(0.0123, 0.0071);
        Some(companion_eigenvalues(&taylor_shift(coeffs, sigma))?.into_iter().map(|w| w + sigma).collect())
    })?;
    for z in eig {
        let z = newton(coeffs, z);
        if !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
        out.push(Ext::Finite(z));
    }
    Some(out)
}

fn companion_eigenvalues(coeffs: &[Complex64]) -> Option<Vec<Complex64>> {
    let m = coeffs.len() - 1;
    let lead = coeffs[m];
    let mut a = DMatrix::<Complex64>::zeros(m, m);
    for j in 0..m {
        a[(0, j)] = -coeffs[m - 1 - j] / lead;
    }
    for i in 1..m {
        a[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    balance(&mut a);
    let schur = Schur::try_new(a, 1e-15, 10_000)?;
    Some(schur.eigenvalues()?.iter().cloned().collect())
}

/// Coefficients of p(w + σ) by repeated synthetic division.
fn taylor_shift(c: &[Complex64], sigma: Complex64) -> Vec<Complex64> {
    let mut c = c.to_vec();
    let n = c.len() - 1;
    for k in 0..n {
        for j in (k..n).rev() {
            let add = c[j + 1] * sigma;
            c[j] += add;
        }
    }
    c
}

/// Parlett–Reinsch diagonal scaling by powers of 2.
fn balance(a: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].norm();
                    r += a[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let (mut cc, mut rr) = (c, r);
            while cc < rr / 2.0 {
                cc *= 2.0;
                rr /= 2.0;
                f *= 2.0;
            }
            while cc >= rr * 2.0 {
                cc /= 2.0;
                rr *= 2.0;
                f /= 2.0;
            }
            if (cc + rr) < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

fn eval(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &ck in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + ck;
    }
    (p, dp)
}

/// One Newton step, kept only if it lowers |p|.
fn newton(c: &[Complex64], z: Complex64) -> Complex64 {
    let (p, dp) = eval(c, z);
    if dp.norm() == 0.0 {
        return z;
    }
    let w = z - p / dp;
    if eval(c, w).0.norm() < p.norm() {
        w
    } else {
        z
    }
}

/// |s(z)| / (‖a‖·(1+|z|²)^{n/2}) where c_k = a_k·√binom(n,k): the
/// Fubini–Study size of s at z relative to its coefficient norm. At most 1.
pub fn fs_residual(c: &[Complex64], a_norm: f64, z: Ext) -> f64 {
    let n = c.len() - 1;
    match z {
        Ext::Infinity => c[n].norm() / a_norm,
        Ext::Finite(z) if z.norm() <= 1.0 => eval(c, z).0.norm() / (a_norm * (1.0 + z.norm_sqr()).powf(n as f64 / 2.0)),
        Ext::Finite(z) => {
            let w = 1.0 / z;
            let rev: Vec<Complex64> = c.iter().rev().cloned().collect();
            eval(&rev, w).0.norm() / (a_norm * (1.0 + w.norm_sqr()).powf(n as f64 / 2.0))
        }
    }
}

/// Binomial coefficients of degree n as f64.
pub fn binomials(n: usize) -> Vec<f64> {
    let mut b = vec![1.0; n + 1];
    for k in 1..=n {
        b[k] = b[k - 1] * (n + 1 - k) as f64 / k as f64;
    }
    b
}
