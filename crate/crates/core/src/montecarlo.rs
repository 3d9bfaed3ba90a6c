//! Random sections of O(n) on the sphere conditioned to avoid a hole.
//!
//! A section is s(z) = Σ a_k √binom(n,k) z^k with a_k i.i.d. standard complex
//! Gaussians, which is the Fubini–Study invariant ensemble. Trials are seeded
//! by a counter scheme: trial `j` of degree `n` uses ChaCha8 seeded with the
//! root seed on stream `(n << 40) | j`, so every trial is reproducible on its
//! own and aggregation order never depends on thread scheduling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly;
use crate::potential::{DiscreteMeasure, PointMeasure};
use crate::surface::{DomainSpec, Ext, Point, SurfaceGrid, SurfaceModel};
use crate::transport::{w1_grid, w1_grid_points};

/// Points this close to bD count as inside the hole.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Largest accepted root residual after refinement.
pub const ROOT_RESIDUAL: f64 = 1e-8;
/// Default degree cap.
pub const MAX_DEGREE: usize = 14;
/// Trials per parallel work unit.
const CHUNK: u64 = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct RandomSection {
    pub degree: usize,
    /// The Gaussian a_k, before the binomial weights.
    pub a: Vec<Complex64>,
}

impl RandomSection {
    /// Polynomial coefficients c_k = a_k √binom(n,k), lowest degree first.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let b = poly::binomials(self.degree);
        self.a.iter().zip(&b).map(|(a, b)| a * b.sqrt()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.a.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSet {
    pub points: Vec<Ext>,
}

impl ZeroSet {
    /// ⟦Z_s⟧: mass 1/n at each zero.
    pub fn empirical(&self) -> PointMeasure {
        PointMeasure::uniform(self.points.iter().map(|z| Point::Sphere(*z)).collect())
    }
}

pub fn trial_rng(seed: u64, degree: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((degree as u64) << 40) | trial);
    rng
}

pub fn sample_section<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<RandomSection> {
    if n == 0 {
        return Err(Error::InvalidArgument("section degree must be at least 1".into()));
    }
    loop {
        let a: Vec<Complex64> = (0..=n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        if a.iter().any(|c| c.norm_sqr() > 0.0) {
            return Ok(RandomSection { degree: n, a });
        }
    }
}

/// Zeros of the section, or `None` when the root finder fails or a root
/// misses the residual threshold. Callers resample and count the failure.
pub fn roots(section: &RandomSection) -> Option<ZeroSet> {
    let c = section.coefficients();
    let pts = poly::roots(&c)?;
    let norm = section.norm();
    if pts.len() != section.degree || pts.iter().any(|z| poly::fs_residual(&c, norm, *z) > ROOT_RESIDUAL) {
        return None;
    }
    Some(ZeroSet { points: pts })
}

/// Closed-hole membership for a sphere domain, with the boundary tolerance.
pub fn domain_predicate(spec: &DomainSpec) -> Result<impl Fn(Ext) -> bool + Sync + '_> {
    spec.validate(SurfaceModel::Sphere)?;
    if matches!(spec, DomainSpec::NodeMask { .. }) {
        return Err(Error::InvalidDomain("node masks have no pointwise predicate".into()));
    }
    Ok(move |z: Ext| spec.contains_closure(&Point::Sphere(z), BOUNDARY_TOL))
}

/// Region tested for leakage of conditional zeros.
pub type Region<'a> = &'a (dyn Fn(Ext) -> bool + Sync);

pub struct HoleSetup<'a> {
    pub label: String,
    /// Closed hole, boundary tolerance included.
    pub inside: Region<'a>,
    /// Forbidden region, if one is predicted.
    pub forbidden: Option<Region<'a>>,
    pub degrees: Vec<usize>,
    pub budget: u64,
    pub seed: u64,
    /// Grid on which conditional zeros are accumulated.
    pub grid: &'a SurfaceGrid,
    /// Accepted zero sets kept per degree for export.
    pub keep: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DegreeStats {
    pub degree: usize,
    pub trials: u64,
    pub accepted: u64,
    pub root_failures: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Share of accepted zeros in the forbidden region.
    pub forbidden_mass: Option<f64>,
    /// Averaged conditional zero measure on the accumulation grid.
    #[serde(skip)]
    pub zero_measure: Option<DiscreteMeasure>,
    #[serde(skip)]
    pub kept: Vec<ZeroSet>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExponentFit {
    pub c_hat: f64,
    pub stderr: f64,
    pub degrees_used: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct HoleExperiment {
    pub domain: String,
    pub seed: u64,
    pub per_degree: Vec<DegreeStats>,
    pub fit: Option<ExponentFit>,
    /// Acceptance rose with n by more than the confidence intervals allow.
    pub monotonicity_violation: bool,
}

/// Wilson score interval at 95%.
pub fn wilson(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let nf = n as f64;
    let p = k as f64 / nf;
    let den = 1.0 + z * z / nf;
    let mid = (p + z * z / (2.0 * nf)) / den;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / den;
    ((mid - half).clamp(0.0, p), (mid + half).clamp(p, 1.0))
}

/// Weighted least squares of −ln p̂ on n² through the origin. Weights are the
/// delta-method inverse variances N p/(1−p). Needs 3 degrees with ≥ 10
/// acceptances; degrees with p̂ = 1 carry no information and are skipped.
pub fn fit_exponent(stats: &[DegreeStats]) -> Option<ExponentFit> {
    let usable: Vec<&DegreeStats> = stats.iter().filter(|s| s.accepted >= 10).collect();
    if usable.len() < 3 {
        return None;
    }
    let (mut sxy, mut sxx, mut used) = (0.0, 0.0, 0);
    for s in usable {
        let p = s.p_hat;
        if p >= 1.0 {
            continue;
        }
        let n2 = (s.degree * s.degree) as f64;
        let w = s.trials as f64 * p / (1.0 - p);
        sxy += w * n2 * (-p.ln());
        sxx += w * n2 * n2;
        used += 1;
    }
    if sxx == 0.0 {
        return Some(ExponentFit { c_hat: 0.0, stderr: 0.0, degrees_used: 0 });
    }
    Some(ExponentFit { c_hat: sxy / sxx, stderr: (1.0 / sxx).sqrt(), degrees_used: used })
}

/// Acceptance needed at the top degree is exp(−n²·min I); refuses budgets
/// expecting fewer than 10 acceptances.
pub fn check_feasible(min_energy: f64, degrees: &[usize], budget: u64) -> Result<()> {
    let Some(&top) = degrees.iter().max() else {
        return Err(Error::InvalidArgument("no degrees given".into()));
    };
    let expected = (-((top * top) as f64) * min_energy).exp();
    if expected * budget as f64 >= 10.0 {
        return Ok(());
    }
    let required = (10.0 / expected).ceil();
    Err(Error::Infeasible(format!(
        "min I = {min_energy:.6}, degree {top}: expected acceptance {expected:.3e}, \
         budget {budget} < required {required:.3e}"
    )))
}

struct Partial {
    accepted: u64,
    failures: u64,
    forbidden: u64,
    zeros: u64,
    hist: Vec<f64>,
    kept: Vec<(u64, ZeroSet)>,
}

impl Partial {
    fn new(n: usize) -> Self {
        Partial { accepted: 0, failures: 0, forbidden: 0, zeros: 0, hist: vec![0.0; n], kept: Vec::new() }
    }

    fn merge(mut self, o: Partial) -> Self {
        self.accepted += o.accepted;
        self.failures += o.failures;
        self.forbidden += o.forbidden;
        self.zeros += o.zeros;
        for (a, b) in self.hist.iter_mut().zip(&o.hist) {
            *a += b;
        }
        self.kept.extend(o.kept);
        self
    }
}

fn run_chunk(setup: &HoleSetup, n: usize, lo: u64, hi: u64) -> Result<Partial> {
    let mut part = Partial::new(setup.grid.len());
    for trial in lo..hi {
        let mut rng = trial_rng(setup.seed, n, trial);
        let zs = loop {
            let s = sample_section(n, &mut rng)?;
            match roots(&s) {
                Some(z) => break z,
                None => part.failures += 1,
            }
        };
        if zs.points.iter().any(|z| (setup.inside)(*z)) {
            continue;
        }
        part.accepted += 1;
        for z in &zs.points {
            part.zeros += 1;
            if setup.forbidden.is_some_and(|f| f(*z)) {
                part.forbidden += 1;
            }
            part.hist[setup.grid.locate(&Point::Sphere(*z))] += 1.0;
        }
        if part.kept.len() < setup.keep {
            part.kept.push((trial, zs));
        }
    }
    Ok(part)
}

/// Rejection sampling of the hole event at each degree.
pub fn run_hole_experiment(setup: &HoleSetup) -> Result<HoleExperiment> {
    if setup.grid.model != SurfaceModel::Sphere {
        return Err(Error::InvalidArgument("sections are sampled on the sphere only".into()));
    }
    if setup.budget == 0 || setup.degrees.is_empty() || setup.degrees.contains(&0) {
        return Err(Error::InvalidArgument("need a positive budget and degrees ≥ 1".into()));
    }
    let mut per_degree = Vec::new();
    for &n in &setup.degrees {
        let chunks: Vec<(u64, u64)> =
            (0..setup.budget.div_ceil(CHUNK)).map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(setup.budget))).collect();
        let parts: Vec<Partial> =
            chunks.par_iter().map(|&(lo, hi)| run_chunk(setup, n, lo, hi)).collect::<Result<_>>()?;
        let mut total = parts.into_iter().fold(Partial::new(setup.grid.len()), Partial::merge);
        total.kept.sort_by_key(|(t, _)| *t);
        total.kept.truncate(setup.keep);
        let (ci_low, ci_high) = wilson(total.accepted, setup.budget);
        let zero_measure = (total.zeros > 0).then(|| {
            let z = total.zeros as f64;
            DiscreteMeasure { weights: total.hist.iter().map(|h| h / z).collect() }
        });
        per_degree.push(DegreeStats {
            degree: n,
            trials: setup.budget,
            accepted: total.accepted,
            root_failures: total.failures,
            p_hat: total.accepted as f64 / setup.budget as f64,
            ci_low,
            ci_high,
            forbidden_mass: setup.forbidden.and((total.zeros > 0).then(|| total.forbidden as f64 / total.zeros as f64)),
            zero_measure,
            kept: total.kept.into_iter().map(|(_, z)| z).collect(),
        });
    }
    let mut sorted: Vec<&DegreeStats> = per_degree.iter().collect();
    sorted.sort_by_key(|s| s.degree);
    let monotonicity_violation = sorted.windows(2).any(|w| w[1].ci_low > w[0].ci_high);
    Ok(HoleExperiment {
        domain: setup.label.clone(),
        seed: setup.seed,
        fit: fit_exponent(&per_degree),
        per_degree,
        monotonicity_violation,
    })
}

/// Spearman rank correlation, average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for k in i..=j {
                r[idx[k]] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendRow {
    pub degree: usize,
    pub accepted: u64,
    pub w1: Option<f64>,
    pub w1_bound: Option<f64>,
    /// W1 of one accepted zero set, the discreteness floor.
    pub single_sample_w1: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendRecord {
    pub rows: Vec<TrendRow>,
    pub spearman: Option<f64>,
    pub decreasing: Option<bool>,
    pub flags: Vec<String>,
}

/// W1 between the averaged conditional zero measure and `nu` (on the
/// experiment's accumulation grid) per degree, and the trend in n.
pub fn conditional_equidistribution(
    exp: &HoleExperiment,
    grid: &SurfaceGrid,
    nu: &DiscreteMeasure,
) -> Result<TrendRecord> {
    if nu.len() != grid.len() {
        return Err(Error::InvalidArgument("reference measure is not on the accumulation grid".into()));
    }
    let mut rows = Vec::new();
    let mut flags = Vec::new();
    for s in &exp.per_degree {
        let mut row =
            TrendRow { degree: s.degree, accepted: s.accepted, w1: None, w1_bound: None, single_sample_w1: None };
        if s.accepted < 50 {
            flags.push(format!("degree {}: only {} acceptances", s.degree, s.accepted));
        } else if let Some(m) = &s.zero_measure {
            let est = w1_grid(grid, m, nu)?;
            row.w1 = Some(est.value);
            row.w1_bound = Some(est.bound);
        }
        if let Some(z) = s.kept.first() {
            row.single_sample_w1 = Some(w1_grid_points(grid, nu, &z.empirical())?.value);
        }
        rows.push(row);
    }
    let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.w1.map(|w| (r.degree as f64, w))).collect();
    let spearman_rho = (pts.len() >= 3).then(|| {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
        spearman(&x, &y)
    });
    if spearman_rho.is_none() {
        flags.push("fewer than 3 degrees with 50 acceptances".into());
    }
    Ok(TrendRecord { rows, decreasing: spearman_rho.map(|r| r < 0.0), spearman: spearman_rho, flags })
}

/// Two-proportion z-test, two-sided p-value.
pub fn two_proportion_p(k1: u64, n1: u64, k2: u64, n2: u64) -> f64 {
    let (p1, p2) = (k1 as f64 / n1 as f64, k2 as f64 / n2 as f64);
    let p = (k1 + k2) as f64 / (n1 + n2) as f64;
    let se = (p * (1.0 - p) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        return if p1 == p2 { 1.0 } else { 0.0 };
    }
    libm::erfc((p1 - p2).abs() / se / std::f64::consts::SQRT_2)
}
