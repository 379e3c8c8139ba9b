//! Seeded samplers for Brownian motion, fractional Brownian motion, white noise
//! and Karhunen–Loève sums, plus mollification of sampled paths.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cm_space::{orthonormal_basis, HVector, HilbertModel};
use crate::error::{Error, Result};
use crate::grid::{Field, Path, SpaceTimeGrid, TimeGrid};
use crate::rng::{fill_normals, normal, SeedSpec};

/// Default size limit for the dense Cholesky fallback of the fBM sampler.
pub const CHOLESKY_CAP: usize = 4096;

/// Brownian motion on `grid` with `d` independent components.
///
/// One-sided paths start at 0 at `t0`. Two-sided paths require 0 to be a grid
/// node; the two halves are independent and glued at 0.
pub fn sample_bm(grid: &TimeGrid, d: usize, seed: &SeedSpec, two_sided: bool) -> Result<Path> {
    let sd = grid.dt().sqrt();
    let origin = if two_sided {
        grid.node_of(0.0)
            .ok_or_else(|| Error::Input(format!("two-sided grid [{}, {}] has no node at 0", grid.t0, grid.t1)))?
    } else {
        0
    };
    let components = (0..d)
        .map(|j| {
            let mut v = vec![0.0; grid.n];
            let mut fwd = seed.substream(&format!("bm/{j}/fwd")).rng();
            for i in origin + 1..grid.n {
                v[i] = v[i - 1] + sd * normal(&mut fwd);
            }
            let mut bwd = seed.substream(&format!("bm/{j}/bwd")).rng();
            for i in (0..origin).rev() {
                v[i] = v[i + 1] + sd * normal(&mut bwd);
            }
            v
        })
        .collect();
    Path::new(*grid, components)
}

/// Exact Brownian values at increasing positive times, started from B(0) = 0.
pub fn sample_bm_at(times: &[f64], seed: &SeedSpec) -> Result<Vec<f64>> {
    let mut rng = seed.substream("bm-at").rng();
    let mut out = Vec::with_capacity(times.len());
    let (mut prev_t, mut prev_b) = (0.0, 0.0);
    for &t in times {
        if !(t > prev_t) {
            return Err(Error::Input(format!("times must be positive and increasing (got {t} after {prev_t})")));
        }
        prev_b += (t - prev_t).sqrt() * normal(&mut rng);
        prev_t = t;
        out.push(prev_b);
    }
    Ok(out)
}

/// Autocovariance of fractional Gaussian noise with step `dt` at lag k.
pub fn fgn_autocov(hurst: f64, dt: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * dt.powf(h2) * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FbmMethod {
    /// Circulant embedding with automatic Cholesky fallback.
    Auto,
    /// Dense Cholesky of the increment covariance.
    Cholesky,
}

/// Fractional Brownian motion with Hurst index `hurst`, pinned at 0 at `t0`.
pub fn sample_fbm(hurst: f64, grid: &TimeGrid, seed: &SeedSpec) -> Result<Path> {
    sample_fbm_with(hurst, grid, seed, FbmMethod::Auto, CHOLESKY_CAP)
}

pub fn sample_fbm_with(hurst: f64, grid: &TimeGrid, seed: &SeedSpec, method: FbmMethod, cap: usize) -> Result<Path> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::Domain(format!("Hurst parameter must lie in (0,1), got {hurst}")));
    }
    let m = grid.n - 1;
    let dt = grid.dt();
    let increments = match method {
        FbmMethod::Auto => match circulant_eigenvalues(hurst, dt, m) {
            Some(lambda) => davies_harte(&lambda, m, seed),
            None if m <= cap => cholesky_fgn(hurst, dt, m, seed)?,
            None => {
                return Err(Error::Capability(format!(
                    "circulant embedding is not nonnegative and n = {m} exceeds the Cholesky cap {cap}"
                )))
            }
        },
        FbmMethod::Cholesky => {
            if m > cap {
                return Err(Error::Capability(format!("n = {m} exceeds the Cholesky cap {cap}")));
            }
            cholesky_fgn(hurst, dt, m, seed)?
        }
    };
    let mut v = Vec::with_capacity(grid.n);
    v.push(0.0);
    let mut acc = 0.0;
    for x in increments {
        acc += x;
        v.push(acc);
    }
    Path::new(*grid, vec![v])
}

/// Eigenvalues of the minimal circulant embedding, or `None` if one is negative.
fn circulant_eigenvalues(hurst: f64, dt: f64, m: usize) -> Option<Vec<f64>> {
    let size = 2 * m;
    let mut c: Vec<Complex64> = (0..size)
        .map(|k| {
            let lag = if k <= m { k } else { size - k };
            Complex64::new(fgn_autocov(hurst, dt, lag), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(size).process(&mut c);
    let max = c.iter().fold(0.0f64, |a, z| a.max(z.re));
    let mut out = Vec::with_capacity(size);
    for z in c {
        if z.re < -1e-10 * max {
            return None;
        }
        out.push(z.re.max(0.0));
    }
    Some(out)
}

fn davies_harte(lambda: &[f64], m: usize, seed: &SeedSpec) -> Vec<f64> {
    let size = lambda.len();
    let mut rng = seed.substream("fbm/dh").rng();
    let mut w: Vec<Complex64> = lambda
        .iter()
        .map(|&l| {
            let s = (l / size as f64).sqrt();
            let (a, b) = (normal(&mut rng), normal(&mut rng));
            Complex64::new(s * a, s * b)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(size).process(&mut w);
    w[..m].iter().map(|z| z.re).collect()
}

fn cholesky_fgn(hurst: f64, dt: f64, m: usize, seed: &SeedSpec) -> Result<Vec<f64>> {
    let cov = DMatrix::from_fn(m, m, |i, j| fgn_autocov(hurst, dt, i.abs_diff(j)));
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::SingularOperator("fGn covariance is not positive definite".into()))?;
    let mut z = vec![0.0; m];
    fill_normals(&mut seed.substream("fbm/chol").rng(), &mut z);
    let l = chol.l();
    Ok((0..m).map(|i| (0..=i).map(|k| l[(i, k)] * z[k]).sum()).collect())
}

/// Space-time white noise: i.i.d. node values with variance 1/(Δt Δx).
pub fn sample_white_noise(grid: &SpaceTimeGrid, seed: &SeedSpec) -> Field {
    let s = 1.0 / (grid.dt() * grid.dx()).sqrt();
    let mut rng = seed.substream("white-noise").rng();
    let values = (0..grid.cells()).map(|_| s * normal(&mut rng)).collect();
    Field { grid: *grid, values }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    /// exp(-1/(1-v²)) on (-1, 1).
    Bump,
}

impl Kernel {
    pub fn profile(&self, v: f64) -> f64 {
        match self {
            Kernel::Bump => {
                if v.abs() < 1.0 {
                    (-1.0 / (1.0 - v * v)).exp()
                } else {
                    0.0
                }
            }
        }
    }
}

/// Half-stencil of φ_ε on a grid of step `dt`, renormalized to unit discrete mass.
pub fn mollifier_weights(eps: f64, dt: f64, kernel: Kernel) -> Vec<f64> {
    let taps = ((eps / dt) - 1e-9).ceil() as usize - 1;
    let mut w: Vec<f64> = (0..=taps).map(|k| kernel.profile(k as f64 * dt / eps)).collect();
    let mass = w[0] + 2.0 * w[1..].iter().sum::<f64>();
    w.iter_mut().for_each(|x| *x /= mass);
    w
}

/// Convolution with the rescaled kernel φ_ε, held constant within ε of both ends.
pub fn mollify_path(p: &Path, eps: f64, kernel: Kernel) -> Result<Path> {
    let dt = p.grid.dt();
    if !(eps > dt) {
        return Err(Error::Resolution(format!("mollifier width {eps:e} does not exceed the grid step {dt:e}")));
    }
    let w = mollifier_weights(eps, dt, kernel);
    let taps = w.len() - 1;
    let first = ((eps / dt) - 1e-9).ceil() as usize;
    let n = p.grid.n;
    if first > n - 1 - first {
        return Err(Error::Resolution(format!("mollifier width {eps:e} exceeds half the interval")));
    }
    let last = n - 1 - first;
    let components = p
        .components
        .iter()
        .map(|v| {
            let mut out = vec![0.0; n];
            for i in first..=last {
                let mut acc = w[0] * v[i];
                for k in 1..=taps {
                    acc += w[k] * (v[i - k] + v[i + k]);
                }
                out[i] = acc;
            }
            for i in 0..first {
                out[i] = out[first];
            }
            for i in last + 1..n {
                out[i] = out[last];
            }
            out
        })
        .collect();
    Path::new(p.grid, components)
}

/// Discrete mass of the kernel at width `eps` before renormalization, relative to 1.
pub fn kernel_mass_defect(eps: f64, dt: f64, kernel: Kernel) -> f64 {
    // ∫ exp(-1/(1-v²)) dv over (-1,1).
    const BUMP_MASS: f64 = 0.443_993_816_168_079_4;
    let taps = ((eps / dt) - 1e-9).ceil() as usize;
    let raw: f64 = (1..taps).map(|k| 2.0 * kernel.profile(k as f64 * dt / eps)).sum::<f64>() + kernel.profile(0.0);
    (raw * dt / eps / BUMP_MASS - 1.0).abs()
}

/// Karhunen–Loève partial sums Σ_{i ≤ N} Z_i e_i with a cached basis.
#[derive(Debug, Clone)]
pub struct KarhunenSampler {
    pub model: HilbertModel,
    basis: Vec<HVector>,
    paths: Vec<Path>,
}

impl KarhunenSampler {
    pub fn new(model: HilbertModel, basis_count: usize) -> Result<Self> {
        let basis = if basis_count == 0 { Vec::new() } else { orthonormal_basis(&model, basis_count)? };
        let paths = basis.iter().map(|e| e.to_path()).collect::<Result<Vec<_>>>()?;
        if basis_count == 0 {
            HVector::zero(model).to_path()?;
        }
        Ok(Self { model, basis, paths })
    }

    pub fn basis(&self) -> &[HVector] {
        &self.basis
    }

    /// Coefficients and the realized path.
    pub fn sample_with_coefficients(&self, seed: &SeedSpec) -> Result<(Vec<f64>, Path)> {
        let mut z = vec![0.0; self.basis.len()];
        fill_normals(&mut seed.substream("karhunen").rng(), &mut z);
        let mut path = HVector::zero(self.model).to_path()?;
        for (c, e) in z.iter().zip(&self.paths) {
            for (a, b) in path.components[0].iter_mut().zip(&e.components[0]) {
                *a += c * b;
            }
        }
        Ok((z, path))
    }

    pub fn sample(&self, seed: &SeedSpec) -> Result<Path> {
        Ok(self.sample_with_coefficients(seed)?.1)
    }
}

pub fn karhunen_sample(model: &HilbertModel, basis_count: usize, seed: &SeedSpec) -> Result<Path> {
    KarhunenSampler::new(*model, basis_count)?.sample(seed)
}
