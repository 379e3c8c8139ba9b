//! Discretized Cameron–Martin spaces.
//!
//! Four concrete models are supported:
//!
//! * `H01Interval` - functions on [a, b] vanishing at a with square-integrable
//!   derivative; stored as the derivative at cell midpoints.
//! * `FbmFourier` - the fractional Brownian Cameron–Martin space on the line,
//!   stored as samples on a periodic window [-L, L), with the inner product
//!   K ∫ |ξ|^{2H+1} f̂(ξ) conj(ĝ(ξ)) dξ evaluated by FFT.
//! * `L2Box` - the white-noise space L²([0,T] x [-L,L]) on grid nodes.
//! * `HeatCM` - fields with zero initial and boundary data, normed by the
//!   L² norm of the heat residual ∂ₜh - ∂ₓ²h.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::grid::{Field, Path, SpaceTimeGrid, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum HilbertModel {
    H01Interval { a: f64, b: f64, cells: usize },
    FbmFourier { hurst: f64, half_width: f64, samples: usize },
    L2Box { grid: SpaceTimeGrid },
    HeatCM { grid: SpaceTimeGrid },
}

impl HilbertModel {
    pub fn h01(a: f64, b: f64, cells: usize) -> Result<Self> {
        if !(a < b) || cells < 2 {
            return Err(Error::Input(format!("H01 model needs a < b and >= 2 cells, got [{a},{b}] with {cells}")));
        }
        Ok(HilbertModel::H01Interval { a, b, cells })
    }

    pub fn fbm(hurst: f64, half_width: f64, samples: usize) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::Domain(format!("Hurst parameter must lie in (0,1), got {hurst}")));
        }
        if !(half_width > 0.0) || samples < 8 || !samples.is_multiple_of(2) {
            return Err(Error::Input(format!(
                "fBM model needs L > 0 and an even sample count >= 8, got L={half_width}, n={samples}"
            )));
        }
        Ok(HilbertModel::FbmFourier { hurst, half_width, samples })
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            HilbertModel::H01Interval { .. } => "H01Interval",
            HilbertModel::FbmFourier { .. } => "FbmFourier",
            HilbertModel::L2Box { .. } => "L2Box",
            HilbertModel::HeatCM { .. } => "HeatCM",
        }
    }

    pub fn quadrature(&self) -> &'static str {
        match self {
            HilbertModel::H01Interval { .. } => "midpoint",
            HilbertModel::FbmFourier { .. } => "fft-spectral",
            HilbertModel::L2Box { .. } => "cell-sum",
            HilbertModel::HeatCM { .. } => "crank-nicolson-residual",
        }
    }

    /// Length of a representative.
    pub fn dim(&self) -> usize {
        match *self {
            HilbertModel::H01Interval { cells, .. } => cells,
            HilbertModel::FbmFourier { samples, .. } => samples,
            HilbertModel::L2Box { grid } => grid.nt * grid.nx,
            HilbertModel::HeatCM { grid } => (grid.nt - 1) * (grid.nx - 2),
        }
    }

    pub fn resolution(&self) -> usize {
        self.dim()
    }

    /// Sample spacing for the one-dimensional models.
    pub fn spacing(&self) -> Option<f64> {
        match *self {
            HilbertModel::H01Interval { a, b, cells } => Some((b - a) / cells as f64),
            HilbertModel::FbmFourier { half_width, samples, .. } => Some(2.0 * half_width / samples as f64),
            _ => None,
        }
    }

    /// Sample locations of an `FbmFourier` representative.
    pub fn fbm_positions(&self) -> Option<Vec<f64>> {
        match *self {
            HilbertModel::FbmFourier { half_width, samples, .. } => {
                let dx = 2.0 * half_width / samples as f64;
                Some((0..samples).map(|j| -half_width + j as f64 * dx).collect())
            }
            _ => None,
        }
    }
}

/// Normalizing constant K(H) = 1 / (2π Γ(2H+1) sin(πH)) of the fBM Fourier norm.
///
/// With f̂(ξ) = ∫ f(t) e^{-iξt} dt this makes ||f||² equal to ∫ f'² at H = 1/2
/// and gives the unit-variance fBM its exact Cameron–Martin space.
pub fn fbm_norm_constant(hurst: f64) -> f64 {
    1.0 / (2.0 * PI * statrs::function::gamma::gamma(2.0 * hurst + 1.0) * (PI * hurst).sin())
}

/// An element of a Cameron–Martin model, stored in the model's representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HVector {
    pub model: HilbertModel,
    pub repr: Vec<f64>,
}

impl HVector {
    pub fn new(model: HilbertModel, repr: Vec<f64>) -> Result<Self> {
        if repr.len() != model.dim() {
            return Err(Error::Structural(format!(
                "{} representative has length {}, model expects {}",
                model.variant_name(),
                repr.len(),
                model.dim()
            )));
        }
        ensure_finite(&repr, "HVector")?;
        Ok(Self { model, repr })
    }

    pub fn zero(model: HilbertModel) -> Self {
        Self { model, repr: vec![0.0; model.dim()] }
    }

    /// H01 element from its values; `f(a)` is subtracted so the element starts at 0.
    pub fn h01_from_fn(model: HilbertModel, f: impl Fn(f64) -> f64) -> Result<Self> {
        let HilbertModel::H01Interval { a, cells, .. } = model else {
            return Err(Error::Structural("h01_from_fn needs an H01Interval model".into()));
        };
        let h = model.spacing().unwrap();
        let vals: Vec<f64> = (0..=cells).map(|i| f(a + i as f64 * h)).collect();
        Self::new(model, vals.windows(2).map(|w| (w[1] - w[0]) / h).collect())
    }

    /// H01 element from its derivative evaluated at cell midpoints.
    pub fn h01_from_derivative(model: HilbertModel, df: impl Fn(f64) -> f64) -> Result<Self> {
        let HilbertModel::H01Interval { a, cells, .. } = model else {
            return Err(Error::Structural("h01_from_derivative needs an H01Interval model".into()));
        };
        let h = model.spacing().unwrap();
        Self::new(model, (0..cells).map(|c| df(a + (c as f64 + 0.5) * h)).collect())
    }

    /// fBM-model element sampled from a function on the periodic window.
    pub fn fbm_from_fn(model: HilbertModel, f: impl Fn(f64) -> f64) -> Result<Self> {
        let xs = model
            .fbm_positions()
            .ok_or_else(|| Error::Structural("fbm_from_fn needs an FbmFourier model".into()))?;
        Self::new(model, xs.into_iter().map(f).collect())
    }

    /// Field-based element (L2Box takes every node, HeatCM the interior with t > 0).
    pub fn from_field(model: HilbertModel, field: &Field) -> Result<Self> {
        match model {
            HilbertModel::L2Box { grid } => {
                if field.grid != grid {
                    return Err(Error::Structural("field grid differs from model grid".into()));
                }
                Self::new(model, field.values.clone())
            }
            HilbertModel::HeatCM { grid } => {
                if field.grid != grid {
                    return Err(Error::Structural("field grid differs from model grid".into()));
                }
                let mut repr = Vec::with_capacity(model.dim());
                for i in 1..grid.nt {
                    repr.extend_from_slice(&field.row(i)[1..grid.nx - 1]);
                }
                Self::new(model, repr)
            }
            _ => Err(Error::Structural("from_field needs a field model".into())),
        }
    }

    /// Ambient realization as a field (field models only).
    pub fn to_field(&self) -> Result<Field> {
        match self.model {
            HilbertModel::L2Box { grid } => Field::new(grid, self.repr.clone()),
            HilbertModel::HeatCM { grid } => {
                let mut f = Field::zeros(grid);
                let w = grid.nx - 2;
                for i in 1..grid.nt {
                    for j in 1..grid.nx - 1 {
                        f.set(i, j, self.repr[(i - 1) * w + (j - 1)]);
                    }
                }
                Ok(f)
            }
            _ => Err(Error::Structural("to_field needs a field model".into())),
        }
    }

    /// Ambient realization as a path (one-dimensional models only).
    ///
    /// H01 elements integrate the midpoint derivative, giving the
    /// piecewise-linear function on the `cells + 1` nodes.
    pub fn to_path(&self) -> Result<Path> {
        match self.model {
            HilbertModel::H01Interval { a, b, cells } => {
                let h = (b - a) / cells as f64;
                let mut vals = Vec::with_capacity(cells + 1);
                let mut acc = 0.0;
                vals.push(0.0);
                for d in &self.repr {
                    acc += d * h;
                    vals.push(acc);
                }
                Path::new(TimeGrid::new(a, b, cells + 1)?, vec![vals])
            }
            HilbertModel::FbmFourier { half_width, samples, .. } => {
                let dx = 2.0 * half_width / samples as f64;
                Path::new(TimeGrid::new(-half_width, half_width - dx, samples)?, vec![self.repr.clone()])
            }
            _ => Err(Error::Structural("to_path needs a one-dimensional model".into())),
        }
    }

    pub fn scaled(&self, c: f64) -> HVector {
        HVector { model: self.model, repr: self.repr.iter().map(|v| c * v).collect() }
    }

    pub fn axpy(&self, alpha: f64, other: &HVector) -> Result<HVector> {
        check_same_model(self, other)?;
        Ok(HVector {
            model: self.model,
            repr: self.repr.iter().zip(&other.repr).map(|(x, y)| x + alpha * y).collect(),
        })
    }

    pub fn header_json(&self) -> serde_json::Value {
        serde_json::json!({
            "model_variant": self.model.variant_name(),
            "resolution": self.model.resolution(),
            "params": self.model,
        })
    }

    /// Flat CSV column of the representative.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["coefficient"])?;
        for v in &self.repr {
            wr.write_record([format!("{v:e}")])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(model: HilbertModel, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut repr = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let v: f64 = rec
                .get(0)
                .ok_or_else(|| Error::Input("empty CSV row".into()))?
                .trim()
                .parse()
                .map_err(|e| Error::Input(format!("bad coefficient: {e}")))?;
            repr.push(v);
        }
        Self::new(model, repr)
    }

    /// Parse a JSON header written by [`HVector::header_json`].
    pub fn model_from_header(header: &serde_json::Value) -> Result<HilbertModel> {
        let params = header.get("params").ok_or_else(|| Error::Input("header lacks params".into()))?;
        Ok(serde_json::from_value(params.clone())?)
    }
}

fn check_same_model(f: &HVector, g: &HVector) -> Result<()> {
    if f.model != g.model || f.repr.len() != g.repr.len() {
        return Err(Error::Structural(format!(
            "vectors belong to different models ({} vs {})",
            f.model.variant_name(),
            g.model.variant_name()
        )));
    }
    Ok(())
}

/// Cameron–Martin inner product ⟨f, g⟩_H.
pub fn cm_inner(model: &HilbertModel, f: &HVector, g: &HVector) -> Result<f64> {
    for v in [f, g] {
        if v.model != *model || v.repr.len() != model.dim() {
            return Err(Error::Structural(format!(
                "vector of length {} does not belong to the {} model of dimension {}",
                v.repr.len(),
                model.variant_name(),
                model.dim()
            )));
        }
        ensure_finite(&v.repr, "cm_inner argument")?;
    }
    Ok(match *model {
        HilbertModel::H01Interval { .. } => {
            let h = model.spacing().unwrap();
            h * dot(&f.repr, &g.repr)
        }
        HilbertModel::FbmFourier { hurst, half_width, samples } => {
            let dx = 2.0 * half_width / samples as f64;
            let sf = spectrum(&f.repr, dx);
            let sg = spectrum(&g.repr, dx);
            let xs = model.fbm_positions().unwrap();
            let (mf, mg) = (moments(&f.repr, &xs, dx), moments(&g.repr, &xs, dx));
            let corr = origin_correction(2.0 * hurst + 1.0, PI / half_width, 1.0, &mf, &mg);
            fbm_spectral_inner(hurst, half_width, &sf, &sg) - fbm_norm_constant(hurst) * corr
        }
        HilbertModel::L2Box { grid } => grid.dt() * grid.dx() * dot(&f.repr, &g.repr),
        HilbertModel::HeatCM { grid } => {
            let rf = heat_residual(&grid, &f.repr);
            let rg = heat_residual(&grid, &g.repr);
            grid.dt() * grid.dx() * dot(&rf, &rg)
        }
    })
}

pub fn cm_norm(model: &HilbertModel, f: &HVector) -> Result<f64> {
    Ok(cm_inner(model, f, f)?.max(0.0).sqrt())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    crate::stats::pairwise_sum(&prods)
}

/// Scaled DFT F_k = dx Σ_j f_j e^{-2πi jk/n}; the common phase of the window origin is dropped.
pub(crate) fn spectrum(samples: &[f64], dx: f64) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v * dx, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

/// Angular frequency of FFT bin k for n samples of spacing dx.
pub(crate) fn bin_frequency(k: usize, n: usize, dx: f64) -> f64 {
    let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * PI * kk / (n as f64 * dx)
}

fn fbm_spectral_inner(hurst: f64, half_width: f64, sf: &[Complex64], sg: &[Complex64]) -> f64 {
    let n = sf.len();
    let dx = 2.0 * half_width / n as f64;
    let dxi = 2.0 * PI / (n as f64 * dx);
    let terms: Vec<f64> = (0..n)
        .map(|k| {
            let xi = bin_frequency(k, n, dx).abs();
            // The Nyquist bin is shared by ±ξ; halve it so the sum stays symmetric.
            let w = if n.is_multiple_of(2) && k == n / 2 { 0.5 } else { 1.0 };
            w * xi.powf(2.0 * hurst + 1.0) * (sf[k] * sg[k].conj()).re
        })
        .collect();
    fbm_norm_constant(hurst) * dxi * crate::stats::pairwise_sum(&terms)
}

/// Moments ∫ t^p f(t) dt, p = 0..=6, by the rectangle rule on the window.
pub(crate) fn moments(samples: &[f64], xs: &[f64], dx: f64) -> [f64; 7] {
    let mut m = [0.0; 7];
    for (v, x) in samples.iter().zip(xs) {
        let mut w = *v;
        for mp in m.iter_mut() {
            *mp += w;
            w *= x;
        }
    }
    m.map(|a| a * dx)
}

/// Leading terms of the trapezoid error for ∫ |η|^α G(η) dη on a grid of step h,
/// where G(η) = f̂(η) conj(ĝ(εη)).
///
/// For smooth G the generalized Euler–Maclaurin expansion reads
/// h Σ_k |kh|^α G(kh) - ∫ = Σ_j 2 ζ(-α-2j) c_{2j} h^{α+2j+1}, with c_{2j} the
/// Taylor coefficients of G at 0, which follow from the moments of f and g.
/// The FFT sum of the fBM norm is such a trapezoid sum; subtracting these
/// terms removes the error caused by the non-smooth weight at η = 0.
pub(crate) fn origin_correction(alpha: f64, h: f64, eps: f64, mf: &[f64; 7], mg: &[f64; 7]) -> f64 {
    let fact = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0];
    (0..=3)
        .map(|j| {
            let c: f64 = (0..=2 * j)
                .map(|p| {
                    let q = 2 * j - p;
                    let sign = if (j + p) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * eps.powi(q as i32) * mf[p] * mg[q] / (fact[p] * fact[q])
                })
                .sum();
            2.0 * zeta(-alpha - 2.0 * j as f64) * c * h.powf(alpha + 2.0 * j as f64 + 1.0)
        })
        .sum()
}

/// Riemann zeta for s > 1 directly, for s < 0 by the functional equation.
pub fn zeta(s: f64) -> f64 {
    if s > 1.0 {
        // Euler–Maclaurin with N = 20 and three Bernoulli corrections.
        let n = 20.0f64;
        let mut acc: f64 = (1..20).map(|k| (k as f64).powf(-s)).sum();
        acc += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
        let b = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0];
        let mut rising = s;
        let mut fact = 2.0;
        for (j, bj) in b.iter().enumerate() {
            let p = 2 * j + 1;
            acc += bj / fact * rising * n.powf(-s - p as f64);
            rising *= (s + p as f64) * (s + p as f64 + 1.0);
            fact *= ((p + 2) * (p + 3)) as f64;
        }
        acc
    } else if s < 0.0 {
        2f64.powf(s) * PI.powf(s - 1.0) * (PI * s / 2.0).sin() * statrs::function::gamma::gamma(1.0 - s) * zeta(1.0 - s)
    } else {
        f64::NAN
    }
}

/// Crank–Nicolson-consistent residual (h^{n+1}-h^n)/Δt - ½ D²(h^{n+1}+h^n) on interior nodes.
pub(crate) fn heat_residual(grid: &SpaceTimeGrid, repr: &[f64]) -> Vec<f64> {
    let (nt, w) = (grid.nt, grid.nx - 2);
    let dt = grid.dt();
    let idx2 = 1.0 / (grid.dx() * grid.dx());
    let zero = vec![0.0; w];
    let row = |n: usize| -> &[f64] {
        if n == 0 {
            &zero
        } else {
            &repr[(n - 1) * w..n * w]
        }
    };
    let lap = |u: &[f64], j: usize| -> f64 {
        let l = if j == 0 { 0.0 } else { u[j - 1] };
        let r = if j + 1 == w { 0.0 } else { u[j + 1] };
        (l - 2.0 * u[j] + r) * idx2
    };
    let mut out = Vec::with_capacity((nt - 1) * w);
    for n in 0..nt - 1 {
        let (u0, u1) = (row(n), row(n + 1));
        for j in 0..w {
            out.push((u1[j] - u0[j]) / dt - 0.5 * (lap(u1, j) + lap(u0, j)));
        }
    }
    out
}

/// Inverse of [`heat_residual`]: solve the Crank–Nicolson recursion for the given residual.
pub(crate) fn heat_solve_residual(grid: &SpaceTimeGrid, residual: &[f64]) -> Vec<f64> {
    let (nt, w) = (grid.nt, grid.nx - 2);
    let dt = grid.dt();
    let r = dt / (grid.dx() * grid.dx());
    let mut out = vec![0.0; (nt - 1) * w];
    let mut prev = vec![0.0; w];
    let mut rhs = vec![0.0; w];
    for n in 0..nt - 1 {
        for j in 0..w {
            let l = if j == 0 { 0.0 } else { prev[j - 1] };
            let rr = if j + 1 == w { 0.0 } else { prev[j + 1] };
            rhs[j] = prev[j] + 0.5 * r * (l - 2.0 * prev[j] + rr) + dt * residual[n * w + j];
        }
        let next = solve_tridiag_const(-0.5 * r, 1.0 + r, -0.5 * r, &rhs);
        out[n * w..(n + 1) * w].copy_from_slice(&next);
        prev = next;
    }
    out
}

/// Thomas algorithm for a constant-coefficient tridiagonal system.
pub(crate) fn solve_tridiag_const(lower: f64, diag: f64, upper: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper / diag;
    d[0] = rhs[0] / diag;
    for i in 1..n {
        let m = diag - lower * c[i - 1];
        c[i] = upper / m;
        d[i] = (rhs[i] - lower * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Heat-model element whose residual is the given L²-box field (h = G * f).
pub fn heat_from_forcing(model: HilbertModel, forcing: &Field) -> Result<HVector> {
    let HilbertModel::HeatCM { grid } = model else {
        return Err(Error::Structural("heat_from_forcing needs a HeatCM model".into()));
    };
    if forcing.grid != grid {
        return Err(Error::Structural("forcing grid differs from model grid".into()));
    }
    // Residual cell n sits between time rows n and n+1; use the average of the two rows.
    let w = grid.nx - 2;
    let mut res = Vec::with_capacity(model.dim());
    for n in 0..grid.nt - 1 {
        for j in 1..=w {
            res.push(0.5 * (forcing.at(n, j) + forcing.at(n + 1, j)));
        }
    }
    HVector::new(model, heat_solve_residual(&grid, &res))
}

/// Orthonormal basis e_1..e_count of the model.
///
/// H01 uses the sine family e_n(t) = √2 sin((n-½)πt)/((n-½)π) rescaled to
/// [a,b], whose midpoint derivatives are exactly orthonormal. The other
/// models orthonormalize a fixed smooth generating family.
pub fn orthonormal_basis(model: &HilbertModel, count: usize) -> Result<Vec<HVector>> {
    if count == 0 {
        return Err(Error::Input("basis count must be at least 1".into()));
    }
    if count > model.resolution() / 2 {
        return Err(Error::Resolution(format!(
            "requested {count} basis vectors but resolution {} supports at most {}",
            model.resolution(),
            model.resolution() / 2
        )));
    }
    match *model {
        HilbertModel::H01Interval { a, b, .. } => (1..=count)
            .map(|n| {
                let w = (n as f64 - 0.5) * PI / (b - a);
                let amp = (2.0 / (b - a)).sqrt();
                HVector::h01_from_derivative(*model, |t| amp * (w * (t - a)).cos())
            })
            .collect(),
        HilbertModel::FbmFourier { half_width, .. } => {
            let width = half_width / 32.0;
            let raw: Vec<HVector> = (0..count)
                .map(|m| HVector::fbm_from_fn(*model, |t| hermite_function(m, t / width)))
                .collect::<Result<_>>()?;
            gram_schmidt(model, raw)
        }
        HilbertModel::L2Box { grid } => gram_schmidt(model, box_family(grid, count, |f| Ok(f.values.clone()), *model)?),
        HilbertModel::HeatCM { grid } => {
            let l2 = HilbertModel::L2Box { grid };
            let forcing = orthonormal_basis(&l2, count)?;
            forcing
                .iter()
                .map(|f| heat_from_forcing(*model, &f.to_field()?))
                .collect::<Result<Vec<_>>>()
                .and_then(|v| gram_schmidt(model, v))
        }
    }
}

fn box_family(
    grid: SpaceTimeGrid,
    count: usize,
    repr: impl Fn(&Field) -> Result<Vec<f64>>,
    model: HilbertModel,
) -> Result<Vec<HVector>> {
    // Tensor sines ordered by total mode number.
    let mut modes = Vec::new();
    let mut s = 2;
    while modes.len() < count {
        for p in 1..s {
            let q = s - p;
            if modes.len() < count {
                modes.push((p, q));
            }
        }
        s += 1;
    }
    modes
        .into_iter()
        .map(|(p, q)| {
            let f = Field::from_fn(grid, |t, x| {
                (p as f64 * PI * (t + 0.5 * grid.dt()) / (grid.t_max + grid.dt())).sin()
                    * (q as f64 * PI * (x + grid.half_width) / (2.0 * grid.half_width)).sin()
            });
            HVector::new(model, repr(&f)?)
        })
        .collect()
}

/// Modified Gram–Schmidt, applied twice for orthogonality at rounding level.
pub fn gram_schmidt(model: &HilbertModel, raw: Vec<HVector>) -> Result<Vec<HVector>> {
    let mut out: Vec<HVector> = Vec::with_capacity(raw.len());
    for v in raw {
        let mut w = v;
        for _ in 0..2 {
            for e in &out {
                let c = cm_inner(model, &w, e)?;
                w = w.axpy(-c, e)?;
            }
        }
        let n = cm_norm(model, &w)?;
        if n < 1e-12 {
            return Err(Error::SingularOperator("generating family is linearly dependent".into()));
        }
        out.push(w.scaled(1.0 / n));
    }
    Ok(out)
}

/// Hermite function ψ_m(x) = (2^m m! √π)^{-1/2} H^{phys}_m(x) e^{-x²/2}, by stable recurrence.
pub fn hermite_function(m: usize, x: f64) -> f64 {
    let mut p0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if m == 0 {
        return p0;
    }
    let mut p1 = 2f64.sqrt() * x * p0;
    for k in 1..m {
        let k = k as f64;
        let p2 = (2.0 / (k + 1.0)).sqrt() * x * p1 - (k / (k + 1.0)).sqrt() * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Numeric dual norm sup_{φ ∈ net} (f, φ) with the L² pairing Σ w_i f_i φ_i.
///
/// Every net element must satisfy `x_norm(φ) <= 1`; the result is a lower
/// bound of the true dual norm and grows as the net is refined.
pub fn conjugate_norm(
    x_norm: impl Fn(&[f64]) -> f64,
    f: &[f64],
    net: &[Vec<f64>],
    weights: &[f64],
) -> Result<f64> {
    if net.is_empty() {
        return Err(Error::Input("conjugate norm needs a nonempty net".into()));
    }
    if weights.len() != f.len() {
        return Err(Error::Structural("quadrature weights do not match f".into()));
    }
    ensure_finite(f, "conjugate_norm f")?;
    let mut best = f64::NEG_INFINITY;
    for (k, phi) in net.iter().enumerate() {
        if phi.len() != f.len() {
            return Err(Error::Structural(format!("net element {k} has the wrong length")));
        }
        let nx = x_norm(phi);
        if nx > 1.0 + 1e-12 {
            return Err(Error::Input(format!("net element {k} has ambient norm {nx} > 1")));
        }
        let p: f64 = f.iter().zip(phi).zip(weights).map(|((a, b), w)| a * b * w).sum();
        best = best.max(p);
    }
    Ok(best)
}

/// ‖Q^{-1/2} φ‖ = sqrt(φᵀ Q⁻¹ φ) through a symmetric eigendecomposition.
pub fn q_sqrt_inv_norm(q: &DMatrix<f64>, phi: &[f64]) -> Result<f64> {
    let n = q.nrows();
    if q.ncols() != n || phi.len() != n {
        return Err(Error::Structural(format!("Q is {}x{}, φ has length {}", q.nrows(), q.ncols(), phi.len())));
    }
    ensure_finite(phi, "q_sqrt_inv_norm φ")?;
    let scale = q.norm();
    let asym = (q - q.transpose()).norm();
    if asym > 1e-10 * scale {
        return Err(Error::SingularOperator(format!("Q is not symmetric (defect {asym:e})")));
    }
    let eig = SymmetricEigen::new(q.clone());
    let floor = 1e-12 * q.trace() / n as f64;
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > floor) {
        return Err(Error::SingularOperator(format!("Q is not positive definite (min eigenvalue {min:e})")));
    }
    let mut acc = 0.0;
    for k in 0..n {
        let c: f64 = eig.eigenvectors.column(k).iter().zip(phi).map(|(a, b)| a * b).sum();
        acc += c * c / eig.eigenvalues[k];
    }
    Ok(acc.sqrt())
}

/// Lattice coefficients in [-1,1]^span_dim inside the closed unit ball.
pub fn ball_net_coefficients(span_dim: usize, per_axis: usize) -> Result<Vec<Vec<f64>>> {
    if per_axis < 2 {
        return Err(Error::Input(format!("ball net needs at least 2 points per axis, got {per_axis}")));
    }
    let total = (per_axis as f64).powi(span_dim as i32);
    if total > 2e6 {
        return Err(Error::Capability(format!("ball net of {total} lattice points is too large")));
    }
    let axis: Vec<f64> = (0..per_axis).map(|i| -1.0 + 2.0 * i as f64 / (per_axis - 1) as f64).collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; span_dim];
    loop {
        let c: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        if c.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12 {
            out.push(c);
        }
        let mut k = 0;
        loop {
            if k == span_dim {
                return Ok(out);
            }
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Covering radius (in H) of the lattice net restricted to the span of the first `span_dim` vectors.
pub fn ball_net_mesh(span_dim: usize, per_axis: usize) -> f64 {
    let step = 2.0 / (per_axis.max(2) - 1) as f64;
    0.5 * step * (span_dim as f64).sqrt()
}

/// Lattice net of the unit ball of H mapped through the first `span_dim` basis vectors.
pub fn ball_net(model: &HilbertModel, span_dim: usize, per_axis: usize) -> Result<Vec<HVector>> {
    let coeffs = ball_net_coefficients(span_dim, per_axis)?;
    let basis = orthonormal_basis(model, span_dim)?;
    coeffs.iter().map(|c| combine(model, &basis, c)).collect()
}

/// Σ c_i e_i.
pub fn combine(model: &HilbertModel, basis: &[HVector], coeffs: &[f64]) -> Result<HVector> {
    if coeffs.len() > basis.len() {
        return Err(Error::Structural("more coefficients than basis vectors".into()));
    }
    let mut v = HVector::zero(*model);
    for (c, e) in coeffs.iter().zip(basis) {
        for (a, b) in v.repr.iter_mut().zip(&e.repr) {
            *a += c * b;
        }
    }
    Ok(v)
}

/// Closed-form sup-norm of the n-th H01 sine basis element on [0,1].
pub fn h01_sine_sup(n: usize) -> f64 {
    2f64.sqrt() / ((n as f64 - 0.5) * PI)
}
