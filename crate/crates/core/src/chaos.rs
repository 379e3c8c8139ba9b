//! Wiener chaos functionals and their homogeneous forms.
//!
//! A functional is evaluated on white coordinates: the Gaussian input is a
//! vector `z` of i.i.d. standard normals, and a Cameron–Martin shift `h` is
//! represented by its white image `ĥ`, so that `x + h` corresponds to `z + ĥ`
//! and the Paley–Wiener pairing is `⟨x, h⟩ = z·ĥ`. For Brownian inputs
//! `z_i = ΔB_i/√Δt` and `ĥ_i = h′(t_i)√Δt`; for space-time white noise
//! `z_c = ξ(c)/√|c|` and `ĥ_c = f(c)√|c|`.

use std::sync::Arc;

use serde::Serialize;
use statrs::function::erf::erf;

use crate::cm_space::{orthonormal_basis, HVector, HilbertModel};
use crate::error::{Error, Result};
use crate::grid::{Path, SpaceTimeGrid, TimeGrid};
use crate::mc;
use crate::rng::{fill_normals, SeedSpec};
use crate::stats::{self, Estimate, LineFit};

/// Largest Hermite index whose normalisation k! fits in an f64.
pub const HERMITE_MAX: usize = 170;

/// Probabilists' Hermite polynomial by the three-term recurrence.
pub fn hermite(k: usize, x: f64, normalized: bool) -> Result<f64> {
    if k > HERMITE_MAX {
        return Err(Error::Range(format!("Hermite index {k} exceeds the factorial range ({HERMITE_MAX})")));
    }
    let (mut prev, mut cur) = (0.0, 1.0);
    for j in 0..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(if normalized { cur / stats::factorial(k as u64).sqrt() } else { cur })
}

/// Cumulative left-point sums ∫ integrand d(integrator), componentwise.
pub fn ito_integral(integrand: &Path, integrator: &Path) -> Result<Path> {
    if integrand.grid != integrator.grid {
        return Err(Error::Structural("integrand and integrator live on different grids".into()));
    }
    if integrand.dim() != integrator.dim() {
        return Err(Error::Structural(format!(
            "integrand has {} components, integrator {}",
            integrand.dim(),
            integrator.dim()
        )));
    }
    let n = integrand.grid.n;
    let comps = (0..integrand.dim())
        .map(|j| {
            let (f, g) = (integrand.component(j), integrator.component(j));
            let mut out = vec![0.0; n];
            for i in 1..n {
                out[i] = out[i - 1] + f[i - 1] * (g[i] - g[i - 1]);
            }
            out
        })
        .collect();
    Path::new(integrand.grid, comps)
}

/// An order-k functional of a standard Gaussian vector.
pub trait ChaosFunctional: Send + Sync {
    fn order(&self) -> usize;
    fn label(&self) -> String;
    /// Number of white coordinates.
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval_into(&self, z: &[f64], out: &mut [f64]);
    /// Closed-form homogeneous form at the white image `h`.
    fn hom(&self, h: &[f64]) -> Result<Vec<f64>>;
    fn descriptor(&self) -> serde_json::Value;

    fn eval(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim()];
        self.eval_into(z, &mut out);
        out
    }

    /// Output norm; sup norm unless overridden.
    fn output_norm(&self, y: &[f64]) -> f64 {
        y.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

fn check_input(chaos: &dyn ChaosFunctional, h: &[f64]) -> Result<()> {
    if h.len() != chaos.input_dim() {
        return Err(Error::Structural(format!(
            "{} takes {} white coordinates, got {}",
            chaos.label(),
            chaos.input_dim(),
            h.len()
        )));
    }
    Ok(())
}

/// H_k(Z) for a single standard normal Z.
#[derive(Debug, Clone, Copy)]
pub struct ScalarHermite {
    pub k: usize,
    pub normalized: bool,
}

impl ScalarHermite {
    pub fn new(k: usize, normalized: bool) -> Result<Self> {
        if k == 0 || k > HERMITE_MAX {
            return Err(Error::Input(format!("scalar Hermite chaos needs 1 <= k <= {HERMITE_MAX}, got {k}")));
        }
        Ok(Self { k, normalized })
    }
}

impl ChaosFunctional for ScalarHermite {
    fn order(&self) -> usize {
        self.k
    }
    fn label(&self) -> String {
        format!("hermite-{}", self.k)
    }
    fn input_dim(&self) -> usize {
        1
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        out[0] = hermite(self.k, z[0], self.normalized).unwrap_or(f64::NAN);
    }
    fn hom(&self, h: &[f64]) -> Result<Vec<f64>> {
        check_input(self, h)?;
        let v = h[0].powi(self.k as i32);
        Ok(vec![if self.normalized { v / stats::factorial(self.k as u64).sqrt() } else { v }])
    }
    fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({"label": self.label(), "order": self.k, "normalized": self.normalized})
    }
}

/// Brownian white coordinates: increments of each component scaled by 1/√Δt.
pub fn white_from_path(p: &Path) -> Vec<f64> {
    let s = 1.0 / p.grid.dt().sqrt();
    (0..p.dim()).flat_map(|j| p.increments(j).into_iter().map(move |d| d * s)).collect()
}

/// Inverse of [`white_from_path`] for paths started at 0.
pub fn path_from_white(grid: TimeGrid, d: usize, z: &[f64]) -> Result<Path> {
    let m = grid.n - 1;
    if z.len() != d * m {
        return Err(Error::Structural(format!("{} white coordinates for {d} components of {m} steps", z.len())));
    }
    let s = grid.dt().sqrt();
    let comps = (0..d)
        .map(|j| {
            let mut v = vec![0.0; grid.n];
            for i in 0..m {
                v[i + 1] = v[i] + s * z[j * m + i];
            }
            v
        })
        .collect();
    Path::new(grid, comps)
}

/// The iterated integral t ↦ ∫₀ᵗ B₁ dB₂ on a fixed grid.
#[derive(Debug, Clone, Copy)]
pub struct LevyArea {
    pub grid: TimeGrid,
}

impl LevyArea {
    pub fn new(grid: TimeGrid) -> Self {
        Self { grid }
    }

    fn steps(&self) -> usize {
        self.grid.n - 1
    }

    /// Pathwise value on a 2-component path.
    pub fn eval_path(&self, p: &Path) -> Result<Path> {
        if p.dim() != 2 {
            return Err(Error::Structural(format!("Lévy area needs a 2-component path, got {}", p.dim())));
        }
        let b1 = Path::new(p.grid, vec![p.component(0).to_vec()])?;
        let b2 = Path::new(p.grid, vec![p.component(1).to_vec()])?;
        ito_integral(&b1, &b2)
    }

    /// Homogeneous form ∫₀^• f₁ f₂′ on a pair of paths (left-point quadrature).
    pub fn hom_paths(&self, f1: &Path, f2: &Path) -> Result<Path> {
        ito_integral(f1, f2)
    }

    /// White image of a pair of H01 elements on this grid.
    pub fn white_from_hvectors(&self, f1: &HVector, f2: &HVector) -> Result<Vec<f64>> {
        let expected = HilbertModel::h01(self.grid.t0, self.grid.t1, self.steps())?;
        for f in [f1, f2] {
            if f.model != expected {
                return Err(Error::Structural("Lévy-area shifts must be H01 elements on the path grid".into()));
            }
        }
        let s = self.grid.dt().sqrt();
        Ok(f1.repr.iter().chain(&f2.repr).map(|d| d * s).collect())
    }

    fn area(&self, z: &[f64], out: &mut [f64]) {
        let m = self.steps();
        let s = self.grid.dt().sqrt();
        let (z1, z2) = z.split_at(m);
        let (mut b1, mut a) = (0.0, 0.0);
        out[0] = 0.0;
        for i in 0..m {
            a += b1 * s * z2[i];
            b1 += s * z1[i];
            out[i + 1] = a;
        }
    }
}

impl ChaosFunctional for LevyArea {
    fn order(&self) -> usize {
        2
    }
    fn label(&self) -> String {
        "levy-area".into()
    }
    fn input_dim(&self) -> usize {
        2 * self.steps()
    }
    fn output_dim(&self) -> usize {
        self.grid.n
    }
    fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        self.area(z, out);
    }
    fn hom(&self, h: &[f64]) -> Result<Vec<f64>> {
        check_input(self, h)?;
        let mut out = vec![0.0; self.grid.n];
        self.area(h, &mut out);
        Ok(out)
    }
    fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({"label": self.label(), "order": 2, "grid": self.grid})
    }
}

/// Interleaved sine basis (component 1, component 2, component 1, ...) in
/// Brownian white coordinates for `d` components.
pub fn brownian_white_basis(grid: TimeGrid, d: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    let m = grid.n - 1;
    let per = count.div_ceil(d);
    let model = HilbertModel::h01(grid.t0, grid.t1, m)?;
    let sines = orthonormal_basis(&model, per)?;
    let s = grid.dt().sqrt();
    Ok((0..count)
        .map(|idx| {
            let (mode, comp) = (idx / d, idx % d);
            let mut v = vec![0.0; d * m];
            for (i, der) in sines[mode].repr.iter().enumerate() {
                v[comp * m + i] = der * s;
            }
            v
        })
        .collect())
}

/// Green's function of ∂ₜ − D∂ₓ² integrated over a space cell of width `w`
/// centred at offset `u`, at elapsed time `tau`.
fn cell_mass(tau: f64, u: f64, w: f64, diffusivity: f64) -> f64 {
    if tau <= 0.0 {
        return if u.abs() < 0.5 * w { 1.0 } else if u.abs() == 0.5 * w { 0.5 } else { 0.0 };
    }
    let s = (4.0 * diffusivity * tau).sqrt();
    0.5 * (erf((u + 0.5 * w) / s) - erf((u - 0.5 * w) / s))
}

/// ∫_{lo}^{hi} cell_mass dτ by 4-point Gauss–Legendre.
fn slab_mass(lo: f64, hi: f64, u: f64, w: f64, diffusivity: f64) -> f64 {
    const X: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const W: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let (c, r) = (0.5 * (hi + lo), 0.5 * (hi - lo));
    X.iter().zip(W).map(|(x, wt)| wt * cell_mass(c + r * x, u, w, diffusivity)).sum::<f64>() * r
}

/// Time-ordered heat-kernel chaos of order 1 or 2 driven by space-time white
/// noise, evaluated at a list of points.
///
/// Noise cell (i, j) covers [t_i, t_i + Δt) × [x_j − Δx/2, x_j + Δx/2]. The
/// kernel is the Green's function of ∂ₜ − D∂ₓ²; `D = 1` matches the heat
/// equation solvers, `D = ½` gives the kernel (2πt)^{-1/2} e^{-x²/2t}.
#[derive(Debug, Clone)]
pub struct HeatChaos {
    pub order: usize,
    pub grid: SpaceTimeGrid,
    pub points: Vec<(f64, f64)>,
    pub diffusivity: f64,
    weights: Vec<Vec<f64>>,
    lags: Vec<Vec<f64>>,
    last_slab: usize,
}

impl HeatChaos {
    pub fn new(order: usize, grid: SpaceTimeGrid, points: Vec<(f64, f64)>, diffusivity: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Input("heat chaos order must be at least 1".into()));
        }
        if order > 2 {
            return Err(Error::Capability(format!(
                "heat chaos of order {order} is not implemented (nested sums cost grows like n^(2k))"
            )));
        }
        if !(diffusivity > 0.0) {
            return Err(Error::Input(format!("diffusivity must be positive, got {diffusivity}")));
        }
        if points.is_empty() {
            return Err(Error::Input("heat chaos needs at least one evaluation point".into()));
        }
        let (dt, dx) = (grid.dt(), grid.dx());
        let norm = 1.0 / (dt * dx).sqrt();
        for &(t, x) in &points {
            if !(t > 0.0 && t <= grid.t_max * (1.0 + 1e-12) && x.abs() <= grid.half_width) {
                return Err(Error::Input(format!("evaluation point ({t}, {x}) lies outside (0, T] x [-L, L]")));
            }
            for tau in [t, 0.5 * dt.min(t)] {
                let mass: f64 = (0..grid.nx).map(|j| cell_mass(tau, x - grid.x(j), dx, diffusivity)).sum();
                if (mass - 1.0).abs() > 0.01 {
                    return Err(Error::Resolution(format!(
                        "discrete heat kernel mass {mass:.4} at ({t}, {x}) is outside [0.99, 1.01]; widen or refine the grid"
                    )));
                }
            }
        }
        let weights: Vec<Vec<f64>> = points
            .iter()
            .map(|&(t, x)| {
                let mut w = vec![0.0; grid.cells()];
                for i in 0..grid.nt {
                    let ti = grid.t(i);
                    if ti >= t {
                        break;
                    }
                    let (lo, hi) = ((t - ti - dt).max(0.0), t - ti);
                    for j in 0..grid.nx {
                        w[i * grid.nx + j] = norm * slab_mass(lo, hi, x - grid.x(j), dx, diffusivity);
                    }
                }
                w
            })
            .collect();
        let last_slab = points.iter().map(|&(t, _)| ((t / dt) - 1e-9).ceil() as usize).max().unwrap().min(grid.nt);
        let lags = if order == 2 {
            (1..last_slab.max(1))
                .map(|l| {
                    (0..2 * grid.nx - 1)
                        .map(|o| {
                            let u = (o as f64 - (grid.nx - 1) as f64) * dx;
                            norm * slab_mass((l - 1) as f64 * dt, l as f64 * dt, u, dx, diffusivity)
                        })
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self { order, grid, points, diffusivity, weights, lags, last_slab })
    }

    /// White image of a forcing f(t, x), sampled at cell centres in time.
    pub fn white_from_fn(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let g = &self.grid;
        let s = (g.dt() * g.dx()).sqrt();
        let mut out = Vec::with_capacity(g.cells());
        for i in 0..g.nt {
            for j in 0..g.nx {
                out.push(s * f(g.t(i) + 0.5 * g.dt(), g.x(j)));
            }
        }
        out
    }

    /// Σ_c w_c², the exact variance of the order-1 output at each point.
    pub fn kernel_l2(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.iter().map(|v| v * v).sum()).collect()
    }

    /// Order-1 field at every cell start, propagated from strictly earlier slabs.
    fn inner_field(&self, z: &[f64]) -> Vec<f64> {
        let (nt, nx) = (self.grid.nt, self.grid.nx);
        let mut v = vec![0.0; nt * nx];
        for i1 in 1..self.last_slab {
            for i2 in 0..i1 {
                let k = &self.lags[i1 - i2 - 1];
                let src = &z[i2 * nx..(i2 + 1) * nx];
                let dst = &mut v[i1 * nx..(i1 + 1) * nx];
                for (j1, d) in dst.iter_mut().enumerate() {
                    let off = nx - 1 + j1;
                    let mut acc = 0.0;
                    for (j2, s) in src.iter().enumerate() {
                        acc += k[off - j2] * s;
                    }
                    *d += acc;
                }
            }
        }
        v
    }

    fn apply(&self, z: &[f64], out: &mut [f64]) {
        let upto = self.last_slab * self.grid.nx;
        if self.order == 1 {
            for (o, w) in out.iter_mut().zip(&self.weights) {
                *o = w[..upto].iter().zip(&z[..upto]).map(|(a, b)| a * b).sum();
            }
        } else {
            let v = self.inner_field(z);
            for (o, w) in out.iter_mut().zip(&self.weights) {
                *o = (0..upto).map(|c| w[c] * z[c] * v[c]).sum();
            }
        }
    }
}

impl ChaosFunctional for HeatChaos {
    fn order(&self) -> usize {
        self.order
    }
    fn label(&self) -> String {
        format!("heat-chaos-{}", self.order)
    }
    fn input_dim(&self) -> usize {
        self.grid.cells()
    }
    fn output_dim(&self) -> usize {
        self.points.len()
    }
    fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        self.apply(z, out);
    }
    fn hom(&self, h: &[f64]) -> Result<Vec<f64>> {
        check_input(self, h)?;
        let mut out = vec![0.0; self.points.len()];
        self.apply(h, &mut out);
        Ok(out)
    }
    fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({
            "label": self.label(),
            "order": self.order,
            "grid": self.grid,
            "points": self.points,
            "diffusivity": self.diffusivity,
        })
    }
}

fn check_budget(budget: usize) -> Result<()> {
    if budget < 100 {
        return Err(Error::Input(format!("Monte-Carlo budget must be at least 100, got {budget}")));
    }
    Ok(())
}

/// E[T(x + h)] by Monte Carlo, per output component.
pub fn t_hom_shift(chaos: &dyn ChaosFunctional, h: &[f64], budget: usize, seed: &SeedSpec) -> Result<Vec<Estimate>> {
    check_budget(budget)?;
    check_input(chaos, h)?;
    let seed = seed.substream("hom-shift");
    Ok(mc::estimate(budget, chaos.output_dim(), |i, out| {
        let mut z = vec![0.0; h.len()];
        fill_normals(&mut seed.replica(i).rng(), &mut z);
        z.iter_mut().zip(h).for_each(|(a, b)| *a += b);
        chaos.eval_into(&z, out);
    }))
}

/// E[T(x)⟨x, h⟩ᵏ]/k! by Monte Carlo, per output component.
pub fn t_hom_moment(chaos: &dyn ChaosFunctional, h: &[f64], budget: usize, seed: &SeedSpec) -> Result<Vec<Estimate>> {
    check_budget(budget)?;
    check_input(chaos, h)?;
    let k = chaos.order();
    let kf = stats::factorial(k as u64);
    let seed = seed.substream("hom-moment");
    Ok(mc::estimate(budget, chaos.output_dim(), |i, out| {
        let mut z = vec![0.0; h.len()];
        fill_normals(&mut seed.replica(i).rng(), &mut z);
        let pair: f64 = z.iter().zip(h).map(|(a, b)| a * b).sum();
        chaos.eval_into(&z, out);
        let c = pair.powi(k as i32) / kf;
        out.iter_mut().for_each(|o| *o *= c);
    }))
}

/// T_N(x) = E_y T(P_N x + Q_N y) with a fixed bank of tail samples.
pub struct ProjectedChaos {
    inner: Arc<dyn ChaosFunctional>,
    basis: Vec<Vec<f64>>,
    tails: Vec<Vec<f64>>,
    identity: bool,
}

impl ProjectedChaos {
    pub fn rank(&self) -> usize {
        if self.identity {
            self.inner.input_dim()
        } else {
            self.basis.len()
        }
    }

    fn project(&self, z: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; z.len()];
        for b in &self.basis {
            let c: f64 = b.iter().zip(z).map(|(a, v)| a * v).sum();
            p.iter_mut().zip(b).for_each(|(o, v)| *o += c * v);
        }
        p
    }
}

/// Finite-rank Cameron–Martin projection of `chaos` onto the span of the
/// first `n` vectors of an orthonormal white-coordinate basis.
///
/// `n == chaos.input_dim()` is the identity projection and needs no basis.
pub fn finite_rank_projection(
    chaos: Arc<dyn ChaosFunctional>,
    basis: &[Vec<f64>],
    n: usize,
    tail_samples: usize,
    seed: &SeedSpec,
) -> Result<ProjectedChaos> {
    let dim = chaos.input_dim();
    if n == dim {
        return Ok(ProjectedChaos { inner: chaos, basis: Vec::new(), tails: vec![vec![0.0; dim]], identity: true });
    }
    if n > basis.len() {
        return Err(Error::Input(format!("projection rank {n} exceeds the {} supplied basis vectors", basis.len())));
    }
    if basis[..n].iter().any(|b| b.len() != dim) {
        return Err(Error::Structural(format!("basis vectors must have {dim} white coordinates")));
    }
    if tail_samples == 0 {
        return Err(Error::Input("projection needs at least one tail sample".into()));
    }
    let mut proj = ProjectedChaos { inner: chaos, basis: basis[..n].to_vec(), tails: Vec::new(), identity: false };
    let seed = seed.substream("projection-tail");
    proj.tails = (0..tail_samples as u64)
        .map(|m| {
            let mut y = vec![0.0; dim];
            fill_normals(&mut seed.replica(m).rng(), &mut y);
            let p = proj.project(&y);
            y.iter_mut().zip(p).for_each(|(a, b)| *a -= b);
            y
        })
        .collect();
    Ok(proj)
}

impl ChaosFunctional for ProjectedChaos {
    fn order(&self) -> usize {
        self.inner.order()
    }
    fn label(&self) -> String {
        format!("{}/rank-{}", self.inner.label(), self.rank())
    }
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }
    fn output_dim(&self) -> usize {
        self.inner.output_dim()
    }
    fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        let p = if self.identity { z.to_vec() } else { self.project(z) };
        let mut buf = vec![0.0; out.len()];
        let mut x = vec![0.0; z.len()];
        out.iter_mut().for_each(|o| *o = 0.0);
        for q in &self.tails {
            x.iter_mut().zip(p.iter().zip(q)).for_each(|(o, (a, b))| *o = a + b);
            self.inner.eval_into(&x, &mut buf);
            out.iter_mut().zip(&buf).for_each(|(o, b)| *o += b);
        }
        let m = self.tails.len() as f64;
        out.iter_mut().for_each(|o| *o /= m);
    }
    /// (T_N)_hom(h) = T_hom(P_N h).
    fn hom(&self, h: &[f64]) -> Result<Vec<f64>> {
        check_input(self, h)?;
        if self.identity {
            self.inner.hom(h)
        } else {
            self.inner.hom(&self.project(h))
        }
    }
    fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({
            "label": self.label(),
            "order": self.order(),
            "inner": self.inner.descriptor(),
            "rank": self.rank(),
            "tail_samples": self.tails.len(),
        })
    }
    fn output_norm(&self, y: &[f64]) -> f64 {
        self.inner.output_norm(y)
    }
}

/// E‖T_N − T‖² and its standard error, on shared input samples.
pub fn projection_discrepancy(
    chaos: &dyn ChaosFunctional,
    projected: &dyn ChaosFunctional,
    samples: usize,
    seed: &SeedSpec,
) -> Result<Vec<f64>> {
    check_budget(samples)?;
    let seed = seed.substream("projection-outer");
    Ok(mc::replicate(samples, |i| {
        let mut z = vec![0.0; chaos.input_dim()];
        fill_normals(&mut seed.replica(i).rng(), &mut z);
        let a = chaos.eval(&z);
        let b = projected.eval(&z);
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        chaos.output_norm(&d).powi(2)
    }))
}

/// Samples of ‖T(x)‖ for `n` independent inputs.
pub fn norm_samples(chaos: &dyn ChaosFunctional, n: usize, seed: &SeedSpec) -> Vec<f64> {
    let seed = seed.substream("norm-samples");
    mc::replicate(n, |i| {
        let mut z = vec![0.0; chaos.input_dim()];
        fill_normals(&mut seed.replica(i).rng(), &mut z);
        chaos.output_norm(&chaos.eval(&z))
    })
}

/// Estimated moments of ‖T‖.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChaosMoments {
    pub samples: usize,
    pub second: Estimate,
    /// (p, E‖T‖^{2p}) pairs.
    pub higher: Vec<(f64, Estimate)>,
}

pub fn chaos_moments(norms: &[f64], p_list: &[f64]) -> ChaosMoments {
    let pow = |p: f64| Estimate::from_samples(&norms.iter().map(|v| v.powf(2.0 * p)).collect::<Vec<_>>());
    ChaosMoments { samples: norms.len(), second: pow(1.0), higher: p_list.iter().map(|&p| (p, pow(p))).collect() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HyperVerdict {
    Ratio { ratio: f64, ci_low: f64, ci_high: f64 },
    /// T vanished on every sample.
    ExactZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperRow {
    pub p: f64,
    pub verdict: HyperVerdict,
}

const BOOTSTRAP: usize = 200;

fn hyper_ratio(norms: &[f64], idx: Option<&[usize]>, p: f64, k: usize) -> f64 {
    let n = norms.len();
    let get = |i: usize| match idx {
        Some(ix) => norms[ix[i]],
        None => norms[i],
    };
    let (mut m2, mut m2p) = (0.0, 0.0);
    for i in 0..n {
        let v = get(i);
        m2 += v * v;
        m2p += v.powf(2.0 * p);
    }
    let (m2, m2p) = (m2 / n as f64, m2p / n as f64);
    m2p / ((2.0 * p - 1.0).powf(p * k as f64) * m2.powf(p))
}

/// Empirical E‖T‖^{2p} / ((2p−1)^{pk} (E‖T‖²)^p) with a 95% percentile bootstrap interval.
pub fn hypercontractivity_report(norms: &[f64], order: usize, p_list: &[f64], seed: &SeedSpec) -> Result<Vec<HyperRow>> {
    if norms.len() < 2 {
        return Err(Error::Power("hypercontractivity needs at least two samples".into()));
    }
    if let Some(p) = p_list.iter().find(|p| !(**p >= 1.0)) {
        return Err(Error::Input(format!("moment index p must be >= 1, got {p}")));
    }
    if norms.iter().all(|v| *v == 0.0) {
        return Ok(p_list.iter().map(|&p| HyperRow { p, verdict: HyperVerdict::ExactZero }).collect());
    }
    let n = norms.len();
    let seed = seed.substream("bootstrap");
    let boots: Vec<Vec<usize>> = mc::replicate(BOOTSTRAP, |b| {
        use rand::Rng;
        let mut rng = seed.replica(b).rng();
        (0..n).map(|_| rng.random_range(0..n)).collect()
    });
    Ok(p_list
        .iter()
        .map(|&p| {
            let ratio = hyper_ratio(norms, None, p, order);
            let mut rs: Vec<f64> = boots.iter().map(|ix| hyper_ratio(norms, Some(ix), p, order)).collect();
            rs.sort_by(f64::total_cmp);
            HyperRow {
                p,
                verdict: HyperVerdict::Ratio {
                    ratio,
                    ci_low: stats::quantile(&rs, 0.025),
                    ci_high: stats::quantile(&rs, 0.975),
                },
            }
        })
        .collect())
}

/// Minimum sample count for a tail fit.
pub const TAIL_MIN_SAMPLES: usize = 100_000;
/// Minimum number of exceedances in the fitted top decile.
pub const TAIL_MIN_EXCEEDANCES: usize = 50;

/// OLS of log empirical survival against (u/‖T‖_{L²})^{2/k} over the top decile.
pub fn tail_fit(norms: &[f64], order: usize) -> Result<LineFit> {
    if norms.len() < TAIL_MIN_SAMPLES {
        return Err(Error::Power(format!(
            "tail fit needs at least {TAIL_MIN_SAMPLES} samples, got {}",
            norms.len()
        )));
    }
    let n = norms.len();
    let l2 = (norms.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let mut sorted = norms.to_vec();
    sorted.sort_by(f64::total_cmp);
    let threshold = stats::quantile(&sorted, 0.9);
    let start = sorted.partition_point(|v| *v <= threshold);
    let exceed = n - start;
    if exceed < TAIL_MIN_EXCEEDANCES || l2 == 0.0 {
        return Err(Error::Power(format!(
            "only {exceed} exceedances above the 90% quantile (need {TAIL_MIN_EXCEEDANCES})"
        )));
    }
    let e = 2.0 / order as f64;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    // Survival at the i-th order statistic; the largest TAIL_MIN_EXCEEDANCES/5
    // points are dropped since their survival estimate rests on a handful of samples.
    for i in start..n - TAIL_MIN_EXCEEDANCES / 5 {
        if i > start && sorted[i] == sorted[i - 1] {
            continue;
        }
        xs.push((sorted[i] / l2).powf(e));
        ys.push(((n - i) as f64 / n as f64).ln());
    }
    stats::ols(&xs, &ys)
}
