//! Stochastic heat equations, Cole–Hopf KPZ, the compact-set membership
//! functionals and the parabolic Hölder norm.
//!
//! All solvers integrate ∂ₜ = ∂ₓ² on [0, T] × [−L, L] with Dirichlet data
//! (0 for h, 1 for z) and zero (resp. unit) initial data. Forcing row n
//! drives the step from t_n to t_{n+1}, matching the cell convention of
//! [`crate::gaussian_sim::sample_white_noise`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cm_space::heat_solve_residual;
use crate::error::{Error, Result};
use crate::grid::{Field, SpaceTimeGrid};
use crate::limit_set::loglog_normalizer;

/// (2πt)^{-d/2} e^{-|x|²/2t} for t > 0 and 0 otherwise; `x` is the radius when d > 1.
pub fn heat_kernel(t: f64, x: f64, d: u32) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    (2.0 * PI * t).powf(-(d as f64) / 2.0) * (-x * x / (2.0 * t)).exp()
}

/// Green's function of ∂ₜ − ∂ₓ² in one dimension, p_{2t}(x).
pub fn green_kernel(t: f64, x: f64) -> f64 {
    heat_kernel(2.0 * t, x, 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scheme {
    #[default]
    CrankNicolson,
    Explicit,
}

/// How a forcing field enters each time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForcingRule {
    /// Row n drives step n (white noise).
    Cell,
    /// Average of rows n and n+1 (smooth deterministic forcing).
    Trapezoid,
}

pub fn check_cfl(grid: &SpaceTimeGrid) -> Result<()> {
    let (dt, dx) = (grid.dt(), grid.dx());
    if dt > 0.5 * dx * dx * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "explicit scheme violates the CFL bound: Δt = {dt:e} > Δx²/2 = {:e}",
            0.5 * dx * dx
        )));
    }
    Ok(())
}

/// Additive SHE ∂ₜh = ∂ₓ²h + ξ with cellwise noise, Crank–Nicolson by default.
pub fn solve_she_additive(grid: &SpaceTimeGrid, noise: &Field, scheme: Scheme) -> Result<Field> {
    solve_heat_forced(grid, noise, scheme, ForcingRule::Cell)
}

/// ∂ₜh = ∂ₓ²h + f, h(0) = 0, h(±L) = 0.
pub fn solve_heat_forced(grid: &SpaceTimeGrid, forcing: &Field, scheme: Scheme, rule: ForcingRule) -> Result<Field> {
    if forcing.grid != *grid {
        return Err(Error::Structural("forcing grid differs from the solver grid".into()));
    }
    let (nt, nx) = (grid.nt, grid.nx);
    let w = nx - 2;
    let step_force = |n: usize, j: usize| match rule {
        ForcingRule::Cell => forcing.at(n, j),
        ForcingRule::Trapezoid => 0.5 * (forcing.at(n, j) + forcing.at(n + 1, j)),
    };
    let mut out = Field::zeros(*grid);
    match scheme {
        Scheme::CrankNicolson => {
            let mut res = Vec::with_capacity((nt - 1) * w);
            for n in 0..nt - 1 {
                for j in 1..=w {
                    res.push(step_force(n, j));
                }
            }
            let interior = heat_solve_residual(grid, &res);
            for n in 1..nt {
                for j in 1..=w {
                    out.set(n, j, interior[(n - 1) * w + j - 1]);
                }
            }
        }
        Scheme::Explicit => {
            check_cfl(grid)?;
            let dt = grid.dt();
            let r = dt / (grid.dx() * grid.dx());
            for n in 0..nt - 1 {
                for j in 1..=w {
                    let (l, c, rr) = (out.at(n, j - 1), out.at(n, j), out.at(n, j + 1));
                    out.set(n + 1, j, c + r * (l - 2.0 * c + rr) + dt * step_force(n, j));
                }
            }
        }
    }
    Ok(out)
}

/// Values below this are floored (and counted) by the multiplicative solver.
pub const Z_FLOOR: f64 = 1e-300;
/// Largest tolerated fraction of floored cells.
pub const FLOOR_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicativeSolution {
    pub z: Field,
    pub floored: usize,
}

/// Itô–Euler scheme for ∂ₜz = ∂ₓ²z + δ z ξ, z(0) = 1, z(±L) = 1.
///
/// Cells that would drop below [`Z_FLOOR`] are set to it and counted; more
/// than [`FLOOR_LIMIT`] of all updated cells is a reliability error.
pub fn solve_she_multiplicative(grid: &SpaceTimeGrid, noise: &Field, delta: f64) -> Result<MultiplicativeSolution> {
    if noise.grid != *grid {
        return Err(Error::Structural("noise grid differs from the solver grid".into()));
    }
    check_cfl(grid)?;
    let (nt, nx) = (grid.nt, grid.nx);
    let dt = grid.dt();
    let r = dt / (grid.dx() * grid.dx());
    let mut z = Field::new(*grid, vec![1.0; grid.cells()])?;
    let mut floored = 0usize;
    for n in 0..nt - 1 {
        for j in 1..nx - 1 {
            let (l, c, rr) = (z.at(n, j - 1), z.at(n, j), z.at(n, j + 1));
            let mut v = c + r * (l - 2.0 * c + rr) + delta * c * noise.at(n, j) * dt;
            if !(v >= Z_FLOOR) {
                v = Z_FLOOR;
                floored += 1;
            }
            z.set(n + 1, j, v);
        }
    }
    let updated = (nt - 1) * (nx - 2);
    if floored as f64 > FLOOR_LIMIT * updated as f64 {
        return Err(Error::Reliability(format!(
            "{floored} of {updated} cells hit the positivity floor; refine Δt"
        )));
    }
    Ok(MultiplicativeSolution { z, floored })
}

/// C_ε = (log log 1/ε)^{1/2}.
pub fn kpz_constant(eps: f64) -> Result<f64> {
    Ok(loglog_normalizer(eps)? / 2f64.sqrt())
}

/// The observation box [0, s] × [−y, y].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub s: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KpzConfig {
    pub domain: BoxDomain,
    pub eps: Vec<f64>,
    /// Grid on which z is solved and the noise lives.
    pub grid: SpaceTimeGrid,
    /// Comparison grid sizes (time nodes, space nodes) on the box.
    pub comparison_nt: usize,
    pub comparison_nx: usize,
}

/// Minimum number of solver cells across the rescaled box in each direction.
pub const KPZ_MIN_CELLS: f64 = 4.0;

impl KpzConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.domain.s > 0.0 && self.domain.y > 0.0) {
            return Err(Error::Config("box needs s > 0 and y > 0".into()));
        }
        if self.eps.is_empty() {
            return Err(Error::Config("ε list is empty".into()));
        }
        check_cfl(&self.grid)?;
        for &e in &self.eps {
            loglog_normalizer(e)?;
            if e * e * self.domain.s > self.grid.t_max * (1.0 + 1e-12) {
                return Err(Error::Config(format!("ε = {e}: rescaled horizon ε²s exceeds T = {}", self.grid.t_max)));
            }
            if 4.0 * e * self.domain.y > self.grid.half_width {
                return Err(Error::Config(format!(
                    "ε = {e}: domain half-width {} is below 4εy = {}",
                    self.grid.half_width,
                    4.0 * e * self.domain.y
                )));
            }
            if e * self.domain.y / self.grid.dx() < KPZ_MIN_CELLS || e * e * self.domain.s / self.grid.dt() < KPZ_MIN_CELLS {
                return Err(Error::Resolution(format!("ε = {e}: the rescaled box spans fewer than {KPZ_MIN_CELLS} solver cells")));
            }
        }
        if self.comparison_nt < 2 || self.comparison_nx < 3 {
            return Err(Error::Config("comparison grid too small".into()));
        }
        Ok(())
    }

    pub fn comparison_grid(&self) -> Result<SpaceTimeGrid> {
        SpaceTimeGrid::new(self.domain.s, self.comparison_nt, self.domain.y, self.comparison_nx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpzMember {
    pub eps: f64,
    pub c_eps: f64,
    /// C_ε^{-1} ε^{-1/2} h(ε² t, ε x) on the comparison grid.
    pub field: Field,
    pub floored: usize,
}

/// Cole–Hopf KPZ fields for every ε, all driven by the same noise realization.
pub fn cole_hopf_kpz(config: &KpzConfig, noise: &Field) -> Result<Vec<KpzMember>> {
    config.validate()?;
    if noise.grid != config.grid {
        return Err(Error::Structural("noise grid differs from the configured solver grid".into()));
    }
    let cmp = config.comparison_grid()?;
    config
        .eps
        .iter()
        .map(|&e| {
            let c = kpz_constant(e)?;
            let sol = solve_she_multiplicative(&config.grid, noise, c)?;
            let h = Field::new(config.grid, sol.z.values.iter().map(|v| v.ln() / c).collect())?;
            let amp = 1.0 / (c * e.sqrt());
            let mut out = Field::zeros(cmp);
            for i in 0..cmp.nt {
                for j in 0..cmp.nx {
                    let v = h
                        .interp(e * e * cmp.t(i), e * cmp.x(j))
                        .ok_or_else(|| Error::Range(format!("ε = {e}: box point outside the solver grid")))?;
                    out.set(i, j, amp * v);
                }
            }
            Ok(KpzMember { eps: e, c_eps: c, field: out, floored: sol.floored })
        })
        .collect()
}

/// h = log z for ∂ₜz = ∂ₓ²z + f z, the classical Cole–Hopf transform of a smooth forcing.
pub fn cole_hopf_deterministic(grid: &SpaceTimeGrid, forcing: &Field) -> Result<Field> {
    let sol = solve_she_multiplicative(grid, forcing, 1.0)?;
    Field::new(*grid, sol.z.values.iter().map(|v| v.ln()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MembershipVariant {
    /// ‖∂ₜh − ∂ₓ²h − (∂ₓh)²‖_{L²(box)}
    Zero,
    /// ‖∂ₜh − ∂ₓ²h‖_{L²(box)}
    Linear,
    /// √(‖∂ₓh(0,·)‖² + ‖∂ₜh − ∂ₓ²h − (∂ₓh)²‖²)
    BrownianInit,
}

/// Spatial Gaussian smoothing with σ = 2Δx, truncated at 4σ.
pub fn smooth_field(f: &Field) -> Field {
    let g = f.grid;
    let taps = 8usize;
    let w: Vec<f64> = (0..=taps).map(|k| (-(k as f64 / 2.0).powi(2) / 2.0).exp()).collect();
    let mut out = Field::zeros(g);
    for i in 0..g.nt {
        let row = f.row(i);
        for j in 0..g.nx {
            let (mut acc, mut mass) = (0.0, 0.0);
            for k in -(taps as isize)..=taps as isize {
                let jj = j as isize + k;
                if jj < 0 || jj >= g.nx as isize {
                    continue;
                }
                let wk = w[k.unsigned_abs()];
                acc += wk * row[jj as usize];
                mass += wk;
            }
            out.set(i, j, acc / mass);
        }
    }
    out
}

fn box_nodes(g: &SpaceTimeGrid, domain: &BoxDomain) -> Result<(usize, usize, usize)> {
    let tol = 1e-9;
    if domain.s > g.t_max * (1.0 + tol) || domain.y > g.half_width * (1.0 + tol) {
        return Err(Error::Structural(format!(
            "box [0,{}]x[-{},{}] exceeds the field extent [0,{}]x[-{},{}]",
            domain.s, domain.y, domain.y, g.t_max, g.half_width, g.half_width
        )));
    }
    let i_max = ((domain.s / g.dt()) + tol).floor() as usize;
    let j_lo = ((-domain.y + g.half_width) / g.dx() - tol).ceil() as usize;
    let j_hi = ((domain.y + g.half_width) / g.dx() + tol).floor() as usize;
    Ok((i_max.min(g.nt - 1), j_lo, j_hi.min(g.nx - 1)))
}

/// Trapezoid weight of node k in the closed index range [lo, hi].
fn trap(k: usize, lo: usize, hi: usize) -> f64 {
    if lo == hi {
        1.0
    } else if k == lo || k == hi {
        0.5
    } else {
        1.0
    }
}

/// Compact-set membership value of `field` on the box.
///
/// Derivatives are central differences (one-sided at the box edges that
/// coincide with the field edges); the L² norm uses the trapezoid rule.
pub fn membership_functional(variant: MembershipVariant, field: &Field, domain: &BoxDomain, smooth: bool) -> Result<f64> {
    let f = if smooth { smooth_field(field) } else { field.clone() };
    let g = f.grid;
    let (i_max, j_lo, j_hi) = box_nodes(&g, domain)?;
    if i_max < 1 || j_hi < j_lo + 2 {
        return Err(Error::Resolution("box holds too few grid nodes for second differences".into()));
    }
    let (dt, dx) = (g.dt(), g.dx());
    let dtime = |i: usize, j: usize| {
        if i == 0 {
            (f.at(1, j) - f.at(0, j)) / dt
        } else if i == g.nt - 1 {
            (f.at(i, j) - f.at(i - 1, j)) / dt
        } else {
            (f.at(i + 1, j) - f.at(i - 1, j)) / (2.0 * dt)
        }
    };
    let dspace = |i: usize, j: usize| {
        if j == 0 {
            (f.at(i, 1) - f.at(i, 0)) / dx
        } else if j == g.nx - 1 {
            (f.at(i, j) - f.at(i, j - 1)) / dx
        } else {
            (f.at(i, j + 1) - f.at(i, j - 1)) / (2.0 * dx)
        }
    };
    let lap = |i: usize, j: usize| {
        let jc = j.clamp(1, g.nx - 2);
        (f.at(i, jc - 1) - 2.0 * f.at(i, jc) + f.at(i, jc + 1)) / (dx * dx)
    };
    let quadratic = !matches!(variant, MembershipVariant::Linear);
    let mut sq = 0.0;
    for i in 0..=i_max {
        for j in j_lo..=j_hi {
            let mut r = dtime(i, j) - lap(i, j);
            if quadratic {
                r -= dspace(i, j).powi(2);
            }
            sq += trap(i, 0, i_max) * trap(j, j_lo, j_hi) * r * r * dt * dx;
        }
    }
    if variant == MembershipVariant::BrownianInit {
        for j in j_lo..=j_hi {
            sq += trap(j, j_lo, j_hi) * dspace(0, j).powi(2) * dx;
        }
    }
    Ok(sq.sqrt())
}

/// ‖f‖_{L²(box)} by the trapezoid rule on the field's nodes.
pub fn l2_box_norm(field: &Field, domain: &BoxDomain) -> Result<f64> {
    let g = field.grid;
    let (i_max, j_lo, j_hi) = box_nodes(&g, domain)?;
    let mut sq = 0.0;
    for i in 0..=i_max {
        for j in j_lo..=j_hi {
            sq += trap(i, 0, i_max) * trap(j, j_lo, j_hi) * field.at(i, j).powi(2);
        }
    }
    Ok((sq * g.dt() * g.dx()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HolderMode {
    FullPairwise,
    /// Offsets restricted to powers of two (and the full span) in each direction.
    Dyadic,
}

fn dyadic_offsets(span: usize) -> Vec<usize> {
    let mut v = vec![0];
    let mut d = 1;
    while d <= span {
        v.push(d);
        d *= 2;
    }
    if *v.last().unwrap() != span {
        v.push(span);
    }
    v
}

/// sup|h| + max |h(p) − h(q)| / (|Δt|^{α/2} + |Δx|^α) over node pairs in the box.
///
/// The dyadic mode is a lower bound of the full pairwise value.
pub fn parabolic_holder_norm(field: &Field, alpha: f64, domain: &BoxDomain, mode: HolderMode) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("Hölder exponent must lie in (0, 1), got {alpha}")));
    }
    let g = field.grid;
    let (i_max, j_lo, j_hi) = box_nodes(&g, domain)?;
    let (dt, dx) = (g.dt(), g.dx());
    let mut sup: f64 = 0.0;
    for i in 0..=i_max {
        for j in j_lo..=j_hi {
            sup = sup.max(field.at(i, j).abs());
        }
    }
    let (ti, xj) = (i_max, j_hi - j_lo);
    let (offs_t, offs_x): (Vec<usize>, Vec<usize>) = match mode {
        HolderMode::FullPairwise => ((0..=ti).collect(), (0..=xj).collect()),
        HolderMode::Dyadic => (dyadic_offsets(ti), dyadic_offsets(xj)),
    };
    let mut semi: f64 = 0.0;
    for &a in &offs_t {
        for &b in &offs_x {
            if a == 0 && b == 0 {
                continue;
            }
            let denom = (a as f64 * dt).powf(alpha / 2.0) + (b as f64 * dx).powf(alpha);
            for i in 0..=i_max - a {
                for j in j_lo..=j_hi - b {
                    let p = field.at(i, j);
                    // Both diagonal orientations.
                    let d1 = (field.at(i + a, j + b) - p).abs();
                    let d2 = (field.at(i + a, j) - field.at(i, j + b)).abs();
                    semi = semi.max(d1.max(d2) / denom);
                }
            }
        }
    }
    Ok(sup + semi)
}
