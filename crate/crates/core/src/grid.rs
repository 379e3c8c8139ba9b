//! Uniform time grids, space-time grids, and the sampled objects living on them.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) || t0 >= t1 {
            return Err(Error::Input(format!("time grid needs t0 < t1, got [{t0}, {t1}]")));
        }
        if n < 2 {
            return Err(Error::Input(format!("time grid needs n >= 2, got {n}")));
        }
        Ok(Self { t0, t1, n })
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / (self.n - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.t1
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.time(i)).collect()
    }

    /// Index of a node equal to `t` up to rounding, if any.
    pub fn node_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt();
        let r = x.round();
        if (x - r).abs() < 1e-9 && r >= 0.0 && (r as usize) < self.n {
            Some(r as usize)
        } else {
            None
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        let tol = 1e-12 * (self.t1 - self.t0);
        t >= self.t0 - tol && t <= self.t1 + tol
    }
}

/// Piecewise-linear interpolation of node values; `None` outside the grid.
pub fn interp(grid: &TimeGrid, values: &[f64], t: f64) -> Option<f64> {
    if !grid.contains(t) {
        return None;
    }
    let x = ((t - grid.t0) / grid.dt()).clamp(0.0, (grid.n - 1) as f64);
    let i = (x.floor() as usize).min(grid.n - 2);
    let w = x - i as f64;
    if w == 0.0 {
        return Some(values[i]);
    }
    Some(values[i] * (1.0 - w) + values[i + 1] * w)
}

/// A d-dimensional trajectory sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub grid: TimeGrid,
    pub components: Vec<Vec<f64>>,
}

impl Path {
    pub fn new(grid: TimeGrid, components: Vec<Vec<f64>>) -> Result<Self> {
        for (j, c) in components.iter().enumerate() {
            if c.len() != grid.n {
                return Err(Error::Structural(format!(
                    "component {j} has {} values, grid has {} nodes",
                    c.len(),
                    grid.n
                )));
            }
            ensure_finite(c, "path component")?;
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: TimeGrid, d: usize) -> Self {
        Self { grid, components: vec![vec![0.0; grid.n]; d] }
    }

    /// Scalar path from a function of time.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        Self { grid, components: vec![grid.times().into_iter().map(f).collect()] }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.components[j]
    }

    /// Maximum over components and nodes of the absolute value.
    pub fn sup_norm(&self) -> f64 {
        self.components.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &Path) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .components
            .iter()
            .zip(&other.components)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }

    pub fn check_same_shape(&self, other: &Path) -> Result<()> {
        if self.grid != other.grid || self.dim() != other.dim() {
            return Err(Error::Structural("paths live on different grids or dimensions".into()));
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Path {
        Path {
            grid: self.grid,
            components: self.components.iter().map(|v| v.iter().map(|x| c * x).collect()).collect(),
        }
    }

    pub fn add(&self, other: &Path) -> Result<Path> {
        self.check_same_shape(other)?;
        Ok(Path {
            grid: self.grid,
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        })
    }

    pub fn increments(&self, j: usize) -> Vec<f64> {
        self.components[j].windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.dim()).map(|j| format!("value{j}")));
        wr.write_record(&header)?;
        for i in 0..self.grid.n {
            let mut row = vec![format!("{:e}", self.grid.time(i))];
            row.extend(self.components.iter().map(|c| format!("{:e}", c[i])));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Uniform grid on [0, T] x [-L, L] with `nt` time nodes and `nx` space nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub t_max: f64,
    pub nt: usize,
    pub half_width: f64,
    pub nx: usize,
}

impl SpaceTimeGrid {
    pub fn new(t_max: f64, nt: usize, half_width: f64, nx: usize) -> Result<Self> {
        if !(t_max > 0.0 && half_width > 0.0 && t_max.is_finite() && half_width.is_finite()) {
            return Err(Error::Input(format!("space-time box needs T > 0 and L > 0, got T={t_max}, L={half_width}")));
        }
        if nt < 2 || nx < 3 {
            return Err(Error::Input(format!("space-time grid too small: nt={nt}, nx={nx}")));
        }
        Ok(Self { t_max, nt, half_width, nx })
    }

    pub fn dt(&self) -> f64 {
        self.t_max / (self.nt - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / (self.nx - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    pub fn cells(&self) -> usize {
        self.nt * self.nx
    }

    /// Index of the spatial node nearest to `x`.
    pub fn nearest_x(&self, x: f64) -> usize {
        (((x + self.half_width) / self.dx()).round().max(0.0) as usize).min(self.nx - 1)
    }

    pub fn nearest_t(&self, t: f64) -> usize {
        ((t / self.dt()).round().max(0.0) as usize).min(self.nt - 1)
    }
}

/// Values on a space-time grid, row-major with time as the slow index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub grid: SpaceTimeGrid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: SpaceTimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::Structural(format!("field has {} values, grid has {} cells", values.len(), grid.cells())));
        }
        ensure_finite(&values, "field")?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpaceTimeGrid) -> Self {
        Self { grid, values: vec![0.0; grid.cells()] }
    }

    pub fn from_fn(grid: SpaceTimeGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.cells());
        for i in 0..grid.nt {
            for j in 0..grid.nx {
                values.push(f(grid.t(i), grid.x(j)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.nx + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.grid.nx + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.grid.nx..(i + 1) * self.grid.nx]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Bilinear interpolation; `None` outside the grid.
    pub fn interp(&self, t: f64, x: f64) -> Option<f64> {
        let g = &self.grid;
        let tol = 1e-12;
        if t < -tol || t > g.t_max * (1.0 + tol) || x.abs() > g.half_width * (1.0 + tol) {
            return None;
        }
        let u = (t / g.dt()).clamp(0.0, (g.nt - 1) as f64);
        let v = ((x + g.half_width) / g.dx()).clamp(0.0, (g.nx - 1) as f64);
        let i = (u.floor() as usize).min(g.nt - 2);
        let j = (v.floor() as usize).min(g.nx - 2);
        let a = u - i as f64;
        let b = v - j as f64;
        Some(
            (1.0 - a) * ((1.0 - b) * self.at(i, j) + b * self.at(i, j + 1))
                + a * ((1.0 - b) * self.at(i + 1, j) + b * self.at(i + 1, j + 1)),
        )
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "x", "value"])?;
        for i in 0..self.grid.nt {
            for j in 0..self.grid.nx {
                wr.write_record([
                    format!("{:e}", self.grid.t(i)),
                    format!("{:e}", self.grid.x(j)),
                    format!("{:e}", self.at(i, j)),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}
