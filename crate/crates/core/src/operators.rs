//! Measure-preserving scaling families and operator diagnostics.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cm_space::{bin_frequency, cm_inner, fbm_norm_constant, moments, orthonormal_basis, origin_correction, spectrum, HVector, HilbertModel};
use crate::error::{Error, Result};
use crate::grid::{interp, Field, Path, SpaceTimeGrid};
use crate::stats::{ols, LineFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ScalingFamily {
    /// f ↦ ε^{-1/2} f(ε·)
    BrownianScale,
    /// f ↦ ε^{-H} f(ε·)
    FbmScale { hurst: f64 },
    /// ξ ↦ ε^{(d+2)/2} ξ(ε²·, ε·)
    NoiseScale { d: u32 },
    /// h ↦ ε^{d/2-1} h(ε²·, ε·)
    SheScale { d: u32 },
    /// x ↦ (x_{j+n})_j
    SequenceShift,
}

impl ScalingFamily {
    pub fn label(&self) -> String {
        match self {
            ScalingFamily::BrownianScale => "BrownianScale".into(),
            ScalingFamily::FbmScale { hurst } => format!("FbmScale(H={hurst})"),
            ScalingFamily::NoiseScale { d } => format!("NoiseScale(d={d})"),
            ScalingFamily::SheScale { d } => format!("SheScale(d={d})"),
            ScalingFamily::SequenceShift => "SequenceShift".into(),
        }
    }

    /// Exponent `a` in R_ε f = ε^a f(ε^{time}·, ε·) for the continuous families.
    pub fn amplitude_exponent(&self) -> Option<f64> {
        match *self {
            ScalingFamily::BrownianScale => Some(-0.5),
            ScalingFamily::FbmScale { hurst } => Some(-hurst),
            ScalingFamily::NoiseScale { d } => Some((d as f64 + 2.0) / 2.0),
            ScalingFamily::SheScale { d } => Some(d as f64 / 2.0 - 1.0),
            ScalingFamily::SequenceShift => None,
        }
    }
}

/// Objects the scaling families act on.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalable {
    Path(Path),
    Field(Field),
    Sequence(Vec<f64>),
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("scaling parameter must lie in (0,1], got {eps}")));
    }
    Ok(())
}

/// Apply R_param to an object. For `SequenceShift` the parameter is the step count n.
pub fn apply_scaling(family: &ScalingFamily, param: f64, obj: &Scalable) -> Result<Scalable> {
    match (family, obj) {
        (ScalingFamily::SequenceShift, Scalable::Sequence(v)) => {
            if !(param >= 0.0 && param.fract() == 0.0) {
                return Err(Error::Domain(format!("shift count must be a nonnegative integer, got {param}")));
            }
            Ok(Scalable::Sequence(shift_sequence(v, param as usize)))
        }
        (ScalingFamily::BrownianScale | ScalingFamily::FbmScale { .. }, Scalable::Path(p)) => {
            Ok(Scalable::Path(rescale_path(p, param, family.amplitude_exponent().unwrap())?))
        }
        (ScalingFamily::NoiseScale { .. } | ScalingFamily::SheScale { .. }, Scalable::Field(f)) => {
            Ok(Scalable::Field(rescale_field(family, param, f)?))
        }
        _ => Err(Error::Structural(format!("{} does not act on this object", family.label()))),
    }
}

/// (S_n x)_j = x_{j+n}.
pub fn shift_sequence(v: &[f64], n: usize) -> Vec<f64> {
    v.get(n..).map(|s| s.to_vec()).unwrap_or_default()
}

/// t ↦ ε^{exponent} p(εt) on the same grid, by linear interpolation.
pub fn rescale_path(p: &Path, eps: f64, exponent: f64) -> Result<Path> {
    check_eps(eps)?;
    if eps == 1.0 {
        return Ok(p.clone());
    }
    let g = p.grid;
    let span = g.t1.abs().max(g.t0.abs());
    if eps * span < g.dt() {
        return Err(Error::Resolution(format!("ε = {eps:e} maps the whole grid inside one cell")));
    }
    let amp = eps.powf(exponent);
    let times = g.times();
    let components = p
        .components
        .iter()
        .map(|v| {
            times
                .iter()
                .map(|&t| {
                    interp(&g, v, eps * t)
                        .map(|x| amp * x)
                        .ok_or_else(|| Error::Range(format!("ε t = {} leaves the grid [{}, {}]", eps * t, g.t0, g.t1)))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Path::new(g, components)
}

/// Parabolic field scaling by relabelling the grid: Δt' = Δt/ε², Δx' = Δx/ε.
///
/// Node values are multiplied by ε^a. For white noise this is exactly the
/// pairing convention (R_ε ξ, φ) = (ξ, R_ε* φ) on cellwise-constant noise.
pub fn rescale_field(family: &ScalingFamily, eps: f64, f: &Field) -> Result<Field> {
    check_eps(eps)?;
    let a = match family {
        ScalingFamily::NoiseScale { .. } | ScalingFamily::SheScale { .. } => family.amplitude_exponent().unwrap(),
        _ => return Err(Error::Structural(format!("{} does not act on fields", family.label()))),
    };
    if eps == 1.0 {
        return Ok(f.clone());
    }
    let g = f.grid;
    let grid = SpaceTimeGrid::new(g.t_max / (eps * eps), g.nt, g.half_width / eps, g.nx)?;
    let amp = eps.powf(a);
    Field::new(grid, f.values.iter().map(|v| amp * v).collect())
}

/// Bilinear resampling of a field onto a (smaller) comparison grid.
pub fn resample_field(f: &Field, target: &SpaceTimeGrid) -> Result<Field> {
    let mut values = Vec::with_capacity(target.cells());
    for i in 0..target.nt {
        for j in 0..target.nx {
            let (t, x) = (target.t(i), target.x(j));
            values.push(f.interp(t, x).ok_or_else(|| {
                Error::Range(format!("comparison point ({t}, {x}) lies outside the rescaled field"))
            })?);
        }
    }
    Field::new(*target, values)
}

/// Four-point Lagrange interpolation of midpoint samples y_c at a + (c+½)h.
fn midpoint_cubic(y: &[f64], a: f64, h: f64, t: f64) -> f64 {
    let n = y.len();
    let s = (t - a) / h - 0.5;
    let i = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let u = s - i as f64;
    let (y0, y1, y2, y3) = (y[i], y[i + 1], y[i + 2], y[i + 3]);
    let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    l0 * y0 + l1 * y1 + l2 * y2 + l3 * y3
}

/// R_δ on a Cameron–Martin element; δ may exceed 1 (adjoints of contractions).
pub fn scale_hvector(family: &ScalingFamily, delta: f64, v: &HVector) -> Result<HVector> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("scaling parameter must be positive, got {delta}")));
    }
    if delta == 1.0 {
        return Ok(v.clone());
    }
    match (family, v.model) {
        (ScalingFamily::BrownianScale, HilbertModel::H01Interval { a, b, cells }) => {
            if a != 0.0 {
                return Err(Error::Structural("Brownian scaling needs an interval starting at 0".into()));
            }
            let h = (b - a) / cells as f64;
            let amp = delta.sqrt();
            let repr = (0..cells)
                .map(|c| {
                    let t = (c as f64 + 0.5) * h * delta;
                    if t < b {
                        amp * midpoint_cubic(&v.repr, a, h, t)
                    } else {
                        0.0
                    }
                })
                .collect();
            HVector::new(v.model, repr)
        }
        (ScalingFamily::FbmScale { hurst }, HilbertModel::FbmFourier { hurst: mh, .. }) => {
            if (hurst - mh).abs() > 1e-15 {
                return Err(Error::Structural(format!("FbmScale(H={hurst}) on a model with H={mh}")));
            }
            let vals = trig_dilate(&v.repr, delta);
            let amp = delta.powf(-hurst);
            HVector::new(v.model, vals.into_iter().map(|x| amp * x).collect())
        }
        _ => Err(Error::Capability(format!(
            "{} has no Cameron–Martin action on the {} model",
            family.label(),
            v.model.variant_name()
        ))),
    }
}

/// Adjoint R_ε* on a Cameron–Martin element.
///
/// For Brownian scaling on [0, b]: (R_ε* g)' = ε^{-1/2} g'(·/ε) on [0, εb), zero after.
/// For fBM on the line R_ε is unitary and R_ε* = R_{1/ε}.
pub fn adjoint_hvector(family: &ScalingFamily, eps: f64, v: &HVector) -> Result<HVector> {
    check_eps(eps)?;
    match (family, v.model) {
        (ScalingFamily::BrownianScale, HilbertModel::H01Interval { a, b, cells }) => {
            if a != 0.0 {
                return Err(Error::Structural("Brownian scaling needs an interval starting at 0".into()));
            }
            let h = (b - a) / cells as f64;
            let amp = eps.powf(-0.5);
            // Cell values are derivative averages, so the cell straddling εb keeps its covered fraction.
            let repr = (0..cells)
                .map(|c| {
                    let lo = c as f64 * h;
                    let frac = ((eps * b - lo) / h).clamp(0.0, 1.0);
                    if frac > 0.0 {
                        frac * amp * midpoint_cubic(&v.repr, a, h, (lo + 0.5 * frac * h) / eps)
                    } else {
                        0.0
                    }
                })
                .collect();
            HVector::new(v.model, repr)
        }
        (ScalingFamily::FbmScale { .. }, HilbertModel::FbmFourier { .. }) => scale_hvector(family, 1.0 / eps, v),
        _ => Err(Error::Capability(format!(
            "{} has no adjoint on the {} model",
            family.label(),
            v.model.variant_name()
        ))),
    }
}

/// Samples of the trigonometric interpolant at δ·x_j for the symmetric window grid x_j = -L + jΔ.
fn trig_dilate(samples: &[f64], delta: f64) -> Vec<f64> {
    let n = samples.len();
    let inv = 1.0 / delta;
    if (inv - inv.round()).abs() < 1e-12 && inv.round() >= 1.0 {
        let m = inv.round() as usize;
        let up = trig_upsample(samples, m);
        let off = (m - 1) * n / 2;
        return (0..n).map(|j| up[off + j]).collect();
    }
    if (delta - delta.round()).abs() < 1e-12 {
        let m = delta.round() as i64;
        let n_i = n as i64;
        let off = (m - 1) * n_i / 2;
        // Points mapped outside the window are outside the support of the element.
        return (0..n_i)
            .map(|j| {
                let k = j * m - off;
                if (0..n_i).contains(&k) {
                    samples[k as usize]
                } else {
                    0.0
                }
            })
            .collect();
    }
    // General ratio: direct evaluation of the interpolant.
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n as f64 / 2.0;
    (0..n)
        .map(|j| {
            // Position relative to the window origin, in sample units.
            let u = delta * (j as f64 - half) + half;
            if !(0.0..n as f64).contains(&u) {
                return 0.0;
            }
            let mut acc = 0.0;
            for (k, z) in buf.iter().enumerate() {
                let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                let w = if n.is_multiple_of(2) && k == n / 2 { 0.5 } else { 1.0 };
                let th = 2.0 * PI * kk * u / n as f64;
                acc += w * (z.re * th.cos() - z.im * th.sin());
                if w == 0.5 {
                    let th2 = -th;
                    acc += w * (z.re * th2.cos() - z.im * th2.sin());
                }
            }
            acc / n as f64
        })
        .collect()
}

/// Exact trigonometric upsampling by an integer factor via zero padding.
fn trig_upsample(samples: &[f64], m: usize) -> Vec<f64> {
    let n = samples.len();
    if m == 1 {
        return samples.to_vec();
    }
    let big = n * m;
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut pad = vec![Complex64::new(0.0, 0.0); big];
    for k in 0..n {
        if k < n / 2 {
            pad[k] = buf[k];
        } else if k > n / 2 {
            pad[big - (n - k)] = buf[k];
        } else {
            pad[k] = buf[k] * 0.5;
            pad[big - k] = buf[k] * 0.5;
        }
    }
    FftPlanner::new().plan_fft_inverse(big).process(&mut pad);
    pad.iter().map(|z| z.re / n as f64).collect()
}

/// Matrix of an operator on a declared orthonormal basis, or on a basis plus frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorMatrix {
    pub matrix: DMatrix<f64>,
    pub basis_label: String,
}

/// ‖M Mᵀ - I‖₂. Rectangular matrices are allowed (rows index the declared basis).
pub fn adjoint_defect(m: &OperatorMatrix) -> f64 {
    let k = m.matrix.nrows();
    let d = &m.matrix * m.matrix.transpose() - DMatrix::<f64>::identity(k, k);
    let sym = (&d + d.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Plain truncation S_ij = ⟨R_ε e_j, e_i⟩_H on the first k basis vectors.
pub fn truncated_matrix(family: &ScalingFamily, model: &HilbertModel, eps: f64, k: usize) -> Result<OperatorMatrix> {
    check_eps(eps)?;
    let basis = orthonormal_basis(model, k)?;
    let images = basis.iter().map(|e| scale_hvector(family, eps, e)).collect::<Result<Vec<_>>>()?;
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = cm_inner(model, &images[j], &basis[i])?;
        }
    }
    Ok(OperatorMatrix { matrix: m, basis_label: format!("{} first {k}", model.variant_name()) })
}

/// Gram-corrected matrix of S = R_ε restricted to the first k basis vectors.
///
/// The frame w_1..w_r is an orthonormalization of {e_i} ∪ {S* e_i}, and
/// M_{i,a} = ⟨S* e_i, w_a⟩ = ⟨e_i, S w_a⟩. Since each S* e_i lies in the
/// frame span, M Mᵀ is exactly the Gram matrix of the S* e_i, so the
/// co-isometry defect is not polluted by the truncation boundary.
pub fn gram_corrected_matrix(family: &ScalingFamily, model: &HilbertModel, eps: f64, k: usize) -> Result<OperatorMatrix> {
    check_eps(eps)?;
    let basis = orthonormal_basis(model, k)?;
    let adj = basis.iter().map(|e| adjoint_hvector(family, eps, e)).collect::<Result<Vec<_>>>()?;
    let mut frame: Vec<HVector> = Vec::new();
    for v in basis.iter().chain(adj.iter()) {
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &frame {
                let c = cm_inner(model, &w, e)?;
                w = w.axpy(-c, e)?;
            }
        }
        let n = cm_inner(model, &w, &w)?.max(0.0).sqrt();
        let scale = cm_inner(model, v, v)?.sqrt();
        if n > 1e-9 * scale.max(1.0) {
            frame.push(w.scaled(1.0 / n));
        }
    }
    let r = frame.len();
    let mut m = DMatrix::zeros(k, r);
    for i in 0..k {
        for a in 0..r {
            m[(i, a)] = cm_inner(model, &adj[i], &frame[a])?;
        }
    }
    Ok(OperatorMatrix {
        matrix: m,
        basis_label: format!("{} first {k} with {r}-vector frame", model.variant_name()),
    })
}

/// ⟨R_ε f, g⟩_H.
///
/// fBM elements use the frequency-domain form
/// K ε^{H+1} ∫ |η|^{2H+1} f̂(η) conj(ĝ(εη)) dη, which stays exact when R_ε f
/// spreads beyond the sampling window.
pub fn mixing_inner(family: &ScalingFamily, model: &HilbertModel, f: &HVector, g: &HVector, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if eps == 1.0 {
        return cm_inner(model, f, g);
    }
    match (family, *model) {
        (&ScalingFamily::FbmScale { hurst }, HilbertModel::FbmFourier { hurst: mh, half_width, samples }) => {
            if (hurst - mh).abs() > 1e-15 {
                return Err(Error::Structural(format!("FbmScale(H={hurst}) on a model with H={mh}")));
            }
            for v in [f, g] {
                if v.model != *model {
                    return Err(Error::Structural("vector does not belong to the model".into()));
                }
            }
            let dx = 2.0 * half_width / samples as f64;
            let sf = spectrum(&f.repr, dx);
            let peak = sf.iter().fold(0.0f64, |a, z| a.max(z.norm()));
            let xs = model.fbm_positions().unwrap();
            let n = samples;
            let mut terms = Vec::new();
            for (k, fk) in sf.iter().enumerate() {
                if fk.norm() <= 1e-17 * peak {
                    continue;
                }
                let eta = bin_frequency(k, n, dx);
                let w = if k == n / 2 { 0.5 } else { 1.0 };
                // True transform f̂(η) = e^{-iη x_0} F_k.
                let fh = fk * Complex64::from_polar(1.0, -eta * xs[0]);
                let mut gh = Complex64::new(0.0, 0.0);
                for (x, gv) in xs.iter().zip(&g.repr) {
                    gh += Complex64::from_polar(*gv, -eps * eta * x);
                }
                gh *= dx;
                terms.push(w * eta.abs().powf(2.0 * hurst + 1.0) * (fh * gh.conj()).re);
            }
            let dxi = 2.0 * PI / (n as f64 * dx);
            let (mf, mg) = (moments(&f.repr, &xs, dx), moments(&g.repr, &xs, dx));
            let sum = dxi * crate::stats::pairwise_sum(&terms) - origin_correction(2.0 * hurst + 1.0, dxi, eps, &mf, &mg);
            Ok(fbm_norm_constant(hurst) * eps.powf(hurst + 1.0) * sum)
        }
        (ScalingFamily::BrownianScale, HilbertModel::H01Interval { .. }) => cm_inner(model, &scale_hvector(family, eps, f)?, g),
        _ => Err(Error::Capability(format!(
            "mixing inner product of {} on the {} model",
            family.label(),
            model.variant_name()
        ))),
    }
}

/// ⟨S_n x, y⟩ for the coordinate shift on ℓ².
pub fn sequence_mixing_inner(x: &[f64], y: &[f64], n: usize) -> f64 {
    shift_sequence(x, n).iter().zip(y).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum MixingSlope {
    Slope(LineFit),
    ExactZero,
}

/// Least-squares slope of log|c(ε)| against log ε.
pub fn slope_from_fn(eps_grid: &[f64], c: impl Fn(f64) -> Result<f64>) -> Result<(MixingSlope, Vec<(f64, f64)>)> {
    if eps_grid.len() < 4 {
        return Err(Error::Input(format!("slope fit needs at least 4 scales, got {}", eps_grid.len())));
    }
    let lo = eps_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eps_grid.iter().cloned().fold(0.0, f64::max);
    if hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::Input(format!("scales span {:.2} decades, need at least 2", (hi / lo).log10())));
    }
    let rows = eps_grid.iter().map(|&e| Ok((e, c(e)?))).collect::<Result<Vec<_>>>()?;
    if rows.iter().any(|(_, v)| v.abs() <= 1e-14) {
        return Ok((MixingSlope::ExactZero, rows));
    }
    let x: Vec<f64> = rows.iter().map(|(e, _)| e.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|(_, v)| v.abs().ln()).collect();
    Ok((MixingSlope::Slope(ols(&x, &y)?), rows))
}

pub fn mixing_slope(
    family: &ScalingFamily,
    model: &HilbertModel,
    f: &HVector,
    g: &HVector,
    eps_grid: &[f64],
) -> Result<(MixingSlope, Vec<(f64, f64)>)> {
    slope_from_fn(eps_grid, |e| mixing_inner(family, model, f, g, e))
}

/// CSV rows (epsilon, inner_product, abs_inner_product).
pub fn write_mixing_csv<W: std::io::Write>(rows: &[(f64, f64)], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["epsilon", "inner_product", "abs_inner_product"])?;
    for (e, v) in rows {
        wr.write_record([format!("{e:e}"), format!("{v:e}"), format!("{:e}", v.abs())])?;
    }
    wr.flush()?;
    Ok(())
}

/// Co-isometries available to the decomposition and spectral diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum CoIsometry {
    Matrix(DMatrix<f64>),
    Shift,
    /// Finite block acting on the first `matrix.nrows()` coordinates, shift on the rest.
    Block(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub unitary_component: Vec<f64>,
    pub vanishing_component: Vec<f64>,
    pub residual: f64,
}

fn check_coisometry(m: &DMatrix<f64>) -> Result<()> {
    let d = adjoint_defect(&OperatorMatrix { matrix: m.clone(), basis_label: String::new() });
    if d > 1e-6 {
        return Err(Error::Precondition(format!("S S* differs from the identity by {d:e}")));
    }
    Ok(())
}

/// S_n* S_n v.
fn project(op: &CoIsometry, v: &[f64], n: usize) -> Vec<f64> {
    let mat_part = |m: &DMatrix<f64>, x: &[f64]| -> Vec<f64> {
        let mut y = nalgebra::DVector::from_column_slice(x);
        let mut p = DMatrix::<f64>::identity(m.nrows(), m.nrows());
        for _ in 0..n {
            p = m * p;
        }
        y = p.transpose() * (&p * y);
        y.iter().cloned().collect()
    };
    let shift_part = |x: &[f64]| -> Vec<f64> { x.iter().enumerate().map(|(i, &a)| if i < n { 0.0 } else { a }).collect() };
    match op {
        CoIsometry::Matrix(m) => mat_part(m, v),
        CoIsometry::Shift => shift_part(v),
        CoIsometry::Block(m) => {
            let k = m.nrows().min(v.len());
            let mut out = mat_part(m, &v[..k]);
            out.extend(shift_part(&v[k..]));
            out
        }
    }
}

/// Split v into S_n* S_n v and its complement.
pub fn unitary_part_projection(op: &CoIsometry, v: &[f64], n: usize) -> Result<DecompositionResult> {
    match op {
        CoIsometry::Matrix(m) | CoIsometry::Block(m) => {
            if m.nrows() != m.ncols() {
                return Err(Error::Structural("decomposition needs a square block".into()));
            }
            if let CoIsometry::Matrix(_) = op {
                if v.len() != m.nrows() {
                    return Err(Error::Structural("vector length differs from the matrix size".into()));
                }
            }
            check_coisometry(m)?;
        }
        CoIsometry::Shift => {}
    }
    let pn = project(op, v, n);
    let pn1 = project(op, v, n + 1);
    let residual = pn.iter().zip(&pn1).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(DecompositionResult {
        vanishing_component: v.iter().zip(&pn).map(|(a, b)| a - b).collect(),
        unitary_component: pn,
        residual,
    })
}

/// (1/n) Σ_{k=1..n} |⟨U^k x, x⟩|.
pub fn spectral_wiener_average(op: &CoIsometry, x: &[f64], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Input("average needs n >= 1".into()));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Input(format!("x must be a unit vector, has norm {norm}")));
    }
    match op {
        CoIsometry::Matrix(u) => {
            if u.nrows() != u.ncols() || u.nrows() != x.len() {
                return Err(Error::Structural("operator and vector sizes differ".into()));
            }
            let k = u.nrows();
            let d = (u.transpose() * u - DMatrix::<f64>::identity(k, k)).norm();
            if d > 1e-8 {
                return Err(Error::Precondition(format!("operator is not unitary (defect {d:e})")));
            }
            let x0 = nalgebra::DVector::from_column_slice(x);
            let mut y = x0.clone();
            let mut acc = 0.0;
            for _ in 0..n {
                y = u * y;
                acc += y.dot(&x0).abs();
            }
            Ok(acc / n as f64)
        }
        CoIsometry::Shift => Ok((1..=n).map(|k| sequence_mixing_inner(x, x, k).abs()).sum::<f64>() / n as f64),
        CoIsometry::Block(_) => Err(Error::Precondition("block co-isometry with a shift part is not unitary".into())),
    }
}

/// Max over the test set of ‖R_ε φ - φ‖ for each ε.
pub fn strong_continuity_defect(
    family: &ScalingFamily,
    norm: impl Fn(&Path) -> f64,
    test_set: &[Path],
    eps_list: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if test_set.is_empty() {
        return Err(Error::Input("strong continuity needs a nonempty test set".into()));
    }
    let a = family
        .amplitude_exponent()
        .filter(|_| matches!(family, ScalingFamily::BrownianScale | ScalingFamily::FbmScale { .. }))
        .ok_or_else(|| Error::Capability(format!("{} is not a path family", family.label())))?;
    eps_list
        .iter()
        .map(|&e| {
            let mut worst = 0.0f64;
            for p in test_set {
                let r = rescale_path(p, e, a)?;
                let diff = Path::new(
                    p.grid,
                    r.components.iter().zip(&p.components).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u - v).collect()).collect(),
                )?;
                worst = worst.max(norm(&diff));
            }
            Ok((e, worst))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    #[test]
    fn brownian_closed_forms() {
        let g = TimeGrid::new(0.0, 1.0, 257).unwrap();
        let f = Path::from_fn(g, |t| t);
        let same = rescale_path(&f, 1.0, -0.5).unwrap();
        assert_eq!(same, f);
        let q = rescale_path(&f, 0.25, -0.5).unwrap();
        for (i, v) in q.components[0].iter().enumerate() {
            assert!((v - 0.5 * g.time(i)).abs() < 1e-15);
        }
        assert!(matches!(rescale_path(&f, 1.5, -0.5), Err(Error::Domain(_))));
        assert!(matches!(rescale_path(&f, 1e-4, -0.5), Err(Error::Resolution(_))));
    }

    #[test]
    fn adjoint_defect_examples() {
        let id = OperatorMatrix { matrix: DMatrix::identity(3, 3), basis_label: "e".into() };
        assert_eq!(adjoint_defect(&id), 0.0);
        let d = OperatorMatrix { matrix: DMatrix::from_diagonal(&nalgebra::dvector![2.0, 1.0]), basis_label: "e".into() };
        assert!((adjoint_defect(&d) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn shift_examples() {
        let e1 = vec![1.0, 0.0, 0.0, 0.0];
        assert_eq!(sequence_mixing_inner(&e1, &e1, 1), 0.0);
        let r = unitary_part_projection(&CoIsometry::Shift, &e1, 1).unwrap();
        assert_eq!(r.unitary_component, vec![0.0; 4]);
        assert_eq!(r.vanishing_component, e1);
        assert_eq!(spectral_wiener_average(&CoIsometry::Shift, &e1, 10).unwrap(), 0.0);
    }

    #[test]
    fn rotation_is_all_unitary() {
        let th: f64 = 0.7;
        let rot = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let v = [0.3, -1.2];
        let r = unitary_part_projection(&CoIsometry::Matrix(rot), &v, 5).unwrap();
        assert!((r.unitary_component[0] - 0.3).abs() < 1e-12 && (r.unitary_component[1] + 1.2).abs() < 1e-12);
        assert!(r.vanishing_component.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn non_coisometry_is_rejected() {
        let m = DMatrix::from_diagonal(&nalgebra::dvector![2.0, 1.0]);
        assert!(matches!(unitary_part_projection(&CoIsometry::Matrix(m.clone()), &[1.0, 0.0], 1), Err(Error::Precondition(_))));
        assert!(matches!(spectral_wiener_average(&CoIsometry::Matrix(m), &[1.0, 0.0], 3), Err(Error::Precondition(_))));
    }

    #[test]
    fn identity_average_is_one() {
        let u = DMatrix::<f64>::identity(3, 3);
        let x = [0.6, 0.0, 0.8];
        assert!((spectral_wiener_average(&CoIsometry::Matrix(u), &x, 17).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn planted_slope() {
        let grid: Vec<f64> = (0..9).map(|i| 10f64.powf(-4.0 + 0.375 * i as f64)).collect();
        let (s, _) = slope_from_fn(&grid, |e| Ok(3.0 * e * e)).unwrap();
        match s {
            MixingSlope::Slope(f) => assert!((f.slope - 2.0).abs() < 1e-6),
            MixingSlope::ExactZero => panic!(),
        }
        let (z, _) = slope_from_fn(&grid, |_| Ok(0.0)).unwrap();
        assert_eq!(z, MixingSlope::ExactZero);
        assert!(slope_from_fn(&grid[..3], Ok).is_err());
        assert!(slope_from_fn(&[0.1, 0.2, 0.3, 0.4], Ok).is_err());
    }

    #[test]
    fn fbm_mixing_routes_agree() {
        let m = HilbertModel::fbm(0.3, 32.0, 2048).unwrap();
        let fam = ScalingFamily::FbmScale { hurst: 0.3 };
        let f = HVector::fbm_from_fn(m, |t| (-t * t).exp()).unwrap();
        let g = HVector::fbm_from_fn(m, |t| (-(t - 0.5) * (t - 0.5) / 2.0).exp()).unwrap();
        for eps in [0.5, 0.25] {
            let spectral = mixing_inner(&fam, &m, &f, &g, eps).unwrap();
            let direct = cm_inner(&m, &scale_hvector(&fam, eps, &f).unwrap(), &g).unwrap();
            assert!((spectral - direct).abs() < 1e-6 * direct.abs(), "{spectral} vs {direct}");
        }
    }

    #[test]
    fn fbm_scaling_is_isometric() {
        let m = HilbertModel::fbm(0.7, 32.0, 2048).unwrap();
        let fam = ScalingFamily::FbmScale { hurst: 0.7 };
        let f = HVector::fbm_from_fn(m, |t| t * (-t * t).exp()).unwrap();
        let n0 = cm_inner(&m, &f, &f).unwrap();
        for d in [0.5, 2.0, 0.8] {
            let r = scale_hvector(&fam, d, &f).unwrap();
            let n1 = cm_inner(&m, &r, &r).unwrap();
            assert!((n1 - n0).abs() < 1e-8 * n0, "delta {d}: {n1} vs {n0}");
        }
    }

    #[test]
    fn brownian_adjoint_is_right_inverse() {
        let m = HilbertModel::h01(0.0, 1.0, 4096).unwrap();
        let fam = ScalingFamily::BrownianScale;
        let g = HVector::h01_from_fn(m, |t| (3.0 * t).sin()).unwrap();
        let back = scale_hvector(&fam, 0.25, &adjoint_hvector(&fam, 0.25, &g).unwrap()).unwrap();
        // The last cells see the kink of S*g at t = ε through the interpolation stencil.
        for c in 0..4090 {
            assert!((back.repr[c] - g.repr[c]).abs() < 1e-8, "cell {c}");
        }
    }
}
