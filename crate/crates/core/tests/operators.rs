use nalgebra::DMatrix;
use proptest::prelude::*;
use strassen::cm_space::*;
use strassen::grid::{Field, Path, SpaceTimeGrid, TimeGrid};
use strassen::operators::*;

fn unit(cells: usize) -> HilbertModel {
    HilbertModel::h01(0.0, 1.0, cells).unwrap()
}

fn sup(p: &Path) -> f64 {
    p.sup_norm()
}

#[test]
fn strong_continuity_on_the_identity_path() {
    let g = TimeGrid::new(0.0, 1.0, 1025).unwrap();
    let id = Path::from_fn(g, |t| t);
    let eps = [1.0, 0.5, 0.1, 0.01];
    // R_ε t = ε^{1-a} t, so the defect is |1 - ε^{1-a}|.
    for (fam, a) in [(ScalingFamily::BrownianScale, 0.5), (ScalingFamily::FbmScale { hurst: 0.3 }, 0.3)] {
        let rows = strong_continuity_defect(&fam, sup, std::slice::from_ref(&id), &eps).unwrap();
        for (e, d) in rows {
            assert!((d - (1.0 - e.powf(1.0 - a))).abs() < 1e-12, "{fam:?} {e}: {d}");
        }
    }
}

#[test]
fn strong_continuity_of_a_bump_vanishes() {
    let g = TimeGrid::new(0.0, 1.0, 2049).unwrap();
    let bump = Path::from_fn(g, |t| t * (1.0 - t) * (3.0 * t).sin());
    let eps = [0.999, 0.99, 0.9];
    let rows = strong_continuity_defect(&ScalingFamily::BrownianScale, sup, std::slice::from_ref(&bump), &eps).unwrap();
    // |ε^{-1/2} φ(εt) - φ(t)| ≤ (ε^{-1/2} - 1) sup|φ| + (1-ε) sup|φ'|.
    let (s0, s1) = (bump.sup_norm(), 2.0);
    for w in rows.windows(2) {
        assert!(w[0].1 < w[1].1);
    }
    for (e, d) in rows {
        assert!(d <= (e.powf(-0.5) - 1.0) * s0 + (1.0 - e) * s1 + 1e-12);
    }
    assert!(strong_continuity_defect(&ScalingFamily::SequenceShift, sup, &[bump], &eps).is_err());
}

#[test]
fn brownian_adjoint_is_an_isometry() {
    // S S* = I is equivalent to ⟨S* f, S* g⟩ = ⟨f, g⟩.
    let m = unit(4096);
    let fam = ScalingFamily::BrownianScale;
    let f = HVector::h01_from_fn(m, |t| (2.0 * t).sin() + t * t).unwrap();
    let g = HVector::h01_from_fn(m, |t| (5.0 * t).cos() - 1.0).unwrap();
    // The discrete adjoint compresses each cell by ε, so the error is first order in h/ε.
    let h = 1.0 / 4096.0;
    for eps in [0.8, 0.3, 0.05] {
        let tol = 2.0 * h / eps;
        let (af, ag) = (adjoint_hvector(&fam, eps, &f).unwrap(), adjoint_hvector(&fam, eps, &g).unwrap());
        let (lhs, rhs) = (cm_inner(&m, &af, &ag).unwrap(), cm_inner(&m, &f, &g).unwrap());
        assert!((lhs - rhs).abs() < tol * rhs.abs(), "{eps}: {lhs} vs {rhs}");
        let (nf, n0) = (cm_norm(&m, &af).unwrap(), cm_norm(&m, &f).unwrap());
        assert!((nf - n0).abs() < tol * n0, "{eps}: {nf} vs {n0}");
    }
}

#[test]
fn adjoint_pairs_with_the_operator() {
    let m = unit(4096);
    let fam = ScalingFamily::BrownianScale;
    let f = HVector::h01_from_fn(m, |t| (3.0 * t).cos() * t).unwrap();
    let g = HVector::h01_from_fn(m, |t| t.powi(3) - 0.5 * t).unwrap();
    for eps in [0.9, 0.5, 0.2] {
        let lhs = cm_inner(&m, &scale_hvector(&fam, eps, &f).unwrap(), &g).unwrap();
        let rhs = cm_inner(&m, &f, &adjoint_hvector(&fam, eps, &g).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-6, "{eps}: {lhs} vs {rhs}");
    }
    let fm = HilbertModel::fbm(0.35, 16.0, 2048).unwrap();
    let ff = ScalingFamily::FbmScale { hurst: 0.35 };
    let a = HVector::fbm_from_fn(fm, |x| (-x * x / 2.0).exp()).unwrap();
    let b = HVector::fbm_from_fn(fm, |x| x * (-(x - 0.5).powi(2)).exp()).unwrap();
    let eps = 0.7;
    let lhs = mixing_inner(&ff, &fm, &a, &b, eps).unwrap();
    let rhs = cm_inner(&fm, &a, &adjoint_hvector(&ff, eps, &b).unwrap()).unwrap();
    assert!((lhs - rhs).abs() < 1e-3 * lhs.abs().max(1e-3), "{lhs} vs {rhs}");
}

#[test]
fn mixing_inner_at_one_is_the_inner_product() {
    let fm = HilbertModel::fbm(0.6, 8.0, 1024).unwrap();
    let fam = ScalingFamily::FbmScale { hurst: 0.6 };
    let a = HVector::fbm_from_fn(fm, |x| (-x * x).exp()).unwrap();
    let b = HVector::fbm_from_fn(fm, |x| (-(x - 1.0).powi(2)).exp()).unwrap();
    assert_eq!(mixing_inner(&fam, &fm, &a, &b, 1.0).unwrap(), cm_inner(&fm, &a, &b).unwrap());
    assert!(matches!(mixing_inner(&fam, &fm, &a, &b, 0.0), Err(strassen::Error::Domain(_))));
}

#[test]
fn brownian_mixing_slope_is_one_half() {
    // ⟨R_ε t, t⟩_{H01} = ∫₀¹ √ε dt.
    let m = unit(1024);
    let f = HVector::h01_from_fn(m, |t| t).unwrap();
    let eps: Vec<f64> = (0..=12).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
    let (slope, rows) = mixing_slope(&ScalingFamily::BrownianScale, &m, &f, &f, &eps).unwrap();
    let MixingSlope::Slope(fit) = slope else { panic!("{slope:?}") };
    assert!((fit.slope - 0.5).abs() < 1e-9, "{fit:?}");
    for (e, v) in rows {
        assert!((v - e.sqrt()).abs() < 1e-9);
    }
}

#[test]
fn gram_corrected_defect_is_small_where_truncation_fails() {
    let m = unit(2048);
    let fam = ScalingFamily::BrownianScale;
    let t = adjoint_defect(&truncated_matrix(&fam, &m, 0.5, 8).unwrap());
    let c = adjoint_defect(&gram_corrected_matrix(&fam, &m, 0.5, 8).unwrap());
    assert!(c < 1e-6, "{c}");
    assert!(t > 0.1, "{t}");
}

#[test]
fn field_scaling_relabels_the_grid() {
    let g = SpaceTimeGrid::new(1.0, 11, 2.0, 21).unwrap();
    let f = Field::from_fn(g, |t, x| t + x);
    let r = rescale_field(&ScalingFamily::NoiseScale { d: 1 }, 0.5, &f).unwrap();
    assert_eq!(r.grid.t_max, 4.0);
    assert_eq!(r.grid.half_width, 4.0);
    for (a, b) in r.values.iter().zip(&f.values) {
        assert!((a - 0.5f64.powf(1.5) * b).abs() < 1e-15);
    }
    let obj = Scalable::Field(f);
    assert!(apply_scaling(&ScalingFamily::BrownianScale, 0.5, &obj).is_err());
}

#[test]
fn spectral_average_of_a_generic_rotation() {
    // (1/n) Σ |cos kθ| → 2/π for θ/π irrational.
    let u = DMatrix::from_row_slice(2, 2, &[1f64.cos(), -1f64.sin(), 1f64.sin(), 1f64.cos()]);
    let avg = spectral_wiener_average(&CoIsometry::Matrix(u), &[1.0, 0.0], 100_000).unwrap();
    assert!((avg - 2.0 / std::f64::consts::PI).abs() < 1e-3, "{avg}");
    let x = [0.6, 0.8, 0.0, 0.0];
    assert_eq!(spectral_wiener_average(&CoIsometry::Shift, &x, 10).unwrap(), (0.48 + 0.0) / 10.0);
}

fn rotation(n: usize, angles: &[f64]) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::identity(n, n);
    for (k, a) in angles.iter().enumerate() {
        let (i, j) = (k % n, (k + 1) % n);
        let mut r = DMatrix::<f64>::identity(n, n);
        r[(i, i)] = a.cos();
        r[(j, j)] = a.cos();
        r[(i, j)] = -a.sin();
        r[(j, i)] = a.sin();
        q = r * q;
    }
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn shift_composition_law(v in proptest::collection::vec(-5.0f64..5.0, 0..40), m in 0usize..20, n in 0usize..20) {
        prop_assert_eq!(shift_sequence(&shift_sequence(&v, m), n), shift_sequence(&v, m + n));
    }

    #[test]
    fn field_scaling_composition_law(a in 0.2f64..1.0, b in 0.2f64..1.0) {
        let g = SpaceTimeGrid::new(0.5, 9, 1.0, 11).unwrap();
        let f = Field::from_fn(g, |t, x| (t - x).sin());
        let fam = ScalingFamily::SheScale { d: 1 };
        let two = rescale_field(&fam, b, &rescale_field(&fam, a, &f).unwrap()).unwrap();
        let one = rescale_field(&fam, a * b, &f).unwrap();
        prop_assert!((two.grid.t_max - one.grid.t_max).abs() < 1e-12 * one.grid.t_max);
        prop_assert!((two.grid.half_width - one.grid.half_width).abs() < 1e-12 * one.grid.half_width);
        for (x, y) in two.values.iter().zip(&one.values) {
            prop_assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn path_scaling_composition_on_lines(a in 0.05f64..1.0, b in 0.05f64..1.0, s in -2.0f64..2.0) {
        // Linear interpolation is exact on lines, so R_b R_a = R_{ab} holds to rounding.
        let g = TimeGrid::new(0.0, 1.0, 257).unwrap();
        let p = Path::from_fn(g, |t| s * t);
        let two = rescale_path(&rescale_path(&p, a, -0.3).unwrap(), b, -0.3).unwrap();
        let one = rescale_path(&p, a * b, -0.3).unwrap();
        prop_assert!(two.sup_distance(&one).unwrap() < 1e-12 * (1.0 + one.sup_norm()));
    }

    #[test]
    fn adjoint_defect_is_rotation_invariant(
        vals in proptest::collection::vec(-1.0f64..1.0, 12),
        angles in proptest::collection::vec(-3.0f64..3.0, 5),
    ) {
        let m = DMatrix::from_row_slice(3, 4, &vals);
        let q = rotation(3, &angles);
        let p = rotation(4, &angles[1..]);
        let base = adjoint_defect(&OperatorMatrix { matrix: m.clone(), basis_label: "b".into() });
        let rot = adjoint_defect(&OperatorMatrix { matrix: &q * m * p.transpose(), basis_label: "b".into() });
        prop_assert!((base - rot).abs() < 1e-10 * (1.0 + base));
    }

    #[test]
    fn unitary_component_is_nonincreasing(
        v in proptest::collection::vec(-1.0f64..1.0, 12),
        a in -3.0f64..3.0,
    ) {
        let blk = rotation(4, &[a, 0.5 * a]);
        for op in [CoIsometry::Shift, CoIsometry::Block(blk)] {
            let mut prev = f64::INFINITY;
            for n in 0..10 {
                let d = unitary_part_projection(&op, &v, n).unwrap();
                let norm = d.unitary_component.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!(norm <= prev + 1e-12);
                prev = norm;
                let back: Vec<f64> = d.unitary_component.iter().zip(&d.vanishing_component).map(|(x, y)| x + y).collect();
                for (x, y) in back.iter().zip(&v) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }
}
