use nalgebra::DMatrix;
use proptest::prelude::*;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use strassen::cm_space::*;
use strassen::grid::{Field, SpaceTimeGrid};
use strassen::limit_set::h01_sup_sigma;

fn unit(cells: usize) -> HilbertModel {
    HilbertModel::h01(0.0, 1.0, cells).unwrap()
}

#[test]
fn h01_closed_form_norms() {
    let m = unit(4096);
    let line = HVector::h01_from_fn(m, |t| t).unwrap();
    assert!((cm_norm(&m, &line).unwrap() - 1.0).abs() < 1e-12);
    // ∫ (π cos πt)² = π²/2.
    let s = HVector::h01_from_fn(m, |t| (PI * t).sin()).unwrap();
    assert!((cm_norm(&m, &s).unwrap() - PI / 2f64.sqrt()).abs() < 1e-6);
    let c = HVector::h01_from_fn(m, |t| (PI * t).cos()).unwrap();
    assert!(cm_inner(&m, &s, &c).unwrap().abs() < 1e-9);
}

#[test]
fn fbm_gaussian_norm_matches_spectral_integral() {
    // f = e^{-x²/2}: f̂ = √(2π) e^{-η²/2}, so ‖f‖² = K · 2π Γ(H+1).
    for hurst in [0.2, 0.35, 0.5, 0.65, 0.8] {
        let m = HilbertModel::fbm(hurst, 16.0, 4096).unwrap();
        let f = HVector::fbm_from_fn(m, |x| (-x * x / 2.0).exp()).unwrap();
        let got = cm_norm(&m, &f).unwrap().powi(2);
        let exact = fbm_norm_constant(hurst) * 2.0 * PI * gamma(hurst + 1.0);
        assert!((got - exact).abs() < 1e-3 * exact, "H={hurst}: {got} vs {exact}");
    }
}

#[test]
fn half_hurst_model_agrees_with_h01() {
    let fm = HilbertModel::fbm(0.5, 16.0, 4096).unwrap();
    let hm = HilbertModel::h01(-16.0, 16.0, 1 << 14).unwrap();
    for (c, w) in [(0.0, 1.0), (1.5, 0.5), (-2.0, 2.0)] {
        let f = move |t: f64| (-(t - c) * (t - c) / (2.0 * w * w)).exp();
        let a = cm_norm(&fm, &HVector::fbm_from_fn(fm, f).unwrap()).unwrap();
        let b = cm_norm(&hm, &HVector::h01_from_fn(hm, f).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-3 * b, "{a} vs {b}");
    }
}

#[test]
fn bases_are_orthonormal() {
    let models = [
        unit(512),
        HilbertModel::fbm(0.3, 8.0, 512).unwrap(),
        HilbertModel::fbm(0.7, 8.0, 512).unwrap(),
    ];
    for m in &models {
        let b = orthonormal_basis(m, 6).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let g = cm_inner(m, &b[i], &b[j]).unwrap();
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8, "{m:?} ({i},{j}) {g}");
            }
        }
    }
}

#[test]
fn heat_norm_equals_forcing_l2_norm() {
    let grid = SpaceTimeGrid::new(0.5, 101, 5.0, 201).unwrap();
    let m = HilbertModel::HeatCM { grid };
    let f = Field::from_fn(grid, |t, x| (2.0 * PI * t).sin() * (-x * x).exp());
    let h = heat_from_forcing(m, &f).unwrap();
    // ∫₀^½ sin²(2πt) dt · ∫ e^{-2x²} dx = ¼ √(π/2).
    let exact = (0.25 * (PI / 2.0).sqrt()).sqrt();
    let got = cm_norm(&m, &h).unwrap();
    assert!((got - exact).abs() < 0.01 * exact, "{got} vs {exact}");
}

#[test]
fn q_route_matches_discrete_brownian_norm() {
    let n = 256;
    let t: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let q = DMatrix::from_fn(n, n, |i, j| t[i].min(t[j]));
    let h: Vec<f64> = t.iter().map(|s| (3.0 * s).sin() + s * s).collect();
    let mut prev = 0.0;
    let mut direct = 0.0;
    for v in &h {
        direct += (v - prev).powi(2) * n as f64;
        prev = *v;
    }
    let got = q_sqrt_inv_norm(&q, &h).unwrap();
    assert!((got - direct.sqrt()).abs() < 1e-8 * direct.sqrt(), "{got} vs {}", direct.sqrt());
}

#[test]
fn sup_ball_net_approaches_one() {
    let m = unit(1024);
    let mut prev = 0.0;
    for (d, k) in [(1, 3), (2, 11), (2, 41)] {
        let s = h01_sup_sigma(&m, d, k).unwrap();
        assert!(s >= prev - 1e-12 && s <= 1.0 + 1e-9, "{d},{k}: {s}");
        prev = s;
    }
    assert!(prev > 0.9, "{prev}");
    assert!((h01_sine_sup(1) - 2f64.sqrt() * 2.0 / PI).abs() < 1e-15);
}

#[test]
fn ball_net_lies_in_unit_ball_and_covers() {
    let m = unit(256);
    let net = ball_net(&m, 2, 9).unwrap();
    assert!(net.iter().all(|h| cm_norm(&m, h).unwrap() <= 1.0 + 1e-9));
    let basis = orthonormal_basis(&m, 2).unwrap();
    let mesh = ball_net_mesh(2, 9);
    for a in [0.0, 0.7, 1.9, 3.3, 5.1] {
        let target = combine(&m, &basis, &[0.95 * f64::cos(a), 0.95 * f64::sin(a)]).unwrap();
        let d = net
            .iter()
            .map(|h| cm_norm(&m, &target.axpy(-1.0, h).unwrap()).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(d <= mesh + 1e-12, "{d} > {mesh}");
    }
}

#[test]
fn conjugate_norm_of_sup_is_weighted_l1() {
    let n = 50;
    let w = vec![1.0 / n as f64; n];
    let f: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.37).sin()).collect();
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let l1: f64 = f.iter().zip(&w).map(|(a, b)| a.abs() * b).sum();
    let mut net: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let coarse = conjugate_norm(sup, &f, &net, &w).unwrap();
    net.push(f.iter().map(|v| v.signum()).collect());
    let fine = conjugate_norm(sup, &f, &net, &w).unwrap();
    assert!(coarse <= fine);
    assert!((fine - l1).abs() < 1e-14);
    net.push(vec![2.0; n]);
    assert!(conjugate_norm(sup, &f, &net, &w).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn h01_inner_is_bilinear_and_symmetric(
        a in -3.0f64..3.0,
        u in proptest::collection::vec(-2.0f64..2.0, 64),
        v in proptest::collection::vec(-2.0f64..2.0, 64),
        w in proptest::collection::vec(-2.0f64..2.0, 64),
    ) {
        let m = unit(64);
        let (u, v, w) = (HVector::new(m, u).unwrap(), HVector::new(m, v).unwrap(), HVector::new(m, w).unwrap());
        let lhs = cm_inner(&m, &u.scaled(a).axpy(1.0, &v).unwrap(), &w).unwrap();
        let rhs = a * cm_inner(&m, &u, &w).unwrap() + cm_inner(&m, &v, &w).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        prop_assert!((cm_inner(&m, &u, &v).unwrap() - cm_inner(&m, &v, &u).unwrap()).abs() <= 1e-12);
        let nu = cm_norm(&m, &u).unwrap();
        let nw = cm_norm(&m, &w).unwrap();
        prop_assert!(cm_inner(&m, &u, &w).unwrap().abs() <= nu * nw + 1e-12);
    }

    #[test]
    fn fbm_norm_scales_with_dilation(hurst in 0.15f64..0.85, c in 0.6f64..1.6) {
        // f(c·) has squared norm c^{2H} ‖f‖².
        let m = HilbertModel::fbm(hurst, 16.0, 4096).unwrap();
        let f = HVector::fbm_from_fn(m, |x| (-x * x / 2.0).exp() * (1.0 + 0.3 * x)).unwrap();
        let fc = HVector::fbm_from_fn(m, |x| (-(c * x).powi(2) / 2.0).exp() * (1.0 + 0.3 * c * x)).unwrap();
        let (a, b) = (cm_norm(&m, &f).unwrap().powi(2), cm_norm(&m, &fc).unwrap().powi(2));
        prop_assert!((b - c.powf(2.0 * hurst) * a).abs() < 2e-3 * b, "{} vs {}", b, c.powf(2.0 * hurst) * a);
    }

    #[test]
    fn fbm_inner_is_symmetric(hurst in 0.15f64..0.85, s in -2.0f64..2.0) {
        let m = HilbertModel::fbm(hurst, 8.0, 1024).unwrap();
        let f = HVector::fbm_from_fn(m, |x| (-(x - s).powi(2)).exp()).unwrap();
        let g = HVector::fbm_from_fn(m, |x| x * (-x * x / 2.0).exp()).unwrap();
        let (a, b) = (cm_inner(&m, &f, &g).unwrap(), cm_inner(&m, &g, &f).unwrap());
        prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
    }
}
