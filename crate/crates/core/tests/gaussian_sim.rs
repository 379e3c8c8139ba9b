use proptest::prelude::*;
use strassen::cm_space::HilbertModel;
use strassen::gaussian_sim::*;
use strassen::grid::{Path, SpaceTimeGrid, TimeGrid};
use strassen::mc::estimate;
use strassen::rng::SeedSpec;

fn seed(label: &str) -> SeedSpec {
    SeedSpec::new(7, 0, label)
}

#[test]
fn brownian_covariance_is_min() {
    let g = TimeGrid::new(0.0, 1.0, 101).unwrap();
    let s = seed("bm-cov");
    let est = estimate(20_000, 3, |i, out| {
        let p = sample_bm(&g, 1, &s.replica(i), false).unwrap();
        let (a, b) = (p.components[0][30], p.components[0][80]);
        out[0] = a * a;
        out[1] = b * b;
        out[2] = a * b;
    });
    for (e, exact) in est.iter().zip([0.3, 0.8, 0.3]) {
        assert!(e.z_to(exact) < 4.0, "{e:?} vs {exact}");
    }
}

#[test]
fn two_sided_halves_are_independent() {
    let g = TimeGrid::new(-1.0, 1.0, 201).unwrap();
    let s = seed("bm-two");
    let est = estimate(20_000, 2, |i, out| {
        let p = sample_bm(&g, 1, &s.replica(i), true).unwrap();
        let (l, r) = (p.components[0][0], p.components[0][200]);
        out[0] = l * r;
        out[1] = l * l;
    });
    assert!(est[0].z_to(0.0) < 4.0, "{:?}", est[0]);
    assert!(est[1].z_to(1.0) < 4.0, "{:?}", est[1]);
}

#[test]
fn exact_times_sampler_has_brownian_variance() {
    let times = [1e-6, 1e-3, 0.5, 2.0];
    let s = seed("bm-at");
    let est = estimate(20_000, 4, |i, out| {
        let v = sample_bm_at(&times, &s.replica(i)).unwrap();
        for k in 0..4 {
            out[k] = v[k] * v[k] / times[k];
        }
    });
    for e in &est {
        assert!(e.z_to(1.0) < 4.0, "{e:?}");
    }
    assert!(sample_bm_at(&[0.5, 0.5], &s).is_err());
}

#[test]
fn fbm_increment_variance_and_correlation() {
    let g = TimeGrid::new(0.0, 1.0, 257).unwrap();
    for hurst in [0.25, 0.5, 0.75] {
        let s = seed(&format!("fbm/{hurst}"));
        let dt = g.dt();
        let est = estimate(10_000, 2, |i, out| {
            let p = sample_fbm(hurst, &g, &s.replica(i)).unwrap();
            let inc = p.increments(0);
            out[0] = p.components[0][256].powi(2);
            out[1] = inc[10] * inc[11] / dt.powf(2.0 * hurst);
        });
        assert!(est[0].z_to(1.0) < 4.0, "H={hurst}: {:?}", est[0]);
        // Lag-one autocorrelation of fractional Gaussian noise: 2^{2H-1} - 1.
        let rho = 2f64.powf(2.0 * hurst - 1.0) - 1.0;
        assert!(est[1].z_to(rho) < 4.0, "H={hurst}: {:?} vs {rho}", est[1]);
    }
}

#[test]
fn fbm_methods_agree_in_law() {
    let g = TimeGrid::new(0.0, 2.0, 65).unwrap();
    let s = seed("fbm-methods");
    for method in [FbmMethod::Auto, FbmMethod::Cholesky] {
        let est = estimate(10_000, 1, |i, out| {
            out[0] = sample_fbm_with(0.7, &g, &s.replica(i), method, 1000).unwrap().components[0][32].powi(2);
        })[0];
        assert!(est.z_to(1.0) < 4.0, "{method:?}: {est:?}");
    }
    assert!(matches!(sample_fbm(1.0, &g, &s), Err(strassen::Error::Domain(_))));
}

#[test]
fn white_noise_pairing_has_l2_variance() {
    let g = SpaceTimeGrid::new(1.0, 41, 2.0, 81).unwrap();
    let s = seed("white");
    // φ(t,x) = t e^{-x²}; ‖φ‖² = (1/3) √(π/2) up to the trapezoid error.
    let phi: Vec<f64> = (0..g.cells()).map(|k| g.t(k / g.nx) * (-g.x(k % g.nx).powi(2)).exp()).collect();
    let w = g.dt() * g.dx();
    let l2: f64 = phi.iter().map(|v| v * v * w).sum();
    let est = estimate(20_000, 1, |i, out| {
        let xi = sample_white_noise(&g, &s.replica(i));
        out[0] = xi.values.iter().zip(&phi).map(|(a, b)| a * b * w).sum::<f64>().powi(2);
    })[0];
    assert!(est.z_to(l2) < 4.0, "{est:?} vs {l2}");
    assert!((l2 - (std::f64::consts::PI / 2.0).sqrt() / 3.0).abs() < 0.05);
}

#[test]
fn mollifier_preserves_constants_and_lines_in_the_interior() {
    let g = TimeGrid::new(0.0, 1.0, 1001).unwrap();
    for eps in [0.01, 0.05, 0.2] {
        let c = mollify_path(&Path::from_fn(g, |_| 2.5), eps, Kernel::Bump).unwrap();
        assert!(c.components[0].iter().all(|v| (v - 2.5).abs() < 1e-12));
        let l = mollify_path(&Path::from_fn(g, |t| 3.0 * t - 1.0), eps, Kernel::Bump).unwrap();
        for i in 300..=700 {
            assert!((l.components[0][i] - (3.0 * g.time(i) - 1.0)).abs() < 1e-12);
        }
    }
    assert!(kernel_mass_defect(0.2, 1e-3, Kernel::Bump) < 1e-6);
    assert!(mollify_path(&Path::from_fn(g, |t| t), 1e-4, Kernel::Bump).is_err());
}

#[test]
fn karhunen_sum_has_truncated_variance() {
    let model = HilbertModel::h01(0.0, 1.0, 512).unwrap();
    let n = 8;
    let ks = KarhunenSampler::new(model, n).unwrap();
    let s = seed("kl");
    let t = 0.5;
    // Σ_{k ≤ n} e_k(t)² for e_k(t) = √2 sin((k-½)πt)/((k-½)π).
    let exact: f64 = (1..=n)
        .map(|k| {
            let w = (k as f64 - 0.5) * std::f64::consts::PI;
            2.0 * (w * t).sin().powi(2) / (w * w)
        })
        .sum();
    let est = estimate(20_000, 1, |i, out| {
        let p = ks.sample(&s.replica(i)).unwrap();
        out[0] = strassen::grid::interp(&p.grid, &p.components[0], t).unwrap().powi(2);
    })[0];
    assert!(est.z_to(exact) < 4.0, "{est:?} vs {exact}");
}

#[test]
fn samplers_are_reproducible() {
    let g = TimeGrid::new(0.0, 1.0, 129).unwrap();
    let s = seed("repro");
    assert_eq!(sample_fbm(0.3, &g, &s).unwrap(), sample_fbm(0.3, &g, &s).unwrap());
    assert_ne!(sample_bm(&g, 1, &s.replica(0), false).unwrap(), sample_bm(&g, 1, &s.replica(1), false).unwrap());
    let sg = SpaceTimeGrid::new(0.1, 5, 1.0, 9).unwrap();
    assert_eq!(sample_white_noise(&sg, &s), sample_white_noise(&sg, &s));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fbm_is_self_similar(hurst in 0.1f64..0.9, c in 0.25f64..4.0, sv in 0u64..1000) {
        // B^H on [0, cT] at node k equals c^H times B^H on [0, T] at node k, sample by sample.
        let g1 = TimeGrid::new(0.0, 1.0, 65).unwrap();
        let gc = TimeGrid::new(0.0, c, 65).unwrap();
        let s = SeedSpec::new(sv, 0, "ss");
        let a = sample_fbm(hurst, &g1, &s).unwrap();
        let b = sample_fbm(hurst, &gc, &s).unwrap();
        for (x, y) in a.components[0].iter().zip(&b.components[0]) {
            prop_assert!((c.powf(hurst) * x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn mollifier_weights_have_unit_mass(eps in 0.002f64..0.5, dt in 1e-4f64..1e-3) {
        prop_assume!(eps > dt);
        let w = mollifier_weights(eps, dt, Kernel::Bump);
        let mass = w[0] + 2.0 * w[1..].iter().sum::<f64>();
        prop_assert!((mass - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|v| *v >= 0.0));
    }
}
