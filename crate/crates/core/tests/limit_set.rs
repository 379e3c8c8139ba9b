use proptest::prelude::*;
use std::f64::consts::{E, PI};
use strassen::cm_space::{h01_sine_sup, HVector, HilbertModel};
use strassen::gaussian_sim::sample_bm;
use strassen::grid::{Path, TimeGrid};
use strassen::limit_set::*;
use strassen::operators::ScalingFamily;
use strassen::rng::SeedSpec;

#[test]
fn normalizers_at_simple_points() {
    assert!((1.0 / log_normalizer(E * E).unwrap() - 0.5).abs() < 1e-15);
    assert!((loglog_normalizer((-E).exp()).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    assert!(matches!(loglog_normalizer(0.5), Err(strassen::Error::Domain(_))));
    assert!(matches!(log_normalizer(1.0), Err(strassen::Error::Domain(_))));
    let g = log_grid_desc(1e-3, 1e-1, 4).unwrap();
    assert_eq!(g.len(), 9);
    assert!(g.windows(2).all(|w| w[0] > w[1]));
}

#[test]
fn rescaled_trajectory_of_the_identity() {
    // R_ε t = √ε t, then divided by √(2 log log 1/ε).
    let g = TimeGrid::new(0.0, 1.0, 4001).unwrap();
    let p = Path::from_fn(g, |t| t);
    let eps = [1e-2, 1e-3, 3e-2];
    let fam = rescaled_trajectory(&p, &ScalingFamily::BrownianScale, &eps, 1).unwrap();
    assert_eq!(fam.params, vec![3e-2, 1e-2, 1e-3]);
    for (i, &e) in fam.params.iter().enumerate() {
        let c = e.sqrt() / loglog_normalizer(e).unwrap();
        for (k, v) in fam.entry(i).iter().enumerate() {
            assert!((v - c * g.time(k)).abs() < 1e-14);
        }
    }
    assert!(rescaled_trajectory(&p, &ScalingFamily::SequenceShift, &eps, 1).is_err());
}

#[test]
fn semigroup_composes_on_dyadic_times() {
    let g = TimeGrid::new(0.0, 1.0, 513).unwrap();
    let p = Path::from_fn(g, |t| 2.0 * t - 0.3);
    for (s, t) in [(0.5, 0.25), (0.125, 0.0625), (1.0, 0.5)] {
        let two = brownian_semigroup(s, &brownian_semigroup(t, &p).unwrap()).unwrap();
        let one = brownian_semigroup(s + t, &p).unwrap();
        assert!(two.sup_distance(&one).unwrap() < 1e-10, "{s},{t}");
    }
}

#[test]
fn modulus_of_a_line_is_closed_form() {
    // ‖S_t x - x‖_∞ = 1 - e^{-t/2} for x(s) = s on [0,1], increasing in t.
    let g = TimeGrid::new(0.0, 1.0, 257).unwrap();
    let rho = [0.0, 0.25, 0.5, 1.0];
    let est = modulus_estimate(
        |_| Ok(Path::from_fn(g, |t| t)),
        brownian_semigroup,
        &rho,
        8,
        4,
        &SeedSpec::new(0, 0, "line"),
    )
    .unwrap();
    for (r, e) in rho.iter().zip(&est) {
        assert!((e.mean - (1.0 - (-r / 2.0).exp()).powi(2)).abs() < 1e-12, "{r}: {e:?}");
    }
}

#[test]
fn brownian_modulus_grows_with_rho() {
    let g = TimeGrid::new(0.0, 1.0, 513).unwrap();
    let rho = [0.05, 0.2, 0.8];
    let est = modulus_estimate(
        |s| sample_bm(&g, 1, s, false),
        brownian_semigroup,
        &rho,
        16,
        400,
        &SeedSpec::new(2, 0, "mod"),
    )
    .unwrap();
    assert!(est.windows(2).all(|w| w[0].mean < w[1].mean), "{est:?}");
    assert!(modulus_estimate(|s| sample_bm(&g, 1, s, false), brownian_semigroup, &[1.5], 4, 4, &SeedSpec::new(0, 0, "x")).is_err());
}

#[test]
fn sphere_closure_reaches_the_sphere_with_vanishing_sup_cost() {
    let m = HilbertModel::h01(0.0, 1.0, 2048).unwrap();
    let h = HVector::h01_from_fn(m, |t| 0.5 * t).unwrap();
    let ns = [1, 4, 16, 64, 256];
    let rows = sphere_closure_demo(&m, &h, &ns).unwrap();
    for r in &rows {
        assert!((r.h_norm_after - 1.0).abs() < 1e-10, "{r:?}");
        // High modes see only a few cells per period, so allow 1%.
        let exact = r.c.abs() * h01_sine_sup(r.n);
        assert!((r.ambient_distance - exact).abs() <= 0.01 * exact, "{r:?}");
    }
    assert!(rows.last().unwrap().ambient_distance < 0.01);
    let big = HVector::h01_from_fn(m, |t| 1.2 * t).unwrap();
    assert!(matches!(sphere_closure_demo(&m, &big, &[1]), Err(strassen::Error::Precondition(_))));
}

#[test]
fn brownian_sup_concentrates() {
    let g = TimeGrid::new(0.0, 1.0, 257).unwrap();
    let s = SeedSpec::new(4, 0, "conc");
    let norms: Vec<f64> = strassen::mc::replicate(10_000, |i| sample_bm(&g, 1, &s.replica(i), false).unwrap().sup_norm());
    let rows = concentration_check(&norms, 1.0, &[0.5, 1.0, 2.0]).unwrap();
    assert!(rows.iter().all(|r| r.pass), "{rows:?}");
    assert!(rows.windows(2).all(|w| w[0].empirical >= w[1].empirical));
    assert!(matches!(concentration_check(&norms[..100], 1.0, &[1.0]), Err(strassen::Error::Power(_))));
}

#[test]
fn brownian_net_covers_ball_elements() {
    let g = TimeGrid::new(0.0, 1.0, 129).unwrap();
    let net = brownian_net(&g, 2, 9).unwrap();
    let basis = brownian_basis_values(&g, 2).unwrap();
    for a in [0.3, 1.7, 4.0] {
        let (c0, c1) = (0.9 * f64::cos(a), 0.9 * f64::sin(a));
        let x: Vec<f64> = (0..g.n).map(|k| c0 * basis[0][k] + c1 * basis[1][k]).collect();
        assert!(net.distance(&x) <= net.mesh() + 1e-12);
    }
    let far = vec![3.0; g.n];
    assert!(net.distance(&far) > 1.0);
}

#[test]
fn sphere_nets_are_unit_vectors() {
    for d in 1..=5 {
        let pts = sphere_net(d, 40).unwrap();
        assert!(pts.iter().all(|p| (p.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12));
    }
}

fn family(entries: &[Vec<f64>]) -> RescaledFamily {
    let mut f = RescaledFamily::new("test", 1, Metric::Euclid, None, entries[0].len());
    for (i, e) in entries.iter().enumerate() {
        f.push(i as f64 + 2.0, e).unwrap();
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn containment_is_translation_invariant(
        pts in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 3), 1..8),
        xs in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 3), 1..8),
        v in proptest::collection::vec(-5.0f64..5.0, 3),
    ) {
        let shift = |a: &Vec<f64>| a.iter().zip(&v).map(|(x, y)| x + y).collect::<Vec<f64>>();
        let net = LimitSetNet::points(pts.clone(), Metric::Euclid, 0.1).unwrap();
        let moved = LimitSetNet::points(pts.iter().map(shift).collect(), Metric::Euclid, 0.1).unwrap();
        let a = containment_stat(&family(&xs), &net).unwrap();
        let b = containment_stat(&family(&xs.iter().map(shift).collect::<Vec<_>>()), &moved).unwrap();
        for (p, q) in a.per_param.iter().zip(&b.per_param) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn coverage_improves_with_more_entries(
        xs in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 2), 2..10),
        cut in 1usize..9,
    ) {
        let cut = cut.min(xs.len() - 1);
        let targets = sphere_net(2, 12).unwrap();
        let few = coverage_stat(&family(&xs[..cut]), &targets).unwrap();
        let all = coverage_stat(&family(&xs), &targets).unwrap();
        for (a, b) in few.iter().zip(&all) {
            prop_assert!(b <= a);
        }
    }

    #[test]
    fn running_max_is_monotone(vals in proptest::collection::vec(-3.0f64..3.0, 1..50)) {
        let params: Vec<f64> = (0..vals.len()).map(|i| i as f64).collect();
        let r = lil_ratio_stats(&params, &vals, &vec![2.0; vals.len()]).unwrap();
        prop_assert!(r.trace.windows(2).all(|w| w[0] <= w[1]));
        let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / 2.0;
        prop_assert_eq!(r.final_max, top);
    }

    #[test]
    fn sequence_family_entries_are_normalized_windows(n0 in 2usize..50, coords in 1usize..4) {
        let z: Vec<f64> = (0..200).map(|i| (i as f64 * 0.7).sin()).collect();
        let fam = rescaled_sequence(&z, &[n0 + 10, n0], coords, 1).unwrap();
        prop_assert_eq!(&fam.params, &vec![n0 as f64, (n0 + 10) as f64]);
        let norm = (2.0 * (n0 as f64).ln()).sqrt();
        for k in 0..coords {
            prop_assert!((fam.entry(0)[k] - z[n0 + k] / norm).abs() < 1e-15);
        }
    }
}

#[test]
fn iterated_constants() {
    assert!((burdzy_constant() - 2f64.powf(1.25) / 3f64.powf(0.75)).abs() < 1e-15);
    assert!((neuenschwander_constant() - 1.5f64.powf(1.5) / PI).abs() < 1e-15);
}

#[test]
fn levy_area_sampler_has_discrete_variance() {
    // Left-point sums over m steps of size s/m: Var = s²/4 · (1 - 1/m); the two sides are independent.
    let m = 4;
    let s = SeedSpec::new(11, 0, "levy-at");
    let est = strassen::mc::estimate(20_000, 3, |i, out| {
        let a = sample_levy_area_at(&[-0.5, 2.0], m, &s.replica(i)).unwrap();
        out[0] = a[0] * a[0];
        out[1] = a[1] * a[1];
        out[2] = a[0] * a[1];
    });
    let shrink = 1.0 - 1.0 / m as f64;
    for (e, exact) in est.iter().zip([0.0625 * shrink, shrink, 0.0]) {
        assert!(e.z_to(exact) < 4.0, "{e:?} vs {exact}");
    }
    assert!(sample_levy_area_at(&[1.0], 0, &s).is_err());
}
