mod common;

use common::{phi_exact, slides_exact, slides_grid_search};
use exoknee::chain::{optimize_d, solve_slides, sweep_slides, theta_grid, ChainConfig, ExoJoint, MisalignmentEvaluator, OptimizeSettings};
use exoknee::geometry::Transform2D;
use exoknee::knee::KneeModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(rng: &mut ChaCha8Rng) -> (ChainConfig, f64) {
    let a = rng.random_range(25.0..40.0);
    let rho = if rng.random_bool(0.2) { f64::INFINITY } else { rng.random_range(0.2..10.0) };
    let knee = KneeModelParams {
        semi_major_a: a,
        semi_minor_b: a * rng.random_range(0.6..1.0),
        sliding_ratio_rho: rho,
        ..KneeModelParams::default()
    };
    let cfg = ChainConfig {
        knee,
        joint: ExoJoint::Rolling { roller_diameter_d: rng.random_range(0.0..150.0) },
        thigh_anchors: [[rng.random_range(-5.0..5.0), rng.random_range(80.0..200.0)], [0.0, 330.0]],
        calf_anchors: [[0.0, -110.0], [0.0, -320.0]],
        alignment_offset: Transform2D::new(
            rng.random_range(-5f64..5.0).to_radians(),
            [rng.random_range(-15.0..15.0), rng.random_range(-15.0..15.0)],
        ),
    };
    (cfg, rng.random_range(5f64..120.0).to_radians())
}

#[test]
fn newton_matches_exact_linear_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let (cfg, theta) = random_instance(&mut rng);
        let s = solve_slides(&cfg, theta).unwrap();
        let (f, g) = slides_exact(&cfg, theta);
        assert!((s.f - f).abs() < 1e-8 && (s.g - g).abs() < 1e-8, "{cfg:?} {theta}: {s:?} vs {f} {g}");
    }
}

#[test]
fn newton_matches_grid_search_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let (cfg, theta) = random_instance(&mut rng);
        let s = solve_slides(&cfg, theta).unwrap();
        let (f, g) = slides_grid_search(&cfg, theta);
        assert!((s.f - f).abs() < 0.01 && (s.g - g).abs() < 0.01, "{s:?} vs grid ({f}, {g})");
    }
}

#[test]
fn solutions_do_not_depend_on_grid_or_warm_start() {
    let cfg = ChainConfig::default();
    let coarse = sweep_slides(&cfg, &theta_grid(120f64.to_radians(), 2f64.to_radians()).unwrap()).unwrap();
    let fine = sweep_slides(&cfg, &theta_grid(120f64.to_radians(), 1f64.to_radians()).unwrap()).unwrap();
    for c in &coarse {
        let f = fine.iter().find(|s| (s.theta - c.theta).abs() < 1e-12).unwrap();
        assert!((c.f - f.f).abs() < 1e-9 && (c.g - f.g).abs() < 1e-9);
        let cold = solve_slides(&cfg, c.theta).unwrap();
        assert!((c.f - cold.f).abs() < 1e-9 && (c.g - cold.g).abs() < 1e-9);
    }
}

#[test]
fn phi_converges_with_grid_refinement() {
    let cfg = ChainConfig::default();
    for tmax in [75f64, 120.0] {
        for d in [0.0, 30.0, 64.0, 120.0] {
            let one = MisalignmentEvaluator::new(&cfg, tmax.to_radians(), 1f64.to_radians()).unwrap().phi(d).unwrap();
            let quarter = MisalignmentEvaluator::new(&cfg, tmax.to_radians(), 0.25f64.to_radians()).unwrap().phi(d).unwrap();
            assert!((one - quarter).abs() / quarter < 0.01, "theta_max {tmax}, D {d}: {one} vs {quarter}");
        }
    }
}

#[test]
fn phi_matches_reference_and_is_continuous_in_d() {
    let cfg = ChainConfig::default();
    let eval = MisalignmentEvaluator::new(&cfg, 120f64.to_radians(), 1f64.to_radians()).unwrap();
    let mut prev = eval.phi(0.0).unwrap();
    for i in 1..=300 {
        let d = i as f64 * 0.5;
        let p = eval.phi(d).unwrap();
        // f and g move at half the rate of D
        assert!((p - prev).abs() <= 0.5 * 0.5 * 2f64.sqrt() + 1e-9);
        if i % 30 == 0 {
            assert!((p - phi_exact(&cfg, d, 120f64.to_radians())).abs() < 1e-8);
        }
        prev = p;
    }
}

#[test]
fn optimum_agrees_with_dense_reference_scan() {
    let cfg = ChainConfig::default();
    let r = optimize_d(&cfg, 75f64.to_radians(), &OptimizeSettings::default()).unwrap();
    let (d, p, base) = common::dense_optimum(&cfg, 75f64.to_radians(), 0.1);
    assert!((r.phi_baseline - base).abs() < 1e-8);
    assert!(r.phi_star <= p + 1e-6, "{} vs {p}", r.phi_star);
    assert!((r.d_star - d).abs() < 0.25, "{} vs {d}", r.d_star);
}
