use approx::assert_relative_eq;
use lrising::gibbs::*;
use lrising::lattice::*;
use lrising::stats::logaddexp;

fn fixed_eta() -> BoundaryCondition {
    BoundaryCondition::from_signs(3, 8, |y| match y {
        4 | 6 | 7 | -6 | -8 => 1,
        _ => -1,
    })
}

#[test]
fn magnetization_matches_brute_force() {
    let p = ModelParams::new(0.4, 0.7, 1.0, 3, 8).unwrap();
    let ens = exact_measure(&p, &fixed_eta()).unwrap();
    assert_relative_eq!(ens.magnetization(0).unwrap(), -0.26468621793276076, max_relative = 1e-12);
    assert_relative_eq!(ens.magnetization(1).unwrap(), -0.1784888605086462, max_relative = 1e-12);
}

#[test]
fn infinite_temperature_is_uniform() {
    let p = ModelParams::new(0.4, 0.0, 1.0, 3, 8).unwrap();
    let ens = exact_measure(&p, &fixed_eta()).unwrap();
    let m = ens.marginal(&[-1, 0, 2]).unwrap();
    for q in &m.probs {
        assert_relative_eq!(*q, 0.125, max_relative = 1e-14);
    }
}

#[test]
fn flipping_the_boundary_flips_the_measure() {
    let p = ModelParams::new(0.6, 0.9, 1.0, 4, 40).unwrap();
    let eta = BoundaryCondition::random(4, 40, 5);
    let a = exact_measure(&p, &eta).unwrap();
    let b = exact_measure(&p, &eta.negated()).unwrap();
    for bits in [0u64, 1, 77, 300, 511] {
        let s = SpinConfig::from_bits(4, bits);
        assert_relative_eq!(a.probability(&s), b.probability(&s.flipped()), max_relative = 1e-12);
    }
    assert_relative_eq!(a.mixture_weight(), 1.0 - b.mixture_weight(), max_relative = 1e-12);
}

#[test]
fn free_energy_decomposition_and_antisymmetry() {
    let p = ModelParams::new(0.4, 0.7, 1.0, 4, 64).unwrap();
    for seed in 0..5 {
        let eta = BoundaryCondition::random(4, 64, seed);
        let f = free_energy_difference(&p, &eta).unwrap();
        assert!((f.f - f.w - f.xi_part).abs() < 1e-12);
        let g = free_energy_difference(&p, &eta.negated()).unwrap();
        assert!((f.f + g.f).abs() <= 1e-12 * f.f.abs().max(1.0));
        assert!((f.w + g.w).abs() <= 1e-12 * f.w.abs().max(1.0));
    }
}

#[test]
fn cold_free_energy_approaches_boundary_energy() {
    let p = ModelParams::new(0.4, 50.0, 1.0, 4, 64).unwrap();
    let eta = BoundaryCondition::random(4, 64, 2024);
    let f = free_energy_difference(&p, &eta).unwrap();
    assert!((f.f - f.w).abs() <= 1e-3 * f.w.abs(), "{f:?}");
}

#[test]
fn free_boundary_is_symmetric() {
    let p = ModelParams::new(0.5, 1.3, 1.0, 5, 20).unwrap();
    let ens = exact_measure(&p, &BoundaryCondition::free(5, 20)).unwrap();
    assert!(ens.free_energy().abs() < 1e-12);
    assert_relative_eq!(ens.mixture_weight(), 0.5, max_relative = 1e-12);
    assert!(ens.magnetization(0).unwrap().abs() < 1e-12);
}

#[test]
fn partition_function_splits() {
    let p = ModelParams::new(0.3, 0.8, 1.0, 4, 30).unwrap();
    let ens = exact_measure(&p, &BoundaryCondition::random(4, 30, 8)).unwrap();
    assert_relative_eq!(ens.log_z, logaddexp(ens.log_z_plus, ens.log_z_minus), max_relative = 1e-13);
    let total: f64 = (0..1u64 << 9).map(|b| ens.probability(&SpinConfig::from_bits(4, b))).sum();
    assert_relative_eq!(total, 1.0, max_relative = 1e-12);
}

#[test]
fn cold_constrained_measure_is_plus() {
    let p = ModelParams::new(0.3, 20.0, 1.0, 4, 30).unwrap();
    let m = constrained_measure(&p, &BoundaryCondition::free(4, 30), 1, &[0]).unwrap();
    assert!(m.prob(&[1]) > 1.0 - 1e-6);
    let m = constrained_measure(&p, &BoundaryCondition::free(4, 30), -1, &[0]).unwrap();
    assert!(m.prob(&[-1]) > 1.0 - 1e-6);
}

#[test]
fn exact_engine_limits() {
    let p = ModelParams::new(0.3, 1.0, 1.0, EXACT_MAX_N + 1, 100).unwrap();
    assert!(matches!(
        exact_measure(&p, &BoundaryCondition::free(EXACT_MAX_N + 1, 100)),
        Err(lrising::Error::TooLarge { .. })
    ));
    let q = ModelParams::new(0.3, 1.0, 1.0, 3, 8).unwrap();
    assert!(exact_measure(&q, &BoundaryCondition::free(4, 8)).is_err());
}

#[test]
fn heat_bath_satisfies_detailed_balance() {
    let p = ModelParams::new(0.4, 0.7, 1.0, 3, 8).unwrap();
    let eta = fixed_eta();
    let ens = exact_measure(&p, &eta).unwrap();
    let fields = boundary_fields(&eta, &p).unwrap();
    for bits in [0u64, 3, 45, 100, 127] {
        let s = SpinConfig::from_bits(3, bits);
        for x in -3..=3i64 {
            let mut t = s.spins().to_vec();
            t[(x + 3) as usize] *= -1;
            let t = SpinConfig::new(3, t).unwrap();
            let lhs = ens.probability(&s) * heat_bath_flip_probability(&s, x, &fields, &p);
            let rhs = ens.probability(&t) * heat_bath_flip_probability(&t, x, &fields, &p);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }
}

#[test]
fn monte_carlo_agrees_with_enumeration() {
    let p = ModelParams::new(0.4, 0.7, 1.0, 3, 8).unwrap();
    let eta = fixed_eta();
    let exact = exact_measure(&p, &eta).unwrap();
    let mc = mc_measure(&p, &eta, 40_000, 2_000, 2024, &[0, 1]).unwrap();
    let m = mc.magnetization;
    assert!((m.value - exact.magnetization(0).unwrap()).abs() < 4.0 * m.stderr, "{m:?}");
    let want = exact.marginal(&[0, 1]).unwrap();
    for (k, q) in want.probs.iter().enumerate() {
        assert!((mc.marginal.probs[k] - q).abs() < 4.0 * mc.marginal_stderr[k] + 1e-3);
    }
}

#[test]
fn monte_carlo_at_infinite_temperature() {
    let p = ModelParams::new(0.4, 0.0, 1.0, 6, 30).unwrap();
    let mc = mc_measure(&p, &BoundaryCondition::random(6, 30, 1), 20_000, 100, 9, &[0]).unwrap();
    assert!(mc.magnetization.value.abs() < 4.0 * mc.magnetization.stderr);
    assert!(mc_measure(&p, &BoundaryCondition::random(6, 30, 1), 10, 10, 9, &[0]).is_err());
}

#[test]
fn monte_carlo_is_reproducible() {
    let p = ModelParams::new(0.4, 0.7, 1.0, 5, 30).unwrap();
    let eta = BoundaryCondition::random(5, 30, 3);
    let a = mc_measure(&p, &eta, 500, 100, 77, &[0]).unwrap();
    let b = mc_measure(&p, &eta, 500, 100, 77, &[0]).unwrap();
    assert_eq!(a, b);
}
