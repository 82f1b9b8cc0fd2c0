use approx::assert_relative_eq;
use lrising::lattice::*;
use proptest::prelude::*;

fn params(alpha: f64, n: usize, y: usize) -> ModelParams {
    ModelParams::new(alpha, 1.0, 1.0, n, y).unwrap()
}

#[test]
fn coupling_values() {
    let p = ModelParams::new(0.3, 1.0, 1.7, 4, 10).unwrap();
    assert_eq!(coupling(0, 1, &p), 1.7);
    assert_eq!(coupling(3, 3, &p), 0.0);
    let q = params(0.5, 4, 10);
    assert_relative_eq!(coupling(0, 3, &q), 0.19245008972987526, max_relative = 1e-15);
}

#[test]
fn rejects_bad_params() {
    assert!(ModelParams::new(1.0, 1.0, 1.0, 2, 10).is_err());
    assert!(ModelParams::new(-0.1, 1.0, 1.0, 2, 10).is_err());
    assert!(ModelParams::new(0.5, -1.0, 1.0, 2, 10).is_err());
    assert!(ModelParams::new(0.5, 1.0, 1.0, 2, 2).is_err());
}

#[test]
fn indicator_energy_of_single_flip() {
    let p = params(0.5, 2, 3);
    let sigma = SpinConfig::new(2, vec![1, 1, -1, 1, 1]).unwrap();
    let free = BoundaryCondition::free(2, 3);
    let h = hamiltonian(&sigma, &free, &p, HamiltonianForm::Indicator).unwrap();
    assert_relative_eq!(h, 2.707106781186548, max_relative = 1e-14);
    assert_relative_eq!(free_energy_indicator(&sigma, &p), h, max_relative = 1e-14);

    let plus = SpinConfig::all(2, 1);
    assert_eq!(hamiltonian(&plus, &free, &p, HamiltonianForm::Indicator).unwrap(), 0.0);
}

#[test]
fn boundary_field_four_terms() {
    let p = params(0.5, 1, 3);
    let eta = BoundaryCondition::all_plus(1, 3);
    assert_relative_eq!(boundary_field(0, &eta, &p).unwrap(), 1.092006960646298, max_relative = 1e-14);
    assert_relative_eq!(boundary_field(0, &eta.negated(), &p).unwrap(), -1.092006960646298, max_relative = 1e-14);
    let free = BoundaryCondition::free(1, 3);
    assert!(boundary_fields(&free, &p).unwrap().iter().all(|&h| h == 0.0));
}

#[test]
fn boundary_energy_double_sum() {
    let p = params(0.25, 1, 100);
    let eta = BoundaryCondition::all_plus(1, 100);
    let w = boundary_energy(&eta, &p).unwrap().w;
    assert_relative_eq!(w, 6.927269825078704, max_relative = 1e-13);
    assert_relative_eq!(boundary_energy(&eta.negated(), &p).unwrap().w, -w, max_relative = 1e-15);
    assert_eq!(boundary_energy(&BoundaryCondition::free(1, 100), &p).unwrap().w, 0.0);
    let fields: f64 = boundary_fields(&eta, &p).unwrap().iter().sum();
    assert_relative_eq!(fields, w, max_relative = 1e-13);
}

#[test]
fn column_sums() {
    let p = params(0.5, 2, 10);
    let prof = coefficient_profile(&p).unwrap();
    assert_relative_eq!(prof.get(5).unwrap(), 0.528929115289448, max_relative = 1e-14);
    // S_{N+1}(N) contains the nearest-neighbour coupling J = 1.
    assert!(prof.get(3).unwrap() > 1.0);

    let q = params(0.75, 8, 64);
    let prof = coefficient_profile(&q).unwrap();
    let bound = (2.0 - 0.75) / (1.0 - 0.75) * (32.0f64 - 8.0).powf(0.75 - 1.0);
    assert!(prof.get(32).unwrap() <= bound);
    assert!(prof.bound_violations().is_empty());
}

#[test]
fn spin_product_and_indicator_forms_agree() {
    let p = params(0.4, 3, 12);
    let eta = BoundaryCondition::random(3, 12, 11);
    let bulk: f64 = (1..=6u64).map(|d| p.coupling_at(d) * (7 - d) as f64).sum();
    let w = boundary_energy(&eta, &p).unwrap().w;
    for bits in [0u64, 5, 77, 127] {
        let s = SpinConfig::from_bits(3, bits);
        let sp = hamiltonian(&s, &eta, &p, HamiltonianForm::SpinProduct).unwrap();
        let ind = hamiltonian(&s, &eta, &p, HamiltonianForm::Indicator).unwrap();
        assert_relative_eq!(sp, 2.0 * ind - bulk - w, epsilon = 1e-12);
    }
}

#[test]
fn random_boundary_is_nested_across_volumes() {
    let a = BoundaryCondition::random(3, 40, 99);
    let b = BoundaryCondition::random(10, 40, 99);
    for y in 11..=40i64 {
        assert_eq!(a.get(y), b.get(y));
        assert_eq!(a.get(-y), b.get(-y));
    }
    let c = BoundaryCondition::random(3, 80, 99);
    for y in 4..=40i64 {
        assert_eq!(a.get(y), c.get(y));
    }
}

#[test]
fn window_distance_equals_sup_over_sign_functions() {
    let a = MeasureMarginal::new(vec![0, 1], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let b = MeasureMarginal::new(vec![0, 1], vec![0.25, 0.25, 0.05, 0.45]).unwrap();
    let mut sup = 0.0f64;
    for f in 0..16u32 {
        let s: f64 = (0..4).map(|i| if (f >> i) & 1 == 1 { 1.0 } else { -1.0 } * (a.probs[i] - b.probs[i])).sum();
        sup = sup.max(s.abs());
    }
    assert_relative_eq!(window_distance(&a, &b).unwrap(), sup, max_relative = 1e-15);

    let plus = MeasureMarginal::point_mass(vec![0], &[1]).unwrap();
    let minus = MeasureMarginal::point_mass(vec![0], &[-1]).unwrap();
    assert_eq!(window_distance(&plus, &minus).unwrap(), 2.0);
    assert_eq!(window_distance(&a, &a).unwrap(), 0.0);
    assert!(window_distance(&a, &plus).is_err());
}

#[test]
fn pattern_order() {
    assert_eq!(pattern_index(&[-1, -1]), 0);
    assert_eq!(pattern_index(&[1, -1]), 2);
    assert_eq!(pattern_at(2, 2), vec![1, -1]);
    let m = MeasureMarginal::new(vec![0, 1], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    assert_eq!(m.flipped().probs, vec![0.4, 0.3, 0.2, 0.1]);
}

proptest! {
    #[test]
    fn coupling_is_symmetric(x in -50i64..50, y in -50i64..50, alpha in 0.0f64..0.99) {
        let p = params(alpha, 2, 10);
        prop_assert_eq!(coupling(x, y, &p), coupling(y, x, &p));
    }

    #[test]
    fn global_flip_leaves_energy_unchanged(bits in 0u64..512, seed in 0u64..1000) {
        let p = params(0.6, 4, 20);
        let s = SpinConfig::from_bits(4, bits);
        let eta = BoundaryCondition::random(4, 20, seed);
        let a = hamiltonian(&s, &eta, &p, HamiltonianForm::SpinProduct).unwrap();
        let b = hamiltonian(&s.flipped(), &eta.negated(), &p, HamiltonianForm::SpinProduct).unwrap();
        prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn field_is_odd_in_eta(seed in 0u64..1000, x in -4i64..=4) {
        let p = params(0.3, 4, 30);
        let eta = BoundaryCondition::random(4, 30, seed);
        let a = boundary_field(x, &eta, &p).unwrap();
        let b = boundary_field(x, &eta.negated(), &p).unwrap();
        prop_assert_eq!(a, -b);
    }
}
