use approx::assert_relative_eq;
use lrising::contour::*;
use lrising::lattice::{ModelParams, SpinConfig};

fn config(spins: &[i8]) -> SpinConfig {
    SpinConfig::new(spins.len() / 2, spins.to_vec()).unwrap()
}

fn row_sum_direct(alpha: f64, n: i64, x: i64) -> f64 {
    (-n..=n)
        .filter(|&y| y != x)
        .map(|y| {
            let d = (x - y).abs();
            if d == 1 {
                1.0
            } else {
                (d as f64).powf(alpha - 2.0)
            }
        })
        .sum()
}

#[test]
fn interior_triangle() {
    let s = config(&[1, 1, -1, -1, 1, 1, 1]);
    assert_eq!(flip_points(&s), vec![-3, 1]);
    let t = triangles_from_config(&s);
    assert_eq!(t, vec![Triangle::interior(-1, 0)]);
    assert_eq!(t[0].mass(), 2);
    assert_eq!((t[0].x_minus(), t[0].x_plus()), (-1.5, 0.5));
    assert_eq!(omega_sign(&s), 1);
}

#[test]
fn boundary_triangle() {
    let s = config(&[-1, 1, 1, 1, 1, 1, 1]);
    let t = triangles_from_config(&s);
    assert_eq!(t.len(), 1);
    assert!(t[0].left_boundary);
    assert_eq!((t[0].lo, t[0].hi), (-3, -3));
    assert_eq!(t[0].to_string(), "(-3, -2.5, 1, L)");
    assert_eq!(omega_sign(&s), 1);
    assert_eq!(omega_sign(&s.flipped()), -1);
}

#[test]
fn nested_triangles() {
    let s = config(&[1, 1, 1, 1, 1, 1, -1, -1, 1, -1, -1, 1, 1, 1, 1, 1, 1]);
    let t = triangles_from_config(&s);
    assert_eq!(t, vec![Triangle::interior(-2, 2), Triangle::interior(0, 0)]);
    assert_eq!(flipped_sites(&t), vec![-2, -1, 1, 2]);

    // Near the walls the outer flip points close against them instead.
    let s = config(&[1, -1, -1, 1, -1, -1, 1]);
    let t = triangles_from_config(&s);
    assert_eq!(t.len(), 3);
    assert!(t[0].left_boundary && t[2].right_boundary);
    assert_eq!(t[1], Triangle::interior(0, 0));
    assert_eq!(omega_sign(&s), -1);
}

#[test]
fn uneven_flip_points_need_walls() {
    assert!(grow_triangles(&[1], None).is_err());
    assert!(grow_triangles(&[1, 2], None).is_err());
    assert!(grow_triangles(&[3, 1], Some(4)).is_err());
    assert_eq!(grow_triangles(&[1, 5], None).unwrap(), vec![Triangle::interior(1, 2)]);
}

#[test]
fn encoding_is_a_bijection() {
    for n in 0..=5 {
        let b = bijection_check(n).unwrap();
        assert_eq!(b.configs, 1 << (2 * n + 1));
        assert!(b.passed(), "{b:?}");
    }
    assert!(bijection_check(BIJECTION_MAX_N + 1).is_err());
}

#[test]
fn omega_plus_is_half_of_all_configurations() {
    let n = 3;
    let plus = (0..1u64 << (2 * n + 1)).filter(|&b| omega_sign(&SpinConfig::from_bits(n, b)) == 1).count();
    assert_eq!(plus, 1 << (2 * n));
}

#[test]
fn grouping_examples() {
    let far = [Triangle::interior(0, 0), Triangle::interior(20, 20)];
    assert_eq!(group_contours(&far, 14.0).unwrap().contours, vec![vec![0], vec![1]]);
    let near = [Triangle::interior(0, 0), Triangle::interior(10, 10)];
    assert_eq!(group_contours(&near, 14.0).unwrap().contours, vec![vec![0, 1]]);
    assert!(is_single_contour(&near, 14.0).unwrap());
    let close = [Triangle::interior(0, 0), Triangle::interior(3, 3)];
    assert_eq!(group_contours(&close, 1.0).unwrap().contours.len(), 2);
    for set in [group_contours(&far, 14.0).unwrap(), group_contours(&near, 14.0).unwrap()] {
        assert!(contour_set_is_valid(if set.contours.len() == 2 { &far } else { &near }, &set));
    }
}

#[test]
fn grouping_ignores_merge_order() {
    let r = grouping_order_check(8, 400, 14.0, 17).unwrap();
    assert_eq!(r.configs, 400);
    assert_eq!(r.mismatches, 0);
    assert_eq!(r.invalid, 0);
    let r = grouping_order_check(8, 400, 1.0, 18).unwrap();
    assert_eq!((r.mismatches, r.invalid), (0, 0));
}

#[test]
fn grouping_constant() {
    assert_relative_eq!(find_min_c(), 13.444488525390625, max_relative = 1e-12);
    assert_eq!(default_c(), 14.0);
    assert!(c_series(14.0) <= 0.5);
    assert!(c_series(13.0) > 0.5);
    assert_relative_eq!(k_c(0.75, 14.0, KcVariant::Printed), 0.4712788480426959, max_relative = 1e-14);
    let gap = k_c(0.75, 14.0, KcVariant::Printed) - k_c(0.75, 14.0, KcVariant::MinusSign);
    assert_relative_eq!(gap, std::f64::consts::PI.powi(2) / 42.0, max_relative = 1e-14);
}

#[test]
fn norms() {
    let g = Contour::new(vec![Triangle::interior(0, 1), Triangle::interior(5, 7)]);
    assert_eq!(g.mass(), 5);
    assert_relative_eq!(contour_norm(&g, 0.5), 2f64.sqrt() + 3f64.sqrt(), max_relative = 1e-15);
    assert_relative_eq!(contour_norm(&g, 0.0), 2f64.ln() + 3f64.ln() + 8.0, max_relative = 1e-15);
    assert_eq!(chi(0.3, 1), 1.0);
}

#[test]
fn energies() {
    let p = ModelParams::new(0.2, 1.0, 1.0, 12, 13).unwrap();
    let single = Contour::new(vec![Triangle::interior(0, 0)]);
    let e = contour_energy(&single, &p).unwrap();
    assert_relative_eq!(e, 3.433140857897831, max_relative = 1e-13);
    assert_relative_eq!(e / contour_norm(&single, 0.2), 3.433140857897831, max_relative = 1e-13);

    // A block of two flipped sites against a plus background.
    let pair = Contour::new(vec![Triangle::interior(3, 4)]);
    let want = row_sum_direct(0.2, 12, 3) + row_sum_direct(0.2, 12, 4) - 2.0;
    assert_relative_eq!(contour_energy(&pair, &p).unwrap(), want, max_relative = 1e-13);
    assert!(contour_energy(&Contour::new(vec![Triangle::interior(12, 13)]), &p).is_err());
}

#[test]
fn peierls_mass_one() {
    let r = peierls_check(0.2, 1, 12, 1.0, 14.0).unwrap();
    let row = &r.rows[0];
    // 23 interior single flips and two boundary ones.
    assert_eq!((row.count, row.boundary_count), (25, 2));
    assert_relative_eq!(r.min_ratio_interior(1), row_sum_direct(0.2, 12, 11), max_relative = 1e-13);
    assert_relative_eq!(r.min_ratio(1), row_sum_direct(0.2, 12, 12), max_relative = 1e-13);
    assert!(peierls_check(0.7, 1, 12, 1.0, 14.0).is_err());
}

#[test]
fn entropy_at_unit_mass() {
    let r = entropy_bound_check(&[0.0, 0.3], &[3.0], 1, 14.0).unwrap();
    assert_eq!(r.rows.len(), 2);
    for row in &r.rows {
        assert_eq!(row.contours, 1);
        let chi1: f64 = if row.alpha == 0.0 { 4.0 } else { 1.0 };
        assert_relative_eq!(row.lhs, (-3.0 * chi1).exp(), max_relative = 1e-15);
        assert_relative_eq!(row.rhs, 2.0 * row.lhs, max_relative = 1e-15);
        assert!(row.holds());
    }
}

#[test]
fn enumeration_matches_naive_search() {
    let fast = enumerate_shapes(3, 14.0).unwrap();
    let slow = enumerate_shapes_naive(3, 14.0, 400).unwrap();
    assert_eq!(fast, slow);
    let fast = enumerate_shapes(4, 2.0).unwrap();
    let slow = enumerate_shapes_naive(4, 2.0, 60).unwrap();
    assert_eq!(fast, slow);
}

#[test]
fn shapes_are_single_contours_anchored_at_zero() {
    for s in enumerate_shapes(3, 14.0).unwrap() {
        assert_eq!(s.delta_sites()[0], 0);
        assert_eq!(s.span, s.delta_sites().len());
        assert!(is_single_contour(&s.triangles, 14.0).unwrap());
        assert!(s.mass <= 3);
    }
}

#[test]
fn rho_single_term() {
    let spec = RhoParams::new(0.75, 0.5, 0.1, 64, 1, 1).unwrap();
    assert_eq!(spec.c, 14.0);
    let (e, h) = rho_contour_term(&spec, &Contour::new(vec![Triangle::interior(0, 0)])).unwrap();
    assert_relative_eq!(e, 6.367302816547351, max_relative = 1e-13);
    assert_relative_eq!(h, 0.13397168281703664, max_relative = 1e-13);
    let beta = 5.0;
    let term = (-spec.a * beta * (2.0 * spec.k_c() - 1.0) * e + 2.0 * beta * h).exp();
    assert_relative_eq!(term, 9.526698134231198, max_relative = 1e-12);
    assert_relative_eq!(rho_truncated(beta, &spec).unwrap(), term, max_relative = 1e-12);
}

#[test]
fn rho_params_validation() {
    assert!(RhoParams::new(0.75, 0.5, 0.1, 64, 2, 1).is_err());
    assert!(RhoParams::new(0.4, 0.5, 0.1, 64, 1, 1).is_err());
    assert!(RhoParams::new(0.75, 0.5, 0.3, 64, 1, 1).is_err());
    assert!(RhoParams::new(0.75, 0.0, 0.1, 64, 1, 1).is_err());
}
