use lrising::lattice::{BoundaryCondition, ModelParams};
use lrising::metastate::*;

#[test]
fn tail_indices() {
    assert_eq!(min_m(1, 0.4), 17);
    assert_eq!(min_m(2, 0.4), 57);
    assert_eq!(min_m(3, 0.4), 91);
    assert_eq!(min_m(5, 0.4), 146);
    for k in 1..6 {
        let m = min_m(k, 0.4);
        assert!(tail_sum(m, 0.4) < 1.0 / (k * k) as f64);
        assert!(tail_sum(m - 1, 0.4) >= 1.0 / (k * k) as f64 || m == 1);
    }
}

#[test]
fn schedule_below_threshold_doubles() {
    let s = sparse_schedule(0.3, 0.4, 1.0, 6).unwrap();
    assert_eq!(s.volumes, vec![2, 4, 8, 16, 32, 64]);
    assert!(s.violations().is_empty());
}

#[test]
fn schedule_above_threshold_overflows() {
    let err = sparse_schedule(0.75, 0.1, 1.0, 3).unwrap_err();
    assert!(matches!(err, lrising::Error::ScheduleOverflow { k: 1, .. }), "{err:?}");
}

#[test]
fn explicit_schedules_report_their_violations() {
    let s = SparseSchedule::geometric(0.75, 0.2, 16, 4, 3).unwrap();
    assert_eq!(s.volumes, vec![16, 64, 256]);
    let v = s.violations();
    assert!(!v.is_empty());
    assert!(v.iter().any(|m| m.starts_with("k=1: N=16")));
    assert!(SparseSchedule::explicit(0.75, 0.2, vec![4, 4]).is_err());
}

#[test]
fn good_boundary_conditions() {
    let p = ModelParams::new(0.75, 1.0, 1.0, 64, 1024).unwrap();
    let free = good_eta_classifier(&BoundaryCondition::free(64, 1024), &p, 2, 0.1).unwrap();
    assert!(free.good);
    assert_eq!(free.checked, 125);
    let plus = good_eta_classifier(&BoundaryCondition::all_plus(64, 1024), &p, 2, 0.1).unwrap();
    assert!(!plus.good);
    assert!(plus.violations.iter().all(|(_, h, cap)| h.abs() > *cap));
    assert!(good_eta_classifier(&BoundaryCondition::free(64, 1024), &p, 64, 0.1).is_err());
    let (frac, se) = good_fraction(&p, 2, 0.1, 50, 1).unwrap();
    assert!((0.0..=1.0).contains(&frac) && se >= 0.0);
}

#[test]
fn decoupled_gap_shrinks_with_annulus() {
    let p = ModelParams::new(0.4, 0.7, 1.0, 4, 64).unwrap();
    let eta = BoundaryCondition::random(4, 64, 2024);
    let mut last = f64::INFINITY;
    for n_next in [8, 16, 32] {
        let g = decoupled_measure_gap(&p, &eta, n_next, &[0]).unwrap();
        assert!(g.holds(), "{g:?}");
        assert!(g.gap < last);
        last = g.gap;
    }
    assert!(decoupled_measure_gap(&p, &eta, 64, &[0]).unwrap().gap < 1e-14);
    assert!(decoupled_measure_gap(&p, &eta, 4, &[0]).is_err());
}

#[test]
fn null_recurrence_frequencies() {
    let r = null_recurrence_profile(0.75, 2.0, 512, 0.2, 2024, 8192).unwrap();
    assert_eq!(r.rows.len(), 512);
    for row in &r.rows {
        for f in [row.freq_plus, row.freq_minus, row.freq_mixed] {
            assert!((0.0..=1.0).contains(&f));
        }
        assert!(row.freq_plus + row.freq_minus + row.freq_mixed <= 1.0 + 1e-12);
    }
    assert!(null_recurrence_profile(0.75, 2.0, NULL_RECURRENCE_MAX_N + 1, 0.2, 1, 1 << 16).is_err());
}

#[test]
fn toy_metastate_treats_signs_alike() {
    let h = empirical_metastate_toy(0.75, 1.0, &[64, 128, 256], 16, 0.2, 4000, 2024).unwrap();
    let diff = h.balls.plus - h.balls.minus;
    let se = (h.balls.plus_stderr.powi(2) + h.balls.minus_stderr.powi(2)).sqrt();
    assert!(diff.abs() < 4.0 * se);
    assert!((h.balls.plus + h.balls.minus + h.balls.neither - 1.0).abs() < 1e-12);
}

#[test]
fn exact_metastate_runs() {
    let h = empirical_metastate_exact(0.4, 1.0, &[2, 3], 32, 0.2, &[0], 100, 5).unwrap();
    assert_eq!(h.lambda.samples, 100);
    assert!((h.balls.plus + h.balls.minus + h.balls.neither - 1.0).abs() < 1e-12);
    assert!(empirical_metastate_exact(0.4, 1.0, &[12], 32, 0.2, &[0], 1, 5).is_err());
}

#[test]
fn dichotomy_excludes_threshold() {
    let s = DichotomySettings {
        beta: 1.0,
        n: 64,
        n_grid: vec![32, 64],
        samples: 100,
        seed: 1,
        y_factor: 16,
        sampler: "hybrid".into(),
    };
    assert!(dichotomy_report(&[0.5], &s).is_err());
    let rows = dichotomy_report(&[0.3, 0.8], &s).unwrap();
    assert_eq!(rows.len(), 2);
}

#[test]
fn toy_marginal_is_a_two_point_mixture() {
    let m = toy_marginal(0.0, 1.0, &[0, 1]).unwrap();
    assert_eq!(m.probs, vec![0.5, 0.0, 0.0, 0.5]);
}
