//! Acceptance criteria. Prints one `criterion NN PASS|FAIL` line each and
//! exits non-zero when any criterion fails. Pass criterion numbers as
//! arguments to run a subset.

use lrising::gibbs::{exact_measure, mc_measure};
use lrising::lattice::{BoundaryCondition, ModelParams};
use lrising_cli::config::{parse_config, Overrides};
use lrising_cli::experiment::{Assertion, Outcome};
use serde_json::{json, Value};
use std::path::Path;
use std::time::Instant;

const SEED: u64 = 2024;

fn execute(cfg: Value) -> Outcome {
    let cfg = parse_config(&cfg.to_string(), &Overrides::default()).expect("valid config");
    lrising_cli::execute(&cfg).expect("experiment runs")
}

fn matching<'a>(o: &'a Outcome, needle: &str) -> Vec<&'a Assertion> {
    let v: Vec<&Assertion> = o.assertions.iter().filter(|a| a.name.contains(needle)).collect();
    assert!(!v.is_empty(), "no assertion matches '{needle}'");
    v
}

fn describe(a: &[&Assertion]) -> String {
    a.iter()
        .map(|a| match a.upper {
            Some(hi) => format!("[{}] {:.6e} in [{:.6e}, {:.6e}]", a.name, a.value, a.threshold, hi),
            None => format!("[{}] {:.6e} {} {:.6e}", a.name, a.value, a.relation, a.threshold),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn criterion_01_contour_bijection() -> Vec<Assertion> {
    let o = execute(json!({"command": "contours-verify", "N": 5, "samples": 1000, "group_N": 8, "seed": SEED}));
    let checks: Vec<&Assertion> = o.assertions.iter().filter(|a| a.name.starts_with("N=")).collect();
    assert_eq!(checks.len(), 12);
    checks.into_iter().cloned().collect()
}

const TOY_GRID: [u64; 8] = [64, 128, 256, 512, 1024, 2048, 4096, 8192];

fn criterion_02_toy_small_ball_slope() -> Vec<Assertion> {
    let o = execute(json!({
        "command": "toy-scan", "alpha": 0.75, "K": 1.0, "beta": 1.0,
        "N_grid": TOY_GRID, "samples": 100_000, "seed": SEED,
        "thresholds": {"slope_tolerance": 0.05},
    }));
    matching(&o, "small-ball slope").into_iter().cloned().collect()
}

fn wllt() -> Outcome {
    execute(json!({
        "command": "wllt-check", "alpha": [0.6, 0.75, 0.9], "N_grid": [16, 64, 256],
        "thresholds": {"integral_factor": 1.05},
    }))
}

fn criterion_03_characteristic_function_integral() -> Vec<Assertion> {
    let o = wllt();
    let checks = matching(&o, "integral of |psi|");
    assert_eq!(checks.len(), 9);
    checks.into_iter().cloned().collect()
}

fn criterion_04_far_field_bound() -> Vec<Assertion> {
    let o = wllt();
    let checks: Vec<&Assertion> = o.assertions.iter().filter(|a| a.name.ends_with(": A_N")).collect();
    assert_eq!(checks.len(), 9);
    assert!(checks.iter().all(|a| a.relation == "<"));
    checks.into_iter().cloned().collect()
}

fn criterion_05_variance_dichotomy() -> Vec<Assertion> {
    let mut outcomes = Vec::new();
    for alpha in [0.6, 0.75, 0.9] {
        outcomes.push(execute(json!({
            "command": "toy-scan", "alpha": alpha, "N_grid": TOY_GRID, "samples": 100_000, "seed": SEED,
            "thresholds": {"var_slope_tolerance": 0.05},
        })));
    }
    for alpha in [0.1, 0.25] {
        outcomes.push(execute(json!({
            "command": "toy-scan", "alpha": alpha, "N_grid": [1024, 8192], "samples": 100_000, "seed": SEED,
            "thresholds": {"var_sigma": 3.0},
        })));
    }
    let mut checks = Vec::new();
    for o in &outcomes[..3] {
        checks.extend(matching(o, "variance slope"));
    }
    for o in &outcomes[3..] {
        checks.extend(matching(o, "|Var(W) change|"));
    }
    let mut named: Vec<Assertion> = checks.iter().map(|a| (*a).clone()).collect();
    for (a, alpha) in named.iter_mut().zip([0.6, 0.75, 0.9, 0.1, 0.25]) {
        a.name = format!("alpha={alpha} {}", a.name);
    }
    named
}

fn criterion_06_peierls() -> Vec<Assertion> {
    let o = execute(json!({
        "command": "peierls", "checks": ["peierls"], "alpha": [0.1, 0.3], "N": 12, "m_max": 8,
        "thresholds": {"zeta_tolerance": 0.05},
    }));
    o.assertions
}

fn criterion_07_entropy_bound() -> Vec<Assertion> {
    let o = execute(json!({
        "command": "peierls", "checks": ["entropy"], "entropy_alpha": [0.0, 0.3], "entropy_b": [3.0, 5.0, 10.0],
        "entropy_m_max": 6,
    }));
    assert_eq!(o.assertions.len(), 36);
    o.assertions
}

fn criterion_08_quasi_additivity() -> Vec<Assertion> {
    let o = execute(json!({
        "command": "peierls", "checks": ["quasi-additivity"], "qa_alpha": 0.3, "qa_N": 16, "qa_trials": 10_000,
        "seed": SEED,
    }));
    o.assertions
}

fn criterion_09_rho_decay() -> Vec<Assertion> {
    let o = execute(json!({
        "command": "rho-scan", "alpha": 0.75, "a": 0.5, "epsilon": 0.1, "m_max": 6, "beta": [2.0, 4.0, 8.0, 16.0],
        "thresholds": {"rho_max": 1e-6},
    }));
    o.assertions
}

fn criterion_10_gibbs_engine() -> Vec<Assertion> {
    let mut checks = Vec::new();
    for case in 0..20u64 {
        let alpha = [0.3, 0.6][case as usize % 2];
        let beta = 0.25 * (1 + case % 4) as f64;
        let p = ModelParams::new(alpha, beta, 1.0, 4, 64).unwrap();
        let eta = BoundaryCondition::random_stream(4, 64, SEED, case);
        let exact = exact_measure(&p, &eta).unwrap().magnetization(0).unwrap();
        let mc = mc_measure(&p, &eta, 400_000, 20_000, SEED + case, &[0]).unwrap().magnetization;
        checks.push(Assertion::at_most(
            format!("case {case} alpha={alpha} beta={beta}: |MC - exact| / stderr"),
            (mc.value - exact).abs() / mc.stderr,
            3.0,
        ));
    }
    for n in 1..=6u64 {
        let o = execute(json!({
            "command": "gibbs-exact", "alpha": 0.4, "beta": 0.7, "N": n, "window": [-1, 0, 1], "seed": SEED,
            "beta_large": 50.0,
            "thresholds": {"identity_tolerance": 1e-10, "antisymmetry_tolerance": 1e-12, "f_w_relative_gap": 1e-3},
        }));
        for mut a in o.assertions {
            a.name = format!("N={n}: {}", a.name);
            checks.push(a);
        }
    }
    checks
}

fn criterion_11_decoupled_measure() -> Vec<Assertion> {
    let mut checks = Vec::new();
    for alpha in [0.6, 0.75] {
        for beta in [0.5, 1.0] {
            let o = execute(json!({
                "command": "gibbs-exact", "alpha": alpha, "beta": beta, "N": 4, "Y": 1024, "window": [0, 1],
                "N_next": [16, 64], "seed": SEED,
            }));
            for mut a in o.assertions.into_iter().filter(|a| a.name.starts_with("decoupled")) {
                a.name = format!("alpha={alpha} beta={beta} {}", a.name);
                checks.push(a);
            }
        }
    }
    assert_eq!(checks.len(), 8);
    checks
}

fn criterion_12_metastate_dichotomy() -> Vec<Assertion> {
    let mut checks = Vec::new();
    for (alpha, beta) in [(0.75, 2.0), (0.25, 1.0)] {
        let o = execute(json!({
            "command": "metastate", "mode": "toy", "alpha": alpha, "beta": beta, "N_grid": [4096],
            "samples": 100_000, "seed": SEED,
            "thresholds": {"lambda_sigma": 3.0, "pure_mass_min": 0.95},
        }));
        checks.extend(o.assertions.into_iter().filter(|a| a.name.contains("lambda") || a.name.contains("bin mass")));
    }
    assert_eq!(checks.len(), 4);
    checks
}

fn criterion_13_null_recurrence() -> Vec<Assertion> {
    let o = execute(json!({
        "command": "null-recurrence", "alpha": 0.75, "beta": 2.0, "N": 8192, "tau": 0.2, "seed": SEED,
        "thresholds": {"mixed_max": 0.15, "pure_min": 0.4, "pure_max": 0.6},
    }));
    assert_eq!(o.assertions.len(), 3);
    o.assertions
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn criterion_14_determinism() -> Vec<Assertion> {
    let configs = [
        json!({"command": "toy-scan", "alpha": 0.75, "N_grid": [16, 32], "samples": 2000}),
        json!({"command": "gibbs-mc", "alpha": 0.4, "N": 5, "sweeps": 3000, "burn_in": 500}),
        json!({"command": "metastate", "mode": "exact", "alpha": 0.4, "N_grid": [2, 3], "samples": 50}),
        json!({"command": "null-recurrence", "N": 256}),
    ];
    let mut checks = Vec::new();
    for cfg in configs {
        let command = cfg["command"].as_str().unwrap().to_owned();
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for d in &dirs {
            let o = Overrides { command: None, seed: Some(SEED), output_dir: Some(d.path().display().to_string()) };
            let c = parse_config(&cfg.to_string(), &o).unwrap();
            assert!(lrising_cli::run(&c) <= lrising_cli::EXIT_ASSERTION);
        }
        let (a, b) = (csv_files(dirs[0].path()), csv_files(dirs[1].path()));
        assert!(!a.is_empty());
        checks.push(Assertion::holds(format!("{command}: {} CSV files byte-identical", a.len()), a == b));
    }
    checks
}

type Criterion = (u32, &'static str, fn() -> Vec<Assertion>);

const CRITERIA: [Criterion; 14] = [
    (1, "contour encoding bijection", criterion_01_contour_bijection),
    (2, "toy small-ball slope", criterion_02_toy_small_ball_slope),
    (3, "characteristic function integral", criterion_03_characteristic_function_integral),
    (4, "far-field scale bound", criterion_04_far_field_bound),
    (5, "variance growth dichotomy", criterion_05_variance_dichotomy),
    (6, "Peierls bound", criterion_06_peierls),
    (7, "contour entropy bound", criterion_07_entropy_bound),
    (8, "quasi-additivity", criterion_08_quasi_additivity),
    (9, "rho decay in beta", criterion_09_rho_decay),
    (10, "Gibbs engine consistency", criterion_10_gibbs_engine),
    (11, "decoupled measure", criterion_11_decoupled_measure),
    (12, "metastate dichotomy", criterion_12_metastate_dichotomy),
    (13, "null recurrence", criterion_13_null_recurrence),
    (14, "determinism", criterion_14_determinism),
];

fn main() {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, title, run) in CRITERIA {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let checks = run();
        let bad: Vec<&Assertion> = checks.iter().filter(|a| !a.pass).collect();
        println!(
            "criterion {id:02} {} {title} ({:.1} s)",
            if bad.is_empty() { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for a in &checks {
            println!("    {} {}", if a.pass { "ok  " } else { "FAIL" }, describe(&[a]));
        }
        if !bad.is_empty() {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
