use lrising_cli::config::{load_config, parse_config, Overrides, DEFAULT_SEED};
use lrising_cli::{execute, RunError, EXIT_CONFIG};
use serde_json::json;

fn parse(text: &str) -> Result<lrising_cli::config::ExperimentConfig, RunError> {
    parse_config(text, &Overrides::default())
}

fn message(text: &str) -> String {
    match parse(text) {
        Err(e @ RunError::Config(_)) => {
            assert_eq!(e.exit_code(), EXIT_CONFIG);
            e.to_string()
        }
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn defaults_are_filled() {
    let c = parse(r#"{"command": "rho-scan"}"#).unwrap();
    let p = &c.params;
    assert_eq!(p.real("alpha").unwrap(), 0.75);
    assert_eq!(p.reals("beta").unwrap(), vec![2.0, 4.0, 8.0, 16.0]);
    assert_eq!(p.int("m_max").unwrap(), 6);
    assert_eq!(p.text("kc_variant").unwrap(), "printed");
    assert_eq!(p.seed().unwrap(), DEFAULT_SEED);
    assert_eq!(p.text("output_dir").unwrap(), "out");
    assert_eq!(p.threshold("rho_max").unwrap(), 1e-6);
}

#[test]
fn truncation_defaults_to_sixteen_volumes() {
    let c = parse(r#"{"command": "gibbs-exact", "alpha": 0.4, "N": 5}"#).unwrap();
    assert_eq!(c.params.int("Y").unwrap(), 80);
    let c = parse(r#"{"command": "toy-scan", "alpha": 0.6, "N_grid": [8, 32], "samples": 10}"#).unwrap();
    assert_eq!(c.params.int("Y").unwrap(), 512);
    assert!(message(r#"{"command": "gibbs-exact", "alpha": 0.4, "N": 5, "Y": 9}"#).contains("'Y'"));
}

#[test]
fn round_trip_through_json() {
    let c = parse(r#"{"command": "toy-scan", "alpha": 0.6, "N_grid": [8, 32], "samples": 10, "seed": 5}"#).unwrap();
    let again = parse(&c.to_json_string()).unwrap();
    assert_eq!(c, again);
    assert_eq!(c.to_json()["command"], json!("toy-scan"));
    assert_eq!(c.to_json()["alpha"], json!(0.6));
}

#[test]
fn integers_are_accepted_as_reals() {
    let c = parse(r#"{"command": "gibbs-exact", "alpha": 0.4, "beta": 2, "N": 3}"#).unwrap();
    assert_eq!(c.params.real("beta").unwrap(), 2.0);
}

#[test]
fn overrides_take_precedence() {
    let o = Overrides { command: Some("rho-scan".into()), seed: Some(9), output_dir: Some("elsewhere".into()) };
    let c = parse_config(r#"{"seed": 1}"#, &o).unwrap();
    assert_eq!(c.command, "rho-scan");
    assert_eq!(c.params.seed().unwrap(), 9);
    assert_eq!(c.params.text("output_dir").unwrap(), "elsewhere");
    let c = load_config(None, &o).unwrap();
    assert_eq!(c.params.seed().unwrap(), 9);
}

#[test]
fn rejections() {
    assert!(message(r#"{"command": "rho-scan", "x": 1}"#).contains("unknown key 'x' for command 'rho-scan'"));
    assert!(message(r#"{"command": "rho-scan", "alpha": "big"}"#).contains("key 'alpha' must be a number"));
    assert!(message(r#"{"command": "gibbs-exact", "N": 3}"#).contains("missing required key 'alpha'"));
    assert!(message(r#"{"command": "rho-scan", "thresholds": {"nope": 1}}"#).contains("unknown threshold 'nope'"));
    assert!(message(r#"{"command": "nope"}"#).contains("unknown command 'nope'"));
    assert!(message(r#"{"alpha": 0.5}"#).contains("missing required key 'command'"));
    assert!(message("[1, 2]").contains("JSON object"));
    assert!(message("{").contains("not valid JSON"));
    assert!(message(r#"{"command": "gibbs-mc", "alpha": 0.4, "N": 3, "sweeps": 100, "burn_in": 100}"#)
        .contains("must exceed 'burn_in'"));
    assert!(message(r#"{"command": "dichotomy", "alpha": [0.3, 0.5]}"#).contains("alpha = 0.5"));
    assert!(message(r#"{"command": "toy-scan", "alpha": 0.6, "N_grid": [32, 8], "samples": 10}"#).contains("N_grid"));
    assert!(message(r#"{"command": "toy-scan", "alpha": 0.6, "N_grid": [8, 32], "samples": 10, "sampler": "x"}"#)
        .contains("x"));
    assert!(message(r#"{"command": "gibbs-exact", "alpha": 0.4, "N": 40}"#).contains("at most"));
    assert!(message(r#"{"command": "rho-scan", "beta": [4.0, 2.0]}"#).contains("'beta'"));
}

#[test]
fn command_mismatch_is_rejected() {
    let o = Overrides { command: Some("peierls".into()), ..Overrides::default() };
    let e = parse_config(r#"{"command": "rho-scan"}"#, &o).unwrap_err();
    assert!(e.to_string().contains("config is for command 'rho-scan' but 'peierls' was requested"));
}

#[test]
fn small_runs_execute() {
    let c = parse(r#"{"command": "contours-verify", "N": 2, "samples": 20, "group_N": 4}"#).unwrap();
    let o = execute(&c).unwrap();
    assert!(o.passed());
    assert!(!o.tables.is_empty());
    let c = parse(r#"{"command": "gibbs-exact", "alpha": 0.4, "N": 3, "window": [-1, 0]}"#).unwrap();
    assert!(execute(&c).unwrap().passed());
}
