//! The ten commands.

use crate::config::{truncation_factor, Fill, Key, Kind, Params};
use crate::experiment::{Assertion, Experiment, Outcome, Table};
use crate::{row, RunError};
use lrising::contour::{self, KcVariant, RhoParams};
use lrising::gibbs::{self, ExactEnsemble, EXACT_MAX_N};
use lrising::lattice::{boundary_energy, pattern_at, BoundaryCondition, MeasureMarginal, ModelParams};
use lrising::metastate::{self, DichotomySettings, THRESHOLD_EXCLUSION};
use lrising::registry::Named;
use lrising::toy::{self, percentile_grid, LambdaHistogram};

pub(crate) fn all() -> Vec<Box<dyn Experiment>> {
    vec![
        Box::new(ToyScan),
        Box::new(WlltCheck),
        Box::new(ContoursVerify),
        Box::new(Peierls),
        Box::new(RhoScan),
        Box::new(GibbsExact),
        Box::new(GibbsMc),
        Box::new(Metastate),
        Box::new(NullRecurrence),
        Box::new(Dichotomy),
    ]
}

fn bad<T>(msg: impl Into<String>) -> Result<T, RunError> {
    Err(RunError::Config(msg.into()))
}

fn grouping_c(p: &Params) -> Result<f64, RunError> {
    if p.has("c") {
        let c = p.real("c")?;
        if !(c > 0.0) {
            return bad("key 'c' must be positive");
        }
        Ok(c)
    } else {
        Ok(contour::default_c())
    }
}

fn check_window(p: &Params, n_key: &str) -> Result<(), RunError> {
    let w = p.sites("window")?;
    if w.is_empty() || w.windows(2).any(|x| x[0] >= x[1]) {
        return bad("key 'window' must be a non-empty increasing list of sites");
    }
    if p.has(n_key) {
        let n = p.sizes(n_key).map(|v| v.into_iter().min().unwrap_or(0)).or_else(|_| p.size(n_key))? as i64;
        if w.iter().any(|x| x.abs() > n) {
            return bad(format!("key 'window' must lie inside [-N, N] for N = {n}"));
        }
    }
    Ok(())
}

fn spins_label(s: usize, k: usize) -> String {
    pattern_at(s, k).iter().map(|&x| if x == 1 { '+' } else { '-' }).collect()
}

fn marginal_table(name: &str, parts: &[(&str, &MeasureMarginal)]) -> Table {
    let mut header = vec!["pattern"];
    header.extend(parts.iter().map(|(n, _)| *n));
    let mut t = Table::new(name, &header);
    let k = parts[0].1.window.len();
    for s in 0..parts[0].1.probs.len() {
        let mut r = row![spins_label(s, k)];
        r.extend(parts.iter().map(|(_, m)| crate::experiment::Cell::from(m.probs[s])));
        t.push(r);
    }
    t
}

fn lambda_table(name: &str, h: &LambdaHistogram) -> Table {
    let mut t = Table::new(name, &["bin_lo", "bin_hi", "mass"]);
    let k = h.bins.len() as f64;
    for (i, &m) in h.bins.iter().enumerate() {
        t.push(row![i as f64 / k, (i + 1) as f64 / k, m]);
    }
    t
}

/// Dichotomy-side checks on a `λ` histogram, by regime of `α`.
fn lambda_assertions(alpha: f64, h: &LambdaHistogram, p: &Params, out: &mut Vec<Assertion>) -> Result<(), RunError> {
    let sigma = p.threshold("lambda_sigma")?;
    let tag = format!("alpha={alpha}");
    out.push(Assertion::within(
        format!("{tag}: mean lambda within {sigma} stderr of 1/2"),
        h.mean,
        0.5 - sigma * h.stderr,
        0.5 + sigma * h.stderr,
    ));
    if alpha > THRESHOLD_EXCLUSION.1 {
        out.push(Assertion::at_least(
            format!("{tag}: lambda mass outside [0.01, 0.99]"),
            h.pure_mass,
            p.threshold("pure_mass_min")?,
        ));
    } else if alpha < THRESHOLD_EXCLUSION.0 {
        let least =
            (1..9).map(|b| h.mass_between(b as f64 / 10.0, (b + 1) as f64 / 10.0)).fold(f64::INFINITY, f64::min);
        out.push(Assertion::above(format!("{tag}: least width-0.1 bin mass inside [0.1, 0.9]"), least, 0.0));
    }
    Ok(())
}

pub struct ToyScan;

impl Named for ToyScan {
    fn name(&self) -> &'static str {
        "toy-scan"
    }
}

impl Experiment for ToyScan {
    fn about(&self) -> &'static str {
        "small-ball probabilities and variance of W_N across volumes"
    }

    fn keys(&self) -> &'static [Key] {
        const K: &[Key] = &[
            Key::new("alpha", Kind::Real, Fill::Required),
            Key::new("N_grid", Kind::Ints, Fill::Required),
            Key::new("samples", Kind::Int, Fill::Required),
            Key::new("beta", Kind::Real, Fill::Real(1.0)),
            Key::new("K", Kind::Real, Fill::Real(1.0)),
            Key::new("Y", Kind::Int, Fill::Optional),
            Key::new("sampler", Kind::Text, Fill::Text("hybrid")),
        ];
        K
    }

    fn thresholds(&self) -> &'static [(&'static str, f64)] {
        &[("slope_tolerance", 0.05), ("var_slope_tolerance", 0.05), ("var_sigma", 3.0)]
    }

    fn finish(&self, p: &mut Params) -> Result<(), RunError> {
        let grid = p.sizes("N_grid")?;
        if grid.len() < 2 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("key 'N_grid' must hold at least two increasing volumes");
        }
        if p.size("samples")? < 2 {
            return bad("key 'samples' must be at least 2");
        }
        truncation_factor(p, *grid.last().unwrap_or(&0))?;
        toy::sampler_registry().must_get(&p.text("sampler")?).map_err(RunError::Config)?;
        Ok(())
    }

    fn run(&self, p: &Params) -> Result<Outcome, RunError> {
        let alpha = p.real("alpha")?;
        let grid = p.sizes("N_grid")?;
        let yf = p.size("Y")? / grid[grid.len() - 1];
        let t = toy::smallball_scaling_experiment(
            alpha,
            p.real("K")?,
            &grid,
            p.size("samples")?,
            p.seed()?,
            yf,
            &p.text("sampler")?,
        )?;
        let mut rows = Table::new("smallball", &["N", "p", "stderr", "scaled", "var", "var_stderr"]);
        let mut quant = Table::new("quantiles", &["N", "q", "value"]);
        for r in &t.rows {
            rows.push(row![r.n, r.p, r.stderr, r.scaled, r.var, r.var_stderr]);
            for (q, v) in percentile_grid().iter().zip(&r.quantiles) {
                quant.push(row![r.n, *q, *v]);
            }
        }
        let mut fits = Table::new("fits", &["quantity", "value"]);
        fits.push(row!["p_slope", t.slope]);
        fits.push(row!["var_slope", t.var_slope]);
        let mut a = Vec::new();
        if alpha > 0.5 {
            let tol = p.threshold("slope_tolerance")?;
            let target = -(alpha - 0.5);
            a.push(Assertion::within("small-ball slope", t.slope, target - tol, target + tol));
            let tol = p.threshold("var_slope_tolerance")?;
            let target = 2.0 * alpha - 1.0;
            a.push(Assertion::within("variance slope", t.var_slope, target - tol, target + tol));
        } else if alpha < 0.5 {
            let k = p.threshold("var_sigma")?;
            for (i, &(d, se)) in t.var_differences.iter().enumerate() {
                a.push(Assertion::below(
                    format!("|Var(W) change| N={} -> N={} in stderr units", grid[i], grid[i + 1]),
                    d.abs() / se,
                    k,
                ));
            }
        }
        Ok(Outcome { tables: vec![rows, quant, fits], assertions: a })
    }
}

pub struct WlltCheck;

impl Named for WlltCheck {
    fn name(&self) -> &'static str {
        "wllt-check"
    }
}

impl Experiment for WlltCheck {
    fn about(&self) -> &'static str {
        "characteristic-function integral and A_N bound"
    }

    fn keys(&self) -> &'static [Key] {
        const K: &[Key] = &[
            Key::new("alpha", Kind::Reals, Fill::Reals(&[0.6, 0.75, 0.9])),
            Key::new("N_grid", Kind::Ints, Fill::Ints(&[16, 64, 256])),
            Key::new("Y", Kind::Int, Fill::Optional),
        ];
        K
    }

    fn thresholds(&self) -> &'static [(&'static str, f64)] {
        &[("integral_factor", 1.05)]
    }

    fn finish(&self, p: &mut Params) -> Result<(), RunError> {
        if let Some(a) = p.reals("alpha")?.into_iter().find(|a| !(*a > 0.5 && *a < 1.0)) {
            return bad(format!("key 'alpha' entries must lie in (1/2, 1), got {a}"));
        }
        let grid = p.sizes("N_grid")?;
        truncation_factor(p, grid.iter().copied().max().unwrap_or(0))?;
        Ok(())
    }

    fn run(&self, p: &Params) -> Result<Outcome, RunError> {
        let grid = p.sizes("N_grid")?;
        let yf = p.size("Y")? / grid.iter().copied().max().unwrap_or(1);
        let factor = p.threshold("integral_factor")?;
        let mut t = Table::new(
            "wllt",
            &["alpha", "N", "A_N", "A_N_with_tail", "A_N_bound", "tau_N", "integral", "gaussian", "error_estimate"],
        );
        let mut a = Vec::new();
        for alpha in p.reals("alpha")? {
            for &n in &grid {
                let mp = ModelParams::new(alpha, 1.0, 1.0, n, yf * n)?;
                let w = toy::wllt_integral_check(&mp)?;
                let s = w.schedule;
                t.push(row![
                    alpha,
                    n,
                    s.a_n,
                    s.a_n_with_tail,
                    s.a_n_bound,
                    s.tau_n,
                    w.value,
                    w.gaussian,
                    w.error_estimate
                ]);
                a.push(Assertion::at_most(
                    format!("alpha={alpha} N={n}: A_N integral of |psi|"),
                    w.value,
                    2.0 * std::f64::consts::PI * factor,
                ));
                a.push(Assertion::below(format!("alpha={alpha} N={n}: A_N"), s.a_n_with_tail, s.a_n_bound));
            }
        }
        Ok(Outcome { tables: vec![t], assertions: a })
    }
}

pub struct ContoursVerify;

impl Named for ContoursVerify {
    fn name(&self) -> &'static str {
        "contours-verify"
    }
}

impl Experiment for ContoursVerify {
    fn about(&self) -> &'static str {
        "exhaustive triangle bijection and grouping order independence"
    }

    fn keys(&self) -> &'static [Key] {
        const K: &[Key] = &[
            Key::new("N", Kind::Int, Fill::Int(5)),
            Key::new("c", Kind::Real, Fill::Optional),
            Key::new("samples", Kind::Int, Fill::Int(1000)),
            Key::new("group_N", Kind::Int, Fill::Int(8)),
        ];
        K
    }

    fn finish(&self, p: &mut Params) -> Result<(), RunError> {
        let n = p.size("N")?;
        if n > contour::BIJECTION_MAX_N {
            return bad(format!("key 'N' must be at most {}", contour::BIJECTION_MAX_N));
        }
        if p.size("group_N")? == 0 {
            return bad("key 'group_N' must be positive");
        }
        grouping_c(p)?;
        Ok(())
    }

    fn run(&self, p: &Params) -> Result<Outcome, RunError> {
        let mut t = Table::new("bijection", &["N", "configs", "round_trip_failures", "pairs", "triangle_violations"]);
        let mut a = Vec::new();
        for n in 0..=p.size("N")? {
            let b = contour::bijection_check(n)?;
            t.push(row![n, b.configs, b.round_trip_failures, b.pairs, b.triangle_violations]);
            a.push(Assertion::at_most(format!("N={n}: round-trip failures"), b.round_trip_failures as f64, 0.0));
            a.push(Assertion::at_most(
                format!("N={n}: triangle condition violations"),
                b.triangle_violations as f64,
                0.0,
            ));
        }
        let c = grouping_c(p)?;
        let g = contour::grouping_order_check(p.size("group_N")?, p.size("samples")?, c, p.seed()?)?;
        let mut gt = Table::new("grouping", &["c", "configs", "mismatches", "invalid"]);
        gt.push(row![c, g.configs, g.mismatches, g.invalid]);
        a.push(Assertion::at_most("grouping: shuffled-order mismatches", g.mismatches as f64, 0.0));
        a.push(Assertion::at_most("grouping: invalid partitions", g.invalid as f64, 0.0));
        Ok(Outcome { tables: vec![t, gt], assertions: a })
    }
}

pub struct Peierls;

impl Named for Peierls {
    fn name(&self) -> &'static str {
        "peierls"
    }
}

const PEIERLS_CHECKS: [&str; 3] = ["peierls", "entropy", "quasi-additivity"];

impl Experiment for Peierls {
    fn about(&self) -> &'static str {
        "Peierls ratios, entropy bound and quasi-additivity of contour energies"
    }

    fn keys(&self) -> &'static [Key] {
        const K: &[Key] = &[
            Key::new("checks", Kind::Texts, Fill::Texts(&PEIERLS_CHECKS)),
            Key::new("alpha", Kind::Reals, Fill::Reals(&[0.1, 0.3])),
            Key::new("N", Kind::Int, Fill::Int(12)),
            Key::new("m_max", Kind::Int, Fill::Int(8)),
            Key::new("J", Kind::Real, Fill::Real(1.0)),
            Key::new("c", Kind::Real, Fill::Optional),
            Key::new("entropy_alpha", Kind::Reals, Fill::Reals(&[0.0, 0.3])),
            Key::new("entropy_b", Kind::Reals, Fill::Reals(&[3.0, 5.0, 10.0])),
            Key::new("entropy_m_max", Kind::Int, Fill::Int(6)),
            Key::new("qa_alpha", Kind::Real, Fill::Real(0.3)),
            Key::new("qa_N", Kind::Int, Fill::Int(16)),
            Key::new("qa_trials", Kind::Int, Fill::Int(10_000)),
        ];
        K
    }

    fn thresholds(&self) -> &'static [(&'static str, f64)] {
        &[("zeta_tolerance", 0.05)]
    }

    fn finish(&self, p: &mut Params) -> Result<(), RunError> {
        if let Some(c) = p.texts("checks")?.into_iter().find(|c| !PEIERLS_CHECKS.contains(&c.as_str())) {
            return bad(format!("unknown check '{c}' in key 'checks'; known: {}", PEIERLS_CHECKS.join(", ")));
        }
        if p.size("m_max")? < 2 {
            return bad("key 'm_max' must be at least 2");
        }
        grouping_c(p)?;
        Ok(())
    }

    fn run(&self, p: &Params) -> Result<Outcome, RunError> {
        let checks = p.texts("checks")?;
        let c = grouping_c(p)?;
        let mut out = Outcome::default();
        if checks.iter().any(|x| x == "peierls") {
            let m = p.size("m_max")?;
            let tol = p.threshold("zeta_tolerance")?;
            let mut t = Table::new(
                "peierls",
                &["alpha", "mass", "count", "boundary_count", "min_ratio_all", "min_ratio_interior", "zeta_hat"],
            );
            for alpha in p.reals("alpha")? {
                let r = contour::peierls_check(alpha, m, p.size("N")?, p.real("J")?, c)?;
                for row in &r.rows {
                    t.push(row![
                        alpha,
                        row.mass,
                        row.count,
                        row.boundary_count,
                        row.min_ratio_all,
                        row.min_ratio_interior,
                        r.zeta_hat(row.mass)
                    ]);
                }
                out.assertions.push(Assertion::above(format!("alpha={alpha}: min H/norm"), r.min_ratio(m), 0.0));
                let drift = (r.zeta_hat(m) / r.zeta_hat(m - 1) - 1.0).abs();
                out.assertions.push(Assertion::at_most(
                    format!("alpha={alpha}: relative zeta change between cutoffs {} and {m}", m - 1),
                    drift,
                    tol,
                ));
            }
            out.tables.push(t);
        }
        if checks.iter().any(|x| x == "entropy") {
            let r = contour::entropy_bound_check(
                &p.reals("entropy_alpha")?,
                &p.reals("entropy_b")?,
                p.size("entropy_m_max")?,
                c,
            )?;
            let mut t = Table::new("entropy", &["alpha", "b", "mass", "contours", "lhs", "rhs", "holds"]);
            for row in &r.rows {
                t.push(row![row.alpha, row.b, row.mass, row.contours, row.lhs, row.rhs, row.holds()]);
                out.assertions.push(Assertion::at_most(
                    format!("entropy alpha={} b={} m={}", row.alpha, row.b, row.mass),
                    row.lhs,
                    row.rhs,
                ));
            }
            out.tables.push(t);
        }
        if checks.iter().any(|x| x == "quasi-additivity") {
            let r = contour::quasi_additivity_check(
                p.real("qa_alpha")?,
                c,
                p.size("qa_N")?,
                p.size("qa_trials")?,
                p.seed()?,
            )?;
            let mut t = Table::new("quasi_additivity", &["quantity", "value"]);
            t.push(row!["families", r.families]);
            t.push(row!["contours_tested", r.contours_tested]);
            t.push(row!["k_c_printed", r.k_c_printed]);
            t.push(row!["k_c_minus", r.k_c_minus]);
            t.push(row!["min_ratio_first", r.min_ratio_first]);
            t.push(row!["min_ratio_second", r.min_ratio_second]);
            t.push(row!["violations_first_printed", r.violations_first_printed]);
            t.push(row!["violations_second_printed", r.violations_second_printed]);
            t.push(row!["violations_first_minus", r.violations_first_minus]);
            t.push(row!["violations_second_minus", r.violations_second_minus]);
            out.assertions.push(Assertion::at_most("quasi-additivity violations", r.violations_printed() as f64, 0.0));
            out.tables.push(t);
        }
        Ok(out)
    }
}

pub struct RhoScan;

impl Named for RhoScan {
    fn name(&self) -> &'static str {
        "rho-scan"
    }
}

fn kc_variant(p: &Params) -> Result<KcVariant, RunError> {
    match p.text("kc_variant")?.as_str() {
        "printed" => Ok(KcVariant::Printed),
        "minus" => Ok(KcVariant::MinusSign),
        other => bad(format!("key 'kc_variant' must be 'printed' or 'minus', got '{other}'")),
    }
}

fn rho_params(p: &Params) -> Result<RhoParams, RunError> {
    let mut s = RhoParams::new(
        p.real("alpha")?,
        p.real("a")?,
        p.real("epsilon")?,
        p.size("N")?,
        p.size("cut")?,
        p.size("m_max")?,
    )?;
    s.c = grouping_c(p)?;
    s.variant = kc_variant(p)?;
    Ok(s)
}

impl Experiment for RhoScan {
    fn about(&self) -> &'static str {
        "truncated Peierls sum over contours containing the origin"
    }

    fn keys(&self) -> &'static [Key] {
        const K: &[Key] = &[
            Key::new("alpha", Kind::Real, Fill::Real(0.75)),
            Key::new("a", Kind::Real, Fill::Real(0.5)),
            Key::new("epsilon", Kind::Real, Fill::Real(0.1)),
            Key::new("N", Kind::Int, Fill::Int(1 << 14)),
            Key::new("cut", Kind::Int, Fill::Int(2)),
            Key::new("m_max", Kind::Int, Fill::Int(6)),
            Key::new("beta", Kind::Reals, Fill::Reals(&[2.0, 4.0, 8.0, 16.0])),
            Key::new("c", Kind::Real, Fill::Optional),
            Key::new("kc_variant", Kind::Text, Fill::Text("printed")),
        ];
        K
    }

    fn thresholds(&self) -> &'static [(&'static str, f64)] {
        &[("rho_max", 1e-6)]
    }

    fn finish(&self, p: &mut Params) -> Result<(), RunError> {
        rho_params(p)?;
        let b = p.reals("beta")?;
        if b.is_empty() || b.windows(2).any(|w| w[0] >= w[1]) || b[0] <= 0.0 {
            return bad("key 'beta' must be a non-empty increasing list of positive numbers");
        }
        Ok(())
    }

    fn run(&self, p: &Params) -> Result<Outcome, RunError> {
        let spec = rho_params(p)?;
        let betas = p.reals("beta")?;
        let r = contour::rho_scan(&spec, &betas)?;
        let mut t = Table::new("rho", &["beta", "rho", "terms", "k_c", "c"]);
        for (b, v) in r.betas.iter().zip(&r.values) {
            t.push(row![*b, *v, r.terms, r.k_c, spec.c]);
        }
        let last = *r.values.last().expect("at least one beta");
        let a = vec![
            Assertion::holds("rho strictly decreasing in beta", r.strictly_decreasing()),
            Assertion::below(format!("rho at beta={}", betas[betas.len() - 1]), last, p.threshold("rho_max")?),
        ];
        Ok(Outcome { tables: vec![t], assertions: a })
    }
}

fn exact_params(p: &Params) -> Result<ModelParams, RunError> {
    Ok(ModelParams::new(p.real("alpha")?, p.real("beta")?, p.real("J")?, p.size("N")?, p.size("Y")?)?)
}

fn eta_of(p: &Params, mp: &ModelParams) -> Result<BoundaryCondition, RunError> {
    Ok(BoundaryCondition::random_stream(mp.n, mp.y, p.seed()?, p.int("eta_stream")?))
}

fn finish_exact_volume(p: &mut Params, limit: Option<usize>) -> Result<(), RunError> {
    let n = p.size("N")?;
    if let Some(limit) = limit {
        if n > limit {
            return bad(format!("key 'N' must be at most {limit} for exact enumeration"));
        }
    }
    truncation_factor(p, n)?;
    check_window(p, "N")?;
    exact_params(p)?;
    Ok(())
}

pub struct GibbsExact;

impl Named for GibbsExact {
    fn name(&self) -> &'static str {
        "gibbs-exact"
    }
}

impl Experiment for GibbsExact {
    fn about(&self) -> &'static str {
        "exact finite-volume measure, free-energy difference and decoupled-measure gaps"
    }

    fn keys(&self) -> &'static [Key] {
        const K: &[Key] = &[
            Key::new("alpha", Kind::Real, Fill::Required),
            Key::new("beta", Kind::Real, Fill::Real(1.0)),
            Key::new("J", Kind::Real, Fill::Real(1.0)),
            Key::new("N", Kind::Int, Fill::Required),
            Key::new("Y", Kind::Int, Fill::Optional),
            Key::new("window", Kind::Sites, Fill::Sites(&[0])),
            Key::new("eta_stream", Kind::Int, Fill::Int(0)),
            Key::new("beta_large", Kind::Real, Fill::Real(50.0)),
            Key::new("N_next", Kind::Ints, Fill::Optional),
        ];
        K
    }

    fn thresholds(&self) -> &'static [(&'static str, f64)] {
        &[("identity_tolerance", 1e-10), ("antisymmetry_tolerance", 1e-12), ("f_w_relative_gap", 1e-3)]
    }

    fn finish(&self, p: &mut Params) -> Result<(), RunError> {
        finish_exact_volume(p, Some(EXACT_MAX_N))?;
        if p.has("N_next") {
            let n = p.size("N")?;
            if let Some(m) = p.sizes("N_next")?.into_iter().find(|&m| m <= n || m > p.size("Y").unwrap_or(0)) {
                return bad(format!("key 'N_next' entries must lie in (N, Y], got {m}"));
            }
        }
        if !(p.real("beta_large")? > 0.0) {
            return bad("key 'beta_large' must be positive");
        }
        Ok(())
    }

    fn run(&self, p: &Params) -> Result<Outcome, RunError> {
        let mp = exact_params(p)?;
        let window = p.sites("window")?;
        let eta = eta_of(p, &mp)?;
        let ens = ExactEnsemble::new(&mp, &eta)?;
        let mut mags = Table::new("magnetization", &["x", "m"]);
        for (x, m) in (-(mp.n as i64)..=mp.n as i64).zip(ens.magnetizations()?) {
            mags.push(row![x, m]);
        }
        let mu = ens.marginal(&window)?;
        let plus = ens.constrained_marginal(&window, 1)?;
        let minus = ens.constrained_marginal(&window, -1)?;
        let lambda = ens.mixture_weight();
        let mix = MeasureMarginal::mixture(&[(1.0 - lambda, &plus), (lambda, &minus)])?;
        let identity_gap = mu.probs.iter().zip(&mix.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let marg = marginal_table("marginal", &[("mu", &mu), ("mu_plus", &plus), ("mu_minus", &minus)]);

        let f = ens.free_energy();
        let f_neg = ExactEnsemble::new(&mp, &eta.negated())?.free_energy();
        let w = boundary_energy(&eta, &mp)?.w;
        let cold = mp.with_beta(p.real("beta_large")?);
        let f_cold = ExactEnsemble::new(&cold, &eta)?.free_energy();
        let cold_gap = (f_cold - w).abs() / w.abs().max(f64::MIN_POSITIVE);
        let mut summary = Table::new("summary", &["quantity", "value"]);
        for (k, v) in [
            ("log_z", ens.log_z),
            ("log_z_plus", ens.log_z_plus),
            ("log_z_minus", ens.log_z_minus),
            ("lambda", lambda),
            ("free_energy", f),
            ("free_energy_negated_eta", f_neg),
            ("boundary_energy", w),
            ("free_energy_beta_large", f_cold),
            ("decomposition_gap", identity_gap),
        ] {
            summary.push(row![k, v]);
        }
        let mut a = vec![
            Assertion::at_most("decomposition identity gap", identity_gap, p.threshold("identity_tolerance")?),
            Assertion::at_most(
                "free-energy antisymmetry |F(eta) + F(-eta)|",
                (f + f_neg).abs(),
                p.threshold("antisymmetry_tolerance")? * f.abs().max(1.0),
            ),
            Assertion::below(
                format!("|F - W| / |W| at beta={}", cold.beta),
                cold_gap,
                p.threshold("f_w_relative_gap")?,
            ),
        ];
        let mut tables = vec![summary, mags, marg];
        if p.has("N_next") {
            let mut t = Table::new("decoupled", &["N", "N_next", "gap", "bound"]);
            for m in p.sizes("N_next")? {
                let g = metastate::decoupled_measure_gap(&mp, &eta, m, &window)?;
                t.push(row![g.n, g.n_next, g.gap, g.bound]);
                a.push(Assertion::at_most(format!("decoupled gap N'={m}"), g.gap, g.bound));
            }
            tables.push(t);
        }
        Ok(Outcome { tables, assertions: a })
    }
}

pub struct GibbsMc;

impl Named for GibbsMc {
    fn name(&self) -> &'static str {
        "gibbs-mc"
    }
}

impl Experiment for GibbsMc {
    fn about(&self) -> &'static str {
        "heat-bath Monte Carlo, compared with exact enumeration when N is small"
    }

    fn keys(&self) -> &'static [Key] {
        const K: &[Key] = &[
            Key::new("alpha", Kind::Real, Fill::Required),
            Key::new("beta", Kind::Real, Fill::Real(1.0)),
            Key::new("J", Kind::Real, Fill::Real(1.0)),
            Key::new("N", Kind::Int, Fill::Required),
            Key::new("Y", Kind::Int, Fill::Optional),
            Key::new("window", Kind::Sites, Fill::Sites(&[0])),
            Key::new("eta_stream", Kind::Int, Fill::Int(0)),
            Key::new("sweeps", Kind::Int, Fill::Int(400_000)),
            Key::new("burn_in", Kind::Int, Fill::Int(20_000)),
        ];
        K
    }

    fn thresholds(&self) -> &'static [(&'static str, f64)] {
        &[("stderr_multiple", 3.0)]
    }

    fn finish(&self, p: &mut Params) -> Result<(), RunError> {
        let (sweeps, burn) = (p.int("sweeps")?, p.int("burn_in")?);
        if sweeps <= burn {
            return bad(format!("key 'sweeps' ({sweeps}) must exceed 'burn_in' ({burn})"));
        }
        if sweeps - burn < gibbs::MC_BATCHES as u64 {
            return bad(format!("need at least {} sweeps after burn-in", gibbs::MC_BATCHES));
        }
        finish_exact_volume(p, None)
    }

    fn run(&self, p: &Params) -> Result<Outcome, RunError> {
        let mp = exact_params(p)?;
        let window = p.sites("window")?;
        let eta = eta_of(p, &mp)?;
        let r = gibbs::mc_measure(&mp, &eta, p.size("sweeps")?, p.size("burn_in")?, p.seed()?, &window)?;
        let mut t = Table::new("mc", &["quantity", "value", "stderr", "exact"]);
        let mut a = Vec::new();
        let exact = if mp.n <= EXACT_MAX_N { Some(ExactEnsemble::new(&mp, &eta)?) } else { None };
        let m0_exact = match &exact {
            Some(e) => e.magnetization(0)?,
            None => f64::NAN,
        };
        t.push(row!["magnetization_0", r.magnetization.value, r.magnetization.stderr, m0_exact]);
        let k = window.len();
        let exact_marg = exact.as_ref().map(|e| e.marginal(&window)).transpose()?;
        for (s, (&q, &se)) in r.marginal.probs.iter().zip(&r.marginal_stderr).enumerate() {
            let ex = exact_marg.as_ref().map_or(f64::NAN, |m| m.probs[s]);
            t.push(row![format!("pattern {}", spins_label(s, k)), q, se, ex]);
        }
        if exact.is_some() {
            let z = (r.magnetization.value - m0_exact).abs() / r.magnetization.stderr;
            a.push(Assertion::at_most(
                "|MC - exact| site-0 magnetization in stderr units",
                z,
                p.threshold("stderr_multiple")?,
            ));
        }
        Ok(Outcome { tables: vec![t], assertions: a })
    }
}

pub struct Metastate;

impl Named for Metastate {
    fn name(&self) -> &'static str {
        "metastate"
    }
}

impl Experiment for Metastate {
    fn about(&self) -> &'static str {
        "empirical metastate: lambda histogram and ball frequencies over sampled boundary conditions"
    }

    fn keys(&self) -> &'static [Key] {
        const K: &[Key] = &[
            Key::new("mode", Kind::Text, Fill::Text("toy")),
            Key::new("alpha", Kind::Real, Fill::Required),
            Key::new("beta", Kind::Real, Fill::Real(1.0)),
            Key::new("N_grid", Kind::Ints, Fill::Required),
            Key::new("Y", Kind::Int, Fill::Optional),
            Key::new("tau", Kind::Real, Fill::Real(0.2)),
            Key::new("window", Kind::Sites, Fill::Sites(&[0])),
            Key::new("samples", Kind::Int, Fill::Required),
        ];
        K
    }

    fn thresholds(&self) -> &'static [(&'static str, f64)] {
        &[("lambda_sigma", 3.0), ("pure_mass_min", 0.95)]
    }

    fn finish(&self, p: &mut Params) -> Result<(), RunError> {
        let grid = p.sizes("N_grid")?;
        let max = grid.iter().copied().max().unwrap_or(0);
        match p.text("mode")?.as_str() {
            "toy" => {}
            "exact" => {
                if max > EXACT_MAX_N {
                    return bad(format!("exact mode needs every volume at most {EXACT_MAX_N}"));
                }
                check_window(p, "N_grid")?;
            }
            other => return bad(format!("key 'mode' must be 'toy' or 'exact', got '{other}'")),
        }
        truncation_factor(p, max)?;
        let tau = p.real("tau")?;
        if !(tau > 0.0 && tau <= 1.0) {
            return bad("key 'tau' must lie in (0, 1]");
        }
        if p.size("samples")? < 2 {
            return bad("key 'samples' must be at least 2");
        }
        Ok(())
    }

    fn run(&self, p: &Params) -> Result<Outcome, RunError> {
        let alpha = p.real("alpha")?;
        let beta = p.real("beta")?;
        let grid = p.sizes("N_grid")?;
        let max = grid.iter().copied().max().unwrap_or(1);
        let (y, tau, samples, seed) = (p.size("Y")?, p.real("tau")?, p.size("samples")?, p.seed()?);
        let h = match p.text("mode")?.as_str() {
            "exact" => {
                metastate::empirical_metastate_exact(alpha, beta, &grid, y, tau, &p.sites("window")?, samples, seed)?
            }
            _ => metastate::empirical_metastate_toy(alpha, beta, &grid, y / max, tau, samples, seed)?,
        };
        let mut balls = Table::new("balls", &["ball", "frequency", "stderr"]);
        balls.push(row!["plus", h.balls.plus, h.balls.plus_stderr]);
        balls.push(row!["minus", h.balls.minus, h.balls.minus_stderr]);
        balls.push(row!["neither", h.balls.neither, h.balls.neither_stderr]);
        let mut a = Vec::new();
        lambda_assertions(alpha, &h.lambda, p, &mut a)?;
        let exchange = (h.balls.plus - h.balls.minus).abs();
        let se = h.balls.plus_stderr.hypot(h.balls.minus_stderr);
        a.push(Assertion::at_most(
            "plus/minus ball frequency difference in stderr units",
            if se > 0.0 { exchange / se } else { exchange },
            p.threshold("lambda_sigma")?,
        ));
        Ok(Outcome { tables: vec![lambda_table("lambda", &h.lambda), balls], assertions: a })
    }
}

pub struct NullRecurrence;

impl Named for NullRecurrence {
    fn name(&self) -> &'static str {
        "null-recurrence"
    }
}

impl Experiment for NullRecurrence {
    fn about(&self) -> &'static str {
        "running ball frequencies along every volume up to N for one boundary condition"
    }

    fn keys(&self) -> &'static [Key] {
        const K: &[Key] = &[
            Key::new("alpha", Kind::Real, Fill::Real(0.75)),
            Key::new("beta", Kind::Real, Fill::Real(2.0)),
            Key::new("N", Kind::Int, Fill::Int(1 << 13)),
            Key::new("Y", Kind::Int, Fill::Optional),
            Key::new("tau", Kind::Real, Fill::Real(0.2)),
        ];
        K
    }

    fn thresholds(&self) -> &'static [(&'static str, f64)] {
        &[("mixed_max", 0.15), ("pure_min", 0.4), ("pure_max", 0.6)]
    }

    fn finish(&self, p: &mut Params) -> Result<(), RunError> {
        let n = p.size("N")?;
        if n == 0 || n > metastate::NULL_RECURRENCE_MAX_N {
            return bad(format!("key 'N' must lie in 1..={}", metastate::NULL_RECURRENCE_MAX_N));
        }
        truncation_factor(p, n)?;
        Ok(())
    }

    fn run(&self, p: &Params) -> Result<Outcome, RunError> {
        let alpha = p.real("alpha")?;
        let r = metastate::null_recurrence_profile(
            alpha,
            p.real("beta")?,
            p.size("N")?,
            p.real("tau")?,
            p.seed()?,
            p.size("Y")?,
        )?;
        let mut t = Table::new("null_recurrence", &["N", "W", "lambda", "freq_plus", "freq_minus", "freq_mixed"]);
        for x in &r.rows {
            t.push(row![x.n, x.w, x.lambda, x.freq_plus, x.freq_minus, x.freq_mixed]);
        }
        let last = r.last();
        let mut a = Vec::new();
        if alpha > 0.5 {
            let (lo, hi) = (p.threshold("pure_min")?, p.threshold("pure_max")?);
            a.push(Assertion::at_most("mixed-ball frequency at N", last.freq_mixed, p.threshold("mixed_max")?));
            a.push(Assertion::within("plus-ball frequency at N", last.freq_plus, lo, hi));
            a.push(Assertion::within("minus-ball frequency at N", last.freq_minus, lo, hi));
        }
        Ok(Outcome { tables: vec![t], assertions: a })
    }
}

pub struct Dichotomy;

impl Named for Dichotomy {
    fn name(&self) -> &'static str {
        "dichotomy"
    }
}

impl Experiment for Dichotomy {
    fn about(&self) -> &'static str {
        "one-row-per-alpha summary of the toy metastate"
    }

    fn keys(&self) -> &'static [Key] {
        const K: &[Key] = &[
            Key::new("alpha", Kind::Reals, Fill::Required),
            Key::new("beta", Kind::Real, Fill::Real(1.0)),
            Key::new("N", Kind::Int, Fill::Int(1 << 12)),
            Key::new("N_grid", Kind::Ints, Fill::Ints(&[1 << 10, 1 << 11, 1 << 12, 1 << 13])),
            Key::new("samples", Kind::Int, Fill::Int(10_000)),
            Key::new("Y", Kind::Int, Fill::Optional),
            Key::new("sampler", Kind::Text, Fill::Text("hybrid")),
        ];
        K
    }

    fn thresholds(&self) -> &'static [(&'static str, f64)] {
        &[("lambda_sigma", 3.0), ("var_exponent_tolerance", 0.05)]
    }

    fn finish(&self, p: &mut Params) -> Result<(), RunError> {
        let (lo, hi) = THRESHOLD_EXCLUSION;
        if let Some(a) = p.reals("alpha")?.into_iter().find(|a| (lo..=hi).contains(a)) {
            return bad(format!(
                "alpha = {a} lies in the threshold exclusion [{lo}, {hi}]; the case alpha = 1/2 is not covered"
            ));
        }
        let grid = p.sizes("N_grid")?;
        if grid.len() < 2 {
            return bad("key 'N_grid' needs at least two volumes");
        }
        let max = grid.iter().copied().chain([p.size("N")?]).max().unwrap_or(0);
        truncation_factor(p, max)?;
        toy::sampler_registry().must_get(&p.text("sampler")?).map_err(RunError::Config)?;
        Ok(())
    }

    fn run(&self, p: &Params) -> Result<Outcome, RunError> {
        let grid = p.sizes("N_grid")?;
        let n = p.size("N")?;
        let max = grid.iter().copied().chain([n]).max().unwrap_or(1);
        let s = DichotomySettings {
            beta: p.real("beta")?,
            n,
            n_grid: grid,
            samples: p.size("samples")?,
            seed: p.seed()?,
            y_factor: p.size("Y")? / max,
            sampler: p.text("sampler")?,
        };
        let alphas = p.reals("alpha")?;
        let rows = metastate::dichotomy_report(&alphas, &s)?;
        let mut t = Table::new(
            "dichotomy",
            &["alpha", "pure_mass", "mixed_mass", "mean_lambda", "lambda_stderr", "var_exponent"],
        );
        let mut a = Vec::new();
        let sigma = p.threshold("lambda_sigma")?;
        let tol = p.threshold("var_exponent_tolerance")?;
        for r in &rows {
            t.push(row![r.alpha, r.pure_mass, r.mixed_mass, r.mean_lambda, r.lambda_stderr, r.var_exponent]);
            a.push(Assertion::within(
                format!("alpha={}: mean lambda within {sigma} stderr of 1/2", r.alpha),
                r.mean_lambda,
                0.5 - sigma * r.lambda_stderr,
                0.5 + sigma * r.lambda_stderr,
            ));
            if r.alpha > 0.5 {
                let target = 2.0 * r.alpha - 1.0;
                a.push(Assertion::within(
                    format!("alpha={}: Var(W) exponent", r.alpha),
                    r.var_exponent,
                    target - tol,
                    target + tol,
                ));
            }
        }
        Ok(Outcome { tables: vec![t], assertions: a })
    }
}
