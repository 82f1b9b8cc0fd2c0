//! Sparse volume sequences, good boundary conditions, decoupled measures and
//! empirical metastates.

use crate::error::{invalid, Error, Result};
use crate::gibbs::{ExactEnsemble, EXACT_MAX_N};
use crate::lattice::{
    annulus_fields, boundary_field, window_distance, BoundaryCondition, CouplingTable, MeasureMarginal, ModelParams,
};
use crate::rng;
use crate::stats;
use crate::toy::{sample_w, toy_weights, LambdaHistogram, HISTOGRAM_BINS};
use rayon::prelude::*;
use statrs::function::gamma::{gamma, gamma_ur};

/// Largest volume a schedule may contain.
pub const SCHEDULE_LIMIT: u64 = 1 << 31;

const TAIL_BLOCK: usize = 1000;

/// Upper bound on `Σ_{ℓ>=m} e^{-ℓ^ε}`: an explicit block of terms plus the
/// integral bound `(1/ε) Γ(1/ε, L^ε)` for the rest.
pub fn tail_sum(m: usize, eps: f64) -> f64 {
    let m = m.max(1);
    let last = m + TAIL_BLOCK - 1;
    let head: f64 = (m..=last).map(|l| (-(l as f64).powf(eps)).exp()).sum();
    let s = 1.0 / eps;
    let x = (last as f64).powf(eps);
    head + s * gamma_ur(s, x) * gamma(s)
}

/// Smallest `m` with `tail_sum(m, ε) < 1/k^2`.
pub fn min_m(k: usize, eps: f64) -> usize {
    let target = 1.0 / (k * k) as f64;
    if tail_sum(1, eps) < target {
        return 1;
    }
    let mut hi = 2usize;
    while tail_sum(hi, eps) >= target {
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if tail_sum(mid, eps) < target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Volumes `N_k`, cut widths `n_k` and tail indices `m_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSchedule {
    pub alpha: f64,
    pub epsilon: f64,
    pub a: f64,
    pub m: Vec<usize>,
    pub volumes: Vec<usize>,
    pub cuts: Vec<usize>,
}

impl SparseSchedule {
    /// A schedule with given volumes; `m_k` and `n_k` follow the usual rules
    /// but the growth conditions are not enforced.
    pub fn explicit(alpha: f64, epsilon: f64, volumes: Vec<usize>) -> Result<Self> {
        if volumes.is_empty() || volumes.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("volumes must be non-empty and strictly increasing");
        }
        let m: Vec<usize> = (1..=volumes.len()).map(|k| min_m(k, epsilon)).collect();
        Ok(SparseSchedule { alpha, epsilon, a: 0.0, cuts: m.clone(), m, volumes })
    }

    /// `N_k = start * ratio^(k-1)`.
    pub fn geometric(alpha: f64, epsilon: f64, start: usize, ratio: usize, count: usize) -> Result<Self> {
        if start < 1 || ratio < 2 {
            return invalid("geometric schedule needs start >= 1 and ratio >= 2");
        }
        let volumes = (0..count as u32).map(|k| start * ratio.pow(k)).collect();
        Self::explicit(alpha, epsilon, volumes)
    }

    /// Conditions of the sparse construction that fail, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let d = self.alpha - 0.5;
        for k in 1..=self.volumes.len() {
            let (m, n, cut) = (self.m[k - 1], self.volumes[k - 1] as f64, self.cuts[k - 1]);
            if tail_sum(m, self.epsilon) >= 1.0 / (k * k) as f64 {
                out.push(format!("k={k}: tail at m={m} is not below 1/k^2"));
            }
            if d > 0.0 {
                let need = (k as f64).powf(1.0 / d + self.a).max((m as f64).powf(2.0 / d));
                if n <= need {
                    out.push(format!("k={k}: N={n} does not exceed {need}"));
                }
                if cut as f64 >= n.powf(d / 2.0) {
                    out.push(format!("k={k}: n={cut} is not below N^((α-1/2)/2)"));
                }
            }
        }
        out
    }
}

/// Builds `m_k`, `N_k`, `n_k` for `k = 1..=k_max`.
///
/// For `α > 1/2`, `N_k` is the least integer above
/// `max(k^{1/(α-1/2)+a}, m_k^{2/(α-1/2)})` (and above `N_{k-1}`) and
/// `n_k = m_k`. For `α < 1/2`, `N_k = 2^k`.
pub fn sparse_schedule(alpha: f64, epsilon: f64, a: f64, k_max: usize) -> Result<SparseSchedule> {
    if !(0.0..1.0).contains(&alpha) {
        return invalid(format!("alpha must lie in [0, 1), got {alpha}"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0 - alpha) {
        return invalid(format!("epsilon must lie in (0, 1 - alpha), got {epsilon}"));
    }
    if !(a > 0.0) {
        return invalid("a must be positive");
    }
    if k_max == 0 {
        return invalid("k_max must be positive");
    }
    let d = alpha - 0.5;
    let mut m = Vec::new();
    let mut volumes: Vec<usize> = Vec::new();
    for k in 1..=k_max {
        let mk = min_m(k, epsilon);
        let nk = if d > 0.0 {
            let need = (k as f64).powf(1.0 / d + a).max((mk as f64).powf(2.0 / d));
            let next = need.floor() + 1.0;
            let prev = volumes.last().map_or(0.0, |&v| v as f64 + 1.0);
            next.max(prev)
        } else {
            2f64.powi(k as i32)
        };
        if nk > SCHEDULE_LIMIT as f64 {
            return Err(Error::ScheduleOverflow { k, largest_feasible: k - 1 });
        }
        m.push(mk);
        volumes.push(nk as usize);
    }
    let s = SparseSchedule { alpha, epsilon, a, cuts: m.clone(), m, volumes };
    let v = s.violations();
    if !v.is_empty() {
        return Err(Error::Internal(v.join("; ")));
    }
    Ok(s)
}

/// `(N+x)^(α-3/2+ε) + (N-x)^(α-3/2+ε)`.
pub fn field_cap(n: usize, x: i64, alpha: f64, eps: f64) -> f64 {
    let e = alpha - 1.5 + eps;
    let n = n as f64;
    (n + x as f64).powf(e) + (n - x as f64).powf(e)
}

/// Result of [`good_eta_classifier`].
#[derive(Debug, Clone, PartialEq)]
pub struct GoodEtaReport {
    pub good: bool,
    /// `(x, h(x), cap(x))` for every site exceeding the cap.
    pub violations: Vec<(i64, f64, f64)>,
    pub checked: usize,
    /// `C = exp(1/(3-2α))` from the Borel-Cantelli estimate.
    pub c_const: f64,
}

/// Checks `|h(x)| <= (N+x)^(α-3/2+ε) + (N-x)^(α-3/2+ε)` on `[-N+n, N-n]`.
pub fn good_eta_classifier(eta: &BoundaryCondition, p: &ModelParams, n: usize, eps: f64) -> Result<GoodEtaReport> {
    if !(eps > 0.0 && eps < 1.0 - p.alpha) {
        return invalid(format!("epsilon must lie in (0, 1 - alpha), got {eps}"));
    }
    if n >= p.n {
        return invalid(format!("cut n = {n} must be below N = {}", p.n));
    }
    let inner = (p.n - n) as i64;
    let mut violations = Vec::new();
    for x in -inner..=inner {
        let h = boundary_field(x, eta, p)?;
        let cap = field_cap(p.n, x, p.alpha, eps);
        if h.abs() > cap {
            violations.push((x, h, cap));
        }
    }
    Ok(GoodEtaReport {
        good: violations.is_empty(),
        violations,
        checked: (2 * inner + 1) as usize,
        c_const: (1.0 / (3.0 - 2.0 * p.alpha)).exp(),
    })
}

/// Fraction of good boundary conditions over `samples` draws, with stderr.
pub fn good_fraction(p: &ModelParams, n: usize, eps: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let flags = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let eta = BoundaryCondition::random_stream(p.n, p.y, seed, i);
            good_eta_classifier(&eta, p, n, eps).map(|r| if r.good { 1.0 } else { 0.0 })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(stats::mean_stderr(&flags))
}

/// `exp(12β/(1-α) N/(N'-N)^(1-α)) - 1`.
pub fn decoupled_bound(alpha: f64, beta: f64, n: usize, n_next: usize) -> f64 {
    let gap = (n_next - n) as f64;
    (12.0 * beta / (1.0 - alpha) * n as f64 / gap.powf(1.0 - alpha)).exp() - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoupledGap {
    pub n: usize,
    pub n_next: usize,
    pub gap: f64,
    pub bound: f64,
}

impl DecoupledGap {
    pub fn holds(&self) -> bool {
        self.gap <= self.bound
    }
}

/// Distance on `window` between `μ^η_{Λ_N}` and the measure that only sees
/// the exterior annulus `N < |y| <= N'`.
pub fn decoupled_measure_gap(
    p: &ModelParams,
    eta: &BoundaryCondition,
    n_next: usize,
    window: &[i64],
) -> Result<DecoupledGap> {
    if n_next <= p.n {
        return invalid(format!("N' = {n_next} must exceed N = {}", p.n));
    }
    let full = ExactEnsemble::new(p, eta)?.marginal(window)?;
    let cut = ExactEnsemble::with_fields(p, annulus_fields(eta, p, n_next)?)?.marginal(window)?;
    Ok(DecoupledGap {
        n: p.n,
        n_next,
        gap: window_distance(&full, &cut)?,
        bound: decoupled_bound(p.alpha, p.beta, p.n, n_next),
    })
}

/// Frequencies of the balls of radius `τ` around `μ⁺`, `μ⁻` and of neither.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallFrequencies {
    pub plus: f64,
    pub minus: f64,
    pub neither: f64,
    pub plus_stderr: f64,
    pub minus_stderr: f64,
    pub neither_stderr: f64,
    pub observations: usize,
}

/// Classification of one measure: 0 for the `μ⁺` ball, 1 for `μ⁻`, 2 for neither.
fn ball_of(d_plus: f64, d_minus: f64, tau: f64) -> usize {
    if d_plus < tau {
        0
    } else if d_minus < tau {
        1
    } else {
        2
    }
}

/// Per-η membership vectors (one entry per volume) reduced to frequencies.
fn ball_frequencies(per_eta: &[Vec<usize>]) -> BallFrequencies {
    let share = |b: usize| -> Vec<f64> {
        per_eta.iter().map(|v| v.iter().filter(|&&x| x == b).count() as f64 / v.len() as f64).collect()
    };
    let (plus, plus_stderr) = stats::mean_stderr(&share(0));
    let (minus, minus_stderr) = stats::mean_stderr(&share(1));
    let (neither, neither_stderr) = stats::mean_stderr(&share(2));
    BallFrequencies {
        plus,
        minus,
        neither,
        plus_stderr,
        minus_stderr,
        neither_stderr,
        observations: per_eta.iter().map(|v| v.len()).sum(),
    }
}

/// Empirical metastate over sampled boundary conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct MetastateHistogram {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub window: Vec<i64>,
    pub volumes: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    /// `λ` histogram at the largest volume.
    pub lambda: LambdaHistogram,
    pub balls: BallFrequencies,
}

/// Empirical metastate of the full model by exact enumeration at every volume.
///
/// Boundary condition `i` is substream `i` of `seed`, truncated at `y`; the
/// `μ±` proxies are the all-plus and all-minus measures at the same volume.
#[allow(clippy::too_many_arguments)]
pub fn empirical_metastate_exact(
    alpha: f64,
    beta: f64,
    volumes: &[usize],
    y: usize,
    tau: f64,
    window: &[i64],
    samples: usize,
    seed: u64,
) -> Result<MetastateHistogram> {
    if volumes.is_empty() || volumes.iter().any(|&n| n > EXACT_MAX_N) {
        return invalid(format!("exact metastate needs volumes in 1..={EXACT_MAX_N}"));
    }
    let mut proxies = Vec::new();
    for &n in volumes {
        let p = ModelParams::new(alpha, beta, 1.0, n, y)?;
        let plus = ExactEnsemble::new(&p, &BoundaryCondition::all_plus(n, y))?.marginal(window)?;
        let minus = plus.flipped();
        proxies.push((p, plus, minus));
    }
    let per_eta = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut balls = Vec::with_capacity(volumes.len());
            let mut lambda = 0.0;
            for (p, plus, minus) in &proxies {
                let eta = BoundaryCondition::random_stream(p.n, p.y, seed, i);
                let ens = ExactEnsemble::new(p, &eta)?;
                let mu = ens.marginal(window)?;
                balls.push(ball_of(window_distance(&mu, plus)?, window_distance(&mu, minus)?, tau));
                lambda = ens.mixture_weight();
            }
            Ok((balls, lambda))
        })
        .collect::<Result<Vec<_>>>()?;
    let lambdas: Vec<f64> = per_eta.iter().map(|(_, l)| *l).collect();
    let memberships: Vec<Vec<usize>> = per_eta.into_iter().map(|(b, _)| b).collect();
    Ok(MetastateHistogram {
        alpha,
        beta,
        tau,
        window: window.to_vec(),
        volumes: volumes.to_vec(),
        samples,
        seed,
        lambda: LambdaHistogram::from_lambdas(&lambdas, HISTOGRAM_BINS),
        balls: ball_frequencies(&memberships),
    })
}

/// `W_N = Σ_{N<|y|<=Y} S_y(N) η_y` for one boundary condition given as a
/// sign lookup, evaluated at each `N` in `volumes` with a common `Y`.
pub fn boundary_energies_along(
    eta: impl Fn(i64) -> i8,
    table: &CouplingTable,
    volumes: &[usize],
    y: usize,
) -> Vec<f64> {
    let pairs: Vec<f64> = (1..=y as i64).map(|s| f64::from(eta(s) + eta(-s))).collect();
    volumes.iter().map(|&n| (n + 1..=y).map(|s| table.column_sum(n, s) * pairs[s - 1]).sum()).collect()
}

/// Toy-model metastate: the measure at volume `N` is `w+ δ+ + w- δ-`.
///
/// Every volume uses the same boundary condition truncated at
/// `y_factor * max N`.
pub fn empirical_metastate_toy(
    alpha: f64,
    beta: f64,
    volumes: &[usize],
    y_factor: usize,
    tau: f64,
    samples: usize,
    seed: u64,
) -> Result<MetastateHistogram> {
    let n_max = *volumes.iter().max().ok_or_else(|| Error::InvalidParameter("no volumes".into()))?;
    let y = y_factor * n_max;
    let p = ModelParams::new(alpha, beta, 1.0, n_max, y)?;
    toy_weights(0.0, beta)?;
    let table = CouplingTable::new(&p, 2 * y + 1);
    let words = rng::words_for_radius(y);
    let per_eta = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut buf = vec![0u64; words];
            rng::fill_words(&mut rng::substream(seed, i), &mut buf);
            let ws = boundary_energies_along(|s| rng::sign_at(&buf, s), &table, volumes, y);
            let mut balls = Vec::with_capacity(ws.len());
            let mut lambda = 0.0;
            for &w in &ws {
                let t = toy_weights(w, beta)?;
                balls.push(ball_of(2.0 * t.w_minus, 2.0 * t.w_plus, tau));
                lambda = t.w_minus;
            }
            Ok((balls, lambda))
        })
        .collect::<Result<Vec<_>>>()?;
    let lambdas: Vec<f64> = per_eta.iter().map(|(_, l)| *l).collect();
    let memberships: Vec<Vec<usize>> = per_eta.into_iter().map(|(b, _)| b).collect();
    let mut sorted = volumes.to_vec();
    sorted.sort_unstable();
    Ok(MetastateHistogram {
        alpha,
        beta,
        tau,
        window: Vec::new(),
        volumes: sorted,
        samples,
        seed,
        lambda: LambdaHistogram::from_lambdas(&lambdas, HISTOGRAM_BINS),
        balls: ball_frequencies(&memberships),
    })
}

/// One volume of a null-recurrence profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullRecurrenceRow {
    pub n: usize,
    pub w: f64,
    pub lambda: f64,
    pub freq_plus: f64,
    pub freq_minus: f64,
    pub freq_mixed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullRecurrence {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub seed: u64,
    pub y: usize,
    pub rows: Vec<NullRecurrenceRow>,
}

impl NullRecurrence {
    pub fn last(&self) -> &NullRecurrenceRow {
        self.rows.last().expect("profile has rows")
    }
}

/// Largest volume accepted by [`null_recurrence_profile`].
pub const NULL_RECURRENCE_MAX_N: usize = 1 << 14;

/// Running frequencies along `n = 1..=N_max` of the toy measures in the
/// balls of radius `τ` around `δ+`, `δ-` and the symmetric mixture.
///
/// Distances do not depend on the window: `||μ_n - δ±|| = 2 w∓` and
/// `||μ_n - (δ+ + δ-)/2|| = 2|w+ - 1/2|`. The boundary condition is
/// substream 0 of `seed`, truncated at `y`.
pub fn null_recurrence_profile(
    alpha: f64,
    beta: f64,
    n_max: usize,
    tau: f64,
    seed: u64,
    y: usize,
) -> Result<NullRecurrence> {
    if n_max == 0 || n_max > NULL_RECURRENCE_MAX_N {
        return invalid(format!("N_max must lie in 1..={NULL_RECURRENCE_MAX_N}"));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return invalid(format!("tau must lie in (0, 1], got {tau}"));
    }
    let p = ModelParams::new(alpha, beta, 1.0, n_max, y)?;
    toy_weights(0.0, beta)?;
    let table = CouplingTable::new(&p, 2 * y + 1);
    let mut buf = vec![0u64; rng::words_for_radius(y)];
    rng::fill_words(&mut rng::substream(seed, 0), &mut buf);
    let ns: Vec<usize> = (1..=n_max).collect();
    let ws: Vec<f64> = ns
        .par_chunks(64)
        .flat_map_iter(|chunk| boundary_energies_along(|s| rng::sign_at(&buf, s), &table, chunk, y))
        .collect();
    let mut counts = [0usize; 3];
    let mut rows = Vec::with_capacity(n_max);
    for (k, (&n, &w)) in ns.iter().zip(&ws).enumerate() {
        let t = toy_weights(w, beta)?;
        if 2.0 * t.w_minus < tau {
            counts[0] += 1;
        }
        if 2.0 * t.w_plus < tau {
            counts[1] += 1;
        }
        if 2.0 * (t.w_plus - 0.5).abs() < tau {
            counts[2] += 1;
        }
        let m = (k + 1) as f64;
        rows.push(NullRecurrenceRow {
            n,
            w,
            lambda: t.w_minus,
            freq_plus: counts[0] as f64 / m,
            freq_minus: counts[1] as f64 / m,
            freq_mixed: counts[2] as f64 / m,
        });
    }
    Ok(NullRecurrence { alpha, beta, tau, seed, y, rows })
}

/// One α of the dichotomy summary.
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomyRow {
    pub alpha: f64,
    pub pure_mass: f64,
    pub mixed_mass: f64,
    pub mean_lambda: f64,
    pub lambda_stderr: f64,
    pub var_exponent: f64,
}

/// Inputs of [`dichotomy_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomySettings {
    pub beta: f64,
    /// Volume of the `λ` histogram.
    pub n: usize,
    /// Volumes of the `Var(W_N)` regression.
    pub n_grid: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub y_factor: usize,
    pub sampler: String,
}

/// Interval of `α` excluded from dichotomy runs.
pub const THRESHOLD_EXCLUSION: (f64, f64) = (0.45, 0.55);

/// Toy-mode metastate summary, one row per `α`.
pub fn dichotomy_report(alphas: &[f64], s: &DichotomySettings) -> Result<Vec<DichotomyRow>> {
    if let Some(a) = alphas.iter().find(|a| (THRESHOLD_EXCLUSION.0..=THRESHOLD_EXCLUSION.1).contains(*a)) {
        return invalid(format!(
            "alpha = {a} lies in [{}, {}], too close to the threshold 1/2",
            THRESHOLD_EXCLUSION.0, THRESHOLD_EXCLUSION.1
        ));
    }
    if s.n_grid.len() < 2 {
        return invalid("n_grid needs at least two volumes");
    }
    let mut rows = Vec::new();
    for &alpha in alphas {
        let p = ModelParams::new(alpha, s.beta, 1.0, s.n, s.y_factor * s.n)?;
        let w = sample_w(&p, &s.sampler, s.samples, s.seed)?;
        let lambdas = w.iter().map(|&v| toy_weights(v, s.beta).map(|t| t.w_minus)).collect::<Result<Vec<_>>>()?;
        let hist = LambdaHistogram::from_lambdas(&lambdas, HISTOGRAM_BINS);
        let mut vars = Vec::new();
        for &n in &s.n_grid {
            let q = ModelParams::new(alpha, s.beta, 1.0, n, s.y_factor * n)?;
            vars.push(stats::variance(&sample_w(&q, &s.sampler, s.samples, s.seed)?));
        }
        let ns: Vec<f64> = s.n_grid.iter().map(|&n| n as f64).collect();
        rows.push(DichotomyRow {
            alpha,
            pure_mass: hist.pure_mass,
            mixed_mass: 1.0 - hist.pure_mass,
            mean_lambda: hist.mean,
            lambda_stderr: hist.stderr,
            var_exponent: stats::loglog_slope(&ns, &vars),
        });
    }
    Ok(rows)
}

/// Marginal of the toy measure `w+ δ+ + w- δ-` on `window`.
pub fn toy_marginal(w: f64, beta: f64, window: &[i64]) -> Result<MeasureMarginal> {
    let t = toy_weights(w, beta)?;
    let k = window.len();
    let plus = MeasureMarginal::point_mass(window.to_vec(), &vec![1; k])?;
    let minus = MeasureMarginal::point_mass(window.to_vec(), &vec![-1; k])?;
    MeasureMarginal::mixture(&[(t.w_plus, &plus), (t.w_minus, &minus)])
}
