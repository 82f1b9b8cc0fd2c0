//! Zero-temperature bulk with a finite-temperature boundary: the mixture
//! `w+ δ+ + w- δ-` driven by the boundary energy `W_N`.

use crate::error::{invalid, Error, Result};
use crate::lattice::{coefficient_profile, tail_variance_bound, ModelParams};
use crate::registry::{Named, Registry, RegistryBuilder};
use crate::rng;
use crate::stats;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Default `δ` with `cos u <= exp(-u^2/2)` on `|u| < δ`.
pub const DELTA_COS: f64 = 1.5;

const SATURATION: f64 = 700.0;

/// Weights of the two ground states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyWeights {
    pub w_plus: f64,
    pub w_minus: f64,
    pub w: f64,
    pub beta: f64,
}

/// `w+ = 1/(1+e^{-2βW})`, `w- = 1/(1+e^{2βW})`, saturating for `|2βW| > 700`.
pub fn toy_weights(w: f64, beta: f64) -> Result<ToyWeights> {
    if !(beta > 0.0) {
        return invalid(format!("beta must be positive, got {beta}"));
    }
    let x = 2.0 * beta * w;
    let (w_plus, w_minus) = if x > SATURATION {
        (1.0, 0.0)
    } else if x < -SATURATION {
        (0.0, 1.0)
    } else {
        (1.0 / (1.0 + (-x).exp()), 1.0 / (1.0 + x.exp()))
    };
    Ok(ToyWeights { w_plus, w_minus, w, beta })
}

/// `(||μ̄ - δ+||_X, ||μ̄ - δ-||_X) = (2 w-, 2 w+)`, the same for every window.
pub fn toy_distances(w: f64, beta: f64) -> Result<(f64, f64)> {
    let tw = toy_weights(w, beta)?;
    Ok((2.0 * tw.w_minus, 2.0 * tw.w_plus))
}

/// Radius `(1/2β) ln((2-τ)/τ)` of the event `min distance >= τ` in terms of `|W|`.
pub fn smallball_radius(tau: f64, beta: f64) -> f64 {
    ((2.0 - tau) / tau).ln() / (2.0 * beta)
}

/// Column sums `S_y(N)` on one side, `s[d-1] = S_{N+d}(N)` for `1 <= d <= Y-N`.
#[derive(Debug, Clone)]
pub struct ExteriorProfile {
    pub n: usize,
    pub y: usize,
    pub s: Vec<f64>,
    pub tail_variance: f64,
}

impl ExteriorProfile {
    pub fn new(p: &ModelParams) -> Result<Self> {
        let prof = coefficient_profile(p)?;
        Ok(ExteriorProfile { n: p.n, y: p.y, s: prof.s, tail_variance: tail_variance_bound(p) })
    }

    /// `Σ S_y^2` over both sides of `lo < |y| <= hi`.
    pub fn variance_between(&self, lo: usize, hi: usize) -> f64 {
        let a = lo.max(self.n) - self.n;
        let b = hi.min(self.y) - self.n;
        if b <= a {
            return 0.0;
        }
        2.0 * self.s[a..b].iter().map(|v| v * v).sum::<f64>()
    }

    pub fn variance(&self) -> f64 {
        self.variance_between(self.n, self.y)
    }

    /// Truncated product `Π_{N<|y|<=Y} cos(t S_y)`.
    pub fn psi(&self, t: f64) -> f64 {
        self.s.iter().map(|s| (t * s).cos().powi(2)).product()
    }
}

/// Truncated characteristic function and the Gaussian factor of the tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharValue {
    pub value: f64,
    pub tail_factor: f64,
}

/// `ψ_N(t) = E e^{-itW_N}` over the truncated exterior.
pub fn characteristic_function(t: f64, p: &ModelParams) -> Result<CharValue> {
    let prof = ExteriorProfile::new(p)?;
    Ok(CharValue { value: prof.psi(t), tail_factor: (-t * t * prof.tail_variance / 2.0).exp() })
}

/// Checks `cos u <= exp(-u^2/2)` on `points` equally spaced `u` in `(0, delta]`.
pub fn verify_delta_cos(delta: f64, points: usize) -> bool {
    (1..=points).all(|i| {
        let u = delta * i as f64 / points as f64;
        u.cos() <= (-u * u / 2.0).exp()
    })
}

/// Scales of the weak local limit theorem for one `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WlltSchedule {
    pub n: usize,
    pub alpha: f64,
    pub a_n: f64,
    pub a_n_with_tail: f64,
    pub a_n_bound: f64,
    pub delta_n: f64,
    pub tau_n: f64,
    pub delta_cos: f64,
}

impl WlltSchedule {
    pub fn bound_holds(&self) -> bool {
        self.a_n_with_tail < self.a_n_bound
    }

    /// `A_N / (δ_N^k τ_N^{k-1})`.
    pub fn speed_ratio(&self, k: f64) -> f64 {
        self.a_n / (self.delta_n.powf(k) * self.tau_n.powf(k - 1.0))
    }
}

/// Exponent `k = 1 + (α-1/2)/(1-α) + 1/2` used for the speed check.
pub fn speed_exponent(alpha: f64) -> f64 {
    1.0 + (alpha - 0.5) / (1.0 - alpha) + 0.5
}

pub fn wllt_schedule(p: &ModelParams) -> Result<WlltSchedule> {
    wllt_schedule_with(p, 1.0, DELTA_COS)
}

pub fn wllt_schedule_with(p: &ModelParams, delta_n: f64, delta_cos: f64) -> Result<WlltSchedule> {
    if !(p.alpha > 0.5) {
        return invalid(format!("the schedule needs alpha > 1/2, got {}", p.alpha));
    }
    let prof = ExteriorProfile::new(p)?;
    let far = prof.variance_between(2 * p.n, p.y);
    let a_n = far.sqrt();
    let a_n_with_tail = (far + prof.tail_variance).sqrt();
    let a_n_bound = (18.0 / (3.0 - 2.0 * p.alpha)).sqrt() * (p.n as f64).powf(p.alpha - 0.5);
    let tau_n = delta_cos * (1.0 - p.alpha) / (2.0 - p.alpha) * (p.n as f64).powf(1.0 - p.alpha);
    Ok(WlltSchedule { n: p.n, alpha: p.alpha, a_n, a_n_with_tail, a_n_bound, delta_n, tau_n, delta_cos })
}

/// `A_N ∫_{-τ_N}^{τ_N} |ψ_N(t)| dt` together with its Gaussian comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WlltIntegral {
    pub value: f64,
    pub gaussian: f64,
    pub schedule: WlltSchedule,
    pub error_estimate: f64,
}

pub fn wllt_integral_check(p: &ModelParams) -> Result<WlltIntegral> {
    let schedule = wllt_schedule(p)?;
    let prof = ExteriorProfile::new(p)?;
    let tol = 1e-10 / schedule.a_n;
    let (half, err, ok) = stats::adaptive_simpson(&|t: f64| prof.psi(t).abs(), 0.0, schedule.tau_n, tol, 40);
    if !ok {
        return Err(Error::Quadrature { achieved: err, requested: tol });
    }
    let x = schedule.a_n * schedule.tau_n;
    let gaussian = (2.0 * PI).sqrt() * statrs::function::erf::erf(x / 2f64.sqrt());
    Ok(WlltIntegral { value: 2.0 * schedule.a_n * half, gaussian, schedule, error_estimate: 2.0 * schedule.a_n * err })
}

/// Draws boundary energies `W_N^η` for sample `i` of a seed.
pub trait WSampler: Send + Sync {
    fn sample(&self, seed: u64, index: u64) -> f64;
}

/// A named way of building a [`WSampler`] from model parameters.
pub trait WSamplerKind: Named + Send + Sync {
    fn build(&self, p: &ModelParams) -> Result<Box<dyn WSampler>>;
}

const PAIR_VALUE: [f64; 4] = [-2.0, 0.0, 0.0, 2.0];

/// Exact signs on `N < |y| <= R`, read from the interleaved bit stream.
struct NearField {
    n: usize,
    radius: usize,
    s: Vec<f64>,
}

impl NearField {
    /// Returns the near-field sum and leaves `rng` positioned after its words.
    fn sum(&self, rng: &mut impl RngCore) -> f64 {
        let words = rng::words_for_radius(self.radius);
        let first = 2 * self.n;
        let last = 2 * self.radius;
        let mut w = 0.0;
        for wi in 0..words {
            let word = rng.next_u64();
            let base = wi * 64;
            if base + 64 <= first || base >= last {
                continue;
            }
            for j in 0..32 {
                let k = base + 2 * j;
                if k < first || k >= last {
                    continue;
                }
                let d = k / 2 + 1 - self.n;
                w += self.s[d - 1] * PAIR_VALUE[((word >> (2 * j)) & 3) as usize];
            }
        }
        w
    }
}

/// Exact sampler over the whole truncated exterior.
pub struct ExactW {
    near: NearField,
}

impl WSampler for ExactW {
    fn sample(&self, seed: u64, index: u64) -> f64 {
        self.near.sum(&mut rng::substream(seed, index))
    }
}

/// Exact signs for `N < |y| <= 3N`, Gaussian for `3N < |y| <= Y` with the
/// exact variance of that shell.
pub struct HybridW {
    near: NearField,
    far_sd: f64,
}

impl WSampler for HybridW {
    fn sample(&self, seed: u64, index: u64) -> f64 {
        let mut g = rng::substream(seed, index);
        let near = self.near.sum(&mut g);
        if self.far_sd == 0.0 {
            return near;
        }
        let z: f64 = StandardNormal.sample(&mut g);
        near + self.far_sd * z
    }
}

pub struct ExactKind;
pub struct HybridKind;

/// Exterior size up to which the hybrid sampler stays exact.
pub const HYBRID_EXACT_SITES: usize = 4096;

impl Named for ExactKind {
    fn name(&self) -> &'static str {
        "exact"
    }
}

impl WSamplerKind for ExactKind {
    fn build(&self, p: &ModelParams) -> Result<Box<dyn WSampler>> {
        let prof = ExteriorProfile::new(p)?;
        Ok(Box::new(ExactW { near: NearField { n: p.n, radius: p.y, s: prof.s } }))
    }
}

impl Named for HybridKind {
    fn name(&self) -> &'static str {
        "hybrid"
    }
}

impl WSamplerKind for HybridKind {
    fn build(&self, p: &ModelParams) -> Result<Box<dyn WSampler>> {
        let prof = ExteriorProfile::new(p)?;
        let radius = if 2 * (p.y - p.n) <= HYBRID_EXACT_SITES { p.y } else { (3 * p.n).min(p.y) };
        let far_sd = prof.variance_between(radius, p.y).sqrt();
        Ok(Box::new(HybridW { near: NearField { n: p.n, radius, s: prof.s }, far_sd }))
    }
}

/// Registry of the available `W` samplers.
pub fn sampler_registry() -> Registry<dyn WSamplerKind> {
    RegistryBuilder::<dyn WSamplerKind>::new()
        .register(Box::new(ExactKind))
        .register(Box::new(HybridKind))
        .build()
        .expect("sampler names are distinct")
}

/// Draws `samples` values of `W_N` (sample `i` from substream `i`).
pub fn sample_w(p: &ModelParams, sampler: &str, samples: usize, seed: u64) -> Result<Vec<f64>> {
    let reg = sampler_registry();
    let kind = reg.must_get(sampler).map_err(Error::InvalidParameter)?;
    let s = kind.build(p)?;
    Ok((0..samples as u64).into_par_iter().map(|i| s.sample(seed, i)).collect())
}

/// Percentile grid used for quantile reports.
pub fn percentile_grid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

/// One volume of a small-ball scan.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallBallRow {
    pub n: usize,
    pub p: f64,
    pub stderr: f64,
    pub scaled: f64,
    pub var: f64,
    pub var_stderr: f64,
    pub quantiles: Vec<f64>,
}

/// Result of [`smallball_scaling_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct SmallBallTable {
    pub alpha: f64,
    pub k: f64,
    pub rows: Vec<SmallBallRow>,
    /// Least-squares slope of `log p_N` against `log N`.
    pub slope: f64,
    /// Least-squares slope of `log Var(W_N)` against `log N`.
    pub var_slope: f64,
    /// Largest percentile shift between consecutive volumes.
    pub quantile_drift: Vec<f64>,
    /// Paired-bootstrap stderr of each consecutive variance difference.
    pub var_differences: Vec<(f64, f64)>,
}

impl SmallBallTable {
    pub fn row(&self, n: usize) -> Option<&SmallBallRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Number of bootstrap resamples for variance errors.
pub const BOOTSTRAP_REPS: usize = 200;

/// Estimates `P(|W_N| <= K)` and `Var(W_N)` for each `N`, using the same
/// boundary conditions (substream `i` for sample `i`) at every volume.
///
/// `Y` is `y_factor * N` for each volume.
pub fn smallball_scaling_experiment(
    alpha: f64,
    k: f64,
    n_grid: &[usize],
    samples: usize,
    seed: u64,
    y_factor: usize,
    sampler: &str,
) -> Result<SmallBallTable> {
    if samples < 2 || n_grid.len() < 2 {
        return invalid("need at least two volumes and two samples");
    }
    let mut rows = Vec::new();
    let mut draws: Vec<Vec<f64>> = Vec::new();
    for (g, &n) in n_grid.iter().enumerate() {
        let p = ModelParams::new(alpha, 1.0, 1.0, n, y_factor * n)?;
        let w = sample_w(&p, sampler, samples, seed)?;
        let hits = w.iter().filter(|v| v.abs() <= k).count() as f64;
        let m = samples as f64;
        let prob = hits / m;
        let stderr = (prob * (1.0 - prob) / m).sqrt();
        let var = stats::variance(&w);
        let var_stderr = stats::bootstrap_stderr(&w, BOOTSTRAP_REPS, seed ^ (0xb007 + g as u64), stats::variance);
        let mut sorted = w.clone();
        sorted.sort_by(f64::total_cmp);
        let quantiles = percentile_grid().iter().map(|&q| stats::quantile_sorted(&sorted, q)).collect();
        rows.push(SmallBallRow {
            n,
            p: prob,
            stderr,
            scaled: (n as f64).powf(alpha - 0.5) * prob,
            var,
            var_stderr,
            quantiles,
        });
        draws.push(w);
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ps: Vec<f64> = rows.iter().map(|r| r.p).collect();
    let vs: Vec<f64> = rows.iter().map(|r| r.var).collect();
    let quantile_drift = rows
        .windows(2)
        .map(|w| w[0].quantiles.iter().zip(&w[1].quantiles).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    let var_differences = (1..draws.len())
        .map(|i| {
            let diff = rows[i].var - rows[i - 1].var;
            (diff, paired_variance_difference_stderr(&draws[i - 1], &draws[i], seed ^ (0xd1ff + i as u64)))
        })
        .collect();
    Ok(SmallBallTable {
        alpha,
        k,
        slope: if ps.iter().all(|&p| p > 0.0) { stats::loglog_slope(&ns, &ps) } else { f64::NAN },
        var_slope: stats::loglog_slope(&ns, &vs),
        rows,
        quantile_drift,
        var_differences,
    })
}

/// Bootstrap stderr of `Var(b) - Var(a)` resampling the shared index.
pub fn paired_variance_difference_stderr(a: &[f64], b: &[f64], seed: u64) -> f64 {
    use rand::Rng;
    let m = a.len();
    let mut ra = vec![0.0; m];
    let mut rb = vec![0.0; m];
    let vals: Vec<f64> = (0..BOOTSTRAP_REPS)
        .map(|r| {
            let mut g = rng::substream(seed, r as u64);
            for i in 0..m {
                let j = g.random_range(0..m);
                ra[i] = a[j];
                rb[i] = b[j];
            }
            stats::variance(&rb) - stats::variance(&ra)
        })
        .collect();
    stats::variance(&vals).sqrt()
}

/// Histogram of the minus weight `λ = w-` over boundary conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaHistogram {
    pub bins: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    /// Mass of `λ < 0.01` or `λ > 0.99`.
    pub pure_mass: f64,
    pub samples: usize,
}

impl LambdaHistogram {
    pub fn from_lambdas(lambdas: &[f64], bins: usize) -> Self {
        let mut counts = vec![0usize; bins];
        for &l in lambdas {
            let b = ((l * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let m = lambdas.len() as f64;
        let (mean, stderr) = stats::mean_stderr(lambdas);
        let pure = lambdas.iter().filter(|&&l| !(0.01..=0.99).contains(&l)).count() as f64;
        LambdaHistogram {
            bins: counts.iter().map(|&c| c as f64 / m).collect(),
            mean,
            stderr,
            pure_mass: pure / m,
            samples: lambdas.len(),
        }
    }

    /// Mass of `[lo, hi)` summed over whole bins.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let k = self.bins.len() as f64;
        let a = (lo * k).round() as usize;
        let b = (hi * k).round() as usize;
        self.bins[a..b].iter().sum()
    }
}

pub const HISTOGRAM_BINS: usize = 100;

/// Empirical toy metastate: `λ = 1/(1+e^{2βW_N})` over sampled `η`.
pub fn toy_metastate_histogram(
    alpha: f64,
    beta: f64,
    n: usize,
    samples: usize,
    seed: u64,
    y_factor: usize,
    sampler: &str,
) -> Result<LambdaHistogram> {
    let p = ModelParams::new(alpha, beta, 1.0, n, y_factor * n)?;
    let w = sample_w(&p, sampler, samples, seed)?;
    let lambdas = w.iter().map(|&v| toy_weights(v, beta).map(|t| t.w_minus)).collect::<Result<Vec<_>>>()?;
    Ok(LambdaHistogram::from_lambdas(&lambdas, HISTOGRAM_BINS))
}
