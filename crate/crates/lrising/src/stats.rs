//! Small numerical helpers shared by the samplers and reports.

use crate::rng;
use rand::Rng;
use statrs::statistics::Statistics;

/// Stable `log Σ exp(v_i)`. Returns `-inf` for an empty or all `-inf` input.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `log(e^a + e^b)`.
pub fn logaddexp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    (xs.mean(), (xs.variance() / xs.len() as f64).sqrt())
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    xs.variance()
}

/// Least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    x.covariance(y) / x.variance()
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ls_slope(&lx, &ly)
}

/// Mean with batch-means standard error over `batches` equal batches.
pub fn batch_means(xs: &[f64], batches: usize) -> (f64, f64) {
    let size = xs.len() / batches.max(1);
    if size == 0 {
        return mean_stderr(xs);
    }
    let means: Vec<f64> = xs[..size * batches].chunks(size).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (mean, mean_stderr(&means).1)
}

/// Type-7 quantile of an ascending-sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bootstrap standard error of `stat` using `reps` resamples drawn from
/// substreams of `seed`.
pub fn bootstrap_stderr(xs: &[f64], reps: usize, seed: u64, stat: impl Fn(&[f64]) -> f64) -> f64 {
    let mut buf = vec![0.0; xs.len()];
    let vals: Vec<f64> = (0..reps)
        .map(|r| {
            let mut g = rng::substream(seed, r as u64);
            for b in buf.iter_mut() {
                *b = xs[g.random_range(0..xs.len())];
            }
            stat(&buf)
        })
        .collect();
    variance(&vals).sqrt()
}

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Returns the estimate, the accumulated error estimate and whether every
/// subinterval met its tolerance before the depth limit.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: u32) -> (f64, f64, bool) {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut ok = true;
    let mut err = 0.0;
    let v = simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth, &mut ok, &mut err);
    (v, err, ok)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    ok: &mut bool,
    err: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        *err += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *ok = false;
        *err += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, ok, err)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, ok, err)
}
