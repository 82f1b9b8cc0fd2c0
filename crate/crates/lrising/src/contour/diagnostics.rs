use super::{encode, flipped_sites, group_contours, triangles_from_config, Contour, Triangle};
use crate::error::{invalid, Error, Result};
use crate::lattice::{CouplingTable, ModelParams, SpinConfig};
use crate::rng;
use rand::Rng;
use rayon::prelude::*;

/// Truncation point of the series defining `c`.
pub const C_SERIES_TERMS: u64 = 1_000_000;

/// `Σ_{M=1}^{M*} 4M/⌊cM³⌋ + (4/c)/M*`.
pub fn c_series(c: f64) -> f64 {
    let mut s = 0.0;
    for m in 1..=C_SERIES_TERMS {
        let mf = m as f64;
        s += 4.0 * mf / (c * mf * mf * mf).floor();
    }
    s + 4.0 / c / C_SERIES_TERMS as f64
}

/// Smallest `c` (to 1e-3) with `c_series(c) <= 1/2`.
pub fn find_min_c() -> f64 {
    let (mut lo, mut hi) = (1.0f64, 100.0f64);
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if c_series(mid) <= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Default grouping constant `ceil(find_min_c())`.
pub fn default_c() -> f64 {
    find_min_c().ceil()
}

/// Which sign of the `π²/(6c)` term to use in `K_c(α)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KcVariant {
    /// `1 - (2-α)/c^{1-α} + π²/(6c)`.
    Printed,
    /// `1 - (2-α)/c^{1-α} - π²/(6c)`.
    MinusSign,
}

pub fn k_c(alpha: f64, c: f64, variant: KcVariant) -> f64 {
    let zeta2 = std::f64::consts::PI.powi(2) / (6.0 * c);
    let base = 1.0 - (2.0 - alpha) / c.powf(1.0 - alpha);
    match variant {
        KcVariant::Printed => base + zeta2,
        KcVariant::MinusSign => base - zeta2,
    }
}

/// `χ_α(m)`: `m^α`, or `ln m + 4` at `α = 0`.
pub fn chi(alpha: f64, m: usize) -> f64 {
    if alpha == 0.0 {
        (m as f64).ln() + 4.0
    } else {
        (m as f64).powf(alpha)
    }
}

/// `||Γ||_α = Σ_T χ_α(|T|)`.
pub fn contour_norm(gamma: &Contour, alpha: f64) -> f64 {
    gamma.triangles.iter().map(|t| chi(alpha, t.mass())).sum()
}

/// `H^f` (disagreement form) of the configuration whose minus spins are `flipped`.
pub fn flipped_set_energy(flipped: &[i64], n: usize, table: &CouplingTable) -> f64 {
    let mut e = 0.0;
    for &x in flipped {
        e += table.row_sum(n, x);
    }
    for (i, &x) in flipped.iter().enumerate() {
        for &y in &flipped[i + 1..] {
            e -= 2.0 * table.at(x.abs_diff(y) as usize);
        }
    }
    e
}

/// `H^f[T]` of the configuration carrying exactly `triangles` with plus exterior.
pub fn family_energy(triangles: &[Triangle], n: usize, table: &CouplingTable) -> Result<f64> {
    let f = flipped_sites(triangles);
    if f.iter().any(|x| x.unsigned_abs() as usize > n) {
        return invalid("triangles leave the volume");
    }
    Ok(flipped_set_energy(&f, n, table))
}

/// `H^f_{Λ_N}[Γ]`.
pub fn contour_energy(gamma: &Contour, p: &ModelParams) -> Result<f64> {
    let table = CouplingTable::new(p, 2 * p.n + 1);
    family_energy(&gamma.triangles, p.n, &table)
}

/// Minimal `H^f/||Γ||_α` among contours of one mass.
#[derive(Debug, Clone, PartialEq)]
pub struct PeierlsMassRow {
    pub mass: usize,
    pub count: u64,
    pub boundary_count: u64,
    pub min_ratio_all: f64,
    pub min_ratio_interior: f64,
}

/// Result of [`peierls_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct PeierlsReport {
    pub alpha: f64,
    pub n: usize,
    pub m_max: usize,
    pub c: f64,
    pub rows: Vec<PeierlsMassRow>,
}

impl PeierlsReport {
    fn min_upto(&self, m: usize, f: impl Fn(&PeierlsMassRow) -> f64) -> f64 {
        self.rows.iter().filter(|r| r.mass <= m).map(f).fold(f64::INFINITY, f64::min)
    }

    /// Minimal ratio over contours of mass at most `m`, boundary contours included.
    pub fn min_ratio(&self, m: usize) -> f64 {
        self.min_upto(m, |r| r.min_ratio_all)
    }

    /// Minimal ratio over non-boundary contours of mass at most `m`.
    pub fn min_ratio_interior(&self, m: usize) -> f64 {
        self.min_upto(m, |r| r.min_ratio_interior)
    }

    /// `ζ̂_α = 2 min ratio` at mass cutoff `m`.
    pub fn zeta_hat(&self, m: usize) -> f64 {
        2.0 * self.min_ratio(m)
    }

    pub fn zeta_hat_interior(&self, m: usize) -> f64 {
        2.0 * self.min_ratio_interior(m)
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().map(|r| r.count).sum()
    }
}

/// Largest number of configurations the Peierls enumeration will visit.
pub const PEIERLS_GUARD: u64 = 10_000_000;

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// All `width`-bit masks with exactly `k` bits set, ascending.
fn masks_with_popcount(width: u32, k: u32) -> Vec<u64> {
    if k == 0 {
        return vec![0];
    }
    let mut out = Vec::new();
    let mut v: u64 = (1u64 << k) - 1;
    let limit = 1u64 << width;
    while v < limit {
        out.push(v);
        let t = v | (v - 1);
        v = (t + 1) | (((!t & (!t).wrapping_neg()) - 1) >> (v.trailing_zeros() + 1));
    }
    out
}

/// Enumerates every contour with `Δ(Γ) ⊂ Λ_N` and mass at most `m_max`,
/// boundary contours included, and records `H^f[Γ]/||Γ||_α` by mass.
pub fn peierls_check(alpha: f64, m_max: usize, n: usize, j: f64, c: f64) -> Result<PeierlsReport> {
    let alpha_plus = 3f64.log2() - 1.0;
    if !(0.0..alpha_plus).contains(&alpha) {
        return invalid(format!("alpha must lie in [0, {alpha_plus:.4}), got {alpha}"));
    }
    let p = ModelParams::new(alpha, 1.0, j, n, n + 1)?;
    let width = (2 * n + 1) as u64;
    let total: u64 = (1..=m_max as u64).map(|k| binomial(width, k.min(width))).sum();
    if total > PEIERLS_GUARD {
        return Err(Error::EnumerationGuard { count: total, limit: PEIERLS_GUARD });
    }
    let table = CouplingTable::new(&p, 2 * n + 1);
    let masks: Vec<u64> =
        (1..=m_max.min(2 * n + 1) as u32).flat_map(|k| masks_with_popcount(width as u32, k)).collect();
    let found: Vec<Option<(usize, bool, f64)>> = masks
        .par_iter()
        .map(|&bits| {
            let sigma = SpinConfig::from_bits(n, bits);
            let enc = encode(&sigma);
            if enc.exterior_sign != 1 {
                return Ok(None);
            }
            let mass: usize = enc.triangles.iter().map(|t| t.mass()).sum();
            if mass > m_max || enc.triangles.is_empty() {
                return Ok(None);
            }
            let set = group_contours(&enc.triangles, c)?;
            if set.contours.len() != 1 {
                return Ok(None);
            }
            let gamma = Contour::new(enc.triangles.clone());
            let flipped: Vec<i64> = sigma.sites().filter(|&x| sigma.get(x) == -1).collect();
            let energy = super::flipped_set_energy(&flipped, n, &table);
            Ok(Some((mass, gamma.is_boundary(), energy / contour_norm(&gamma, alpha))))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<PeierlsMassRow> = (1..=m_max)
        .map(|m| PeierlsMassRow {
            mass: m,
            count: 0,
            boundary_count: 0,
            min_ratio_all: f64::INFINITY,
            min_ratio_interior: f64::INFINITY,
        })
        .collect();
    for (mass, boundary, ratio) in found.into_iter().flatten() {
        let row = &mut rows[mass - 1];
        row.count += 1;
        row.min_ratio_all = row.min_ratio_all.min(ratio);
        if boundary {
            row.boundary_count += 1;
        } else {
            row.min_ratio_interior = row.min_ratio_interior.min(ratio);
        }
    }
    Ok(PeierlsReport { alpha, n, m_max, c, rows })
}

/// Result of [`quasi_additivity_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiAdditivityReport {
    pub families: usize,
    pub contours_tested: usize,
    pub k_c_printed: f64,
    pub k_c_minus: f64,
    /// Smallest `(H[Γ0 ∪ rest] - H[rest]) / H[Γ0]`.
    pub min_ratio_first: f64,
    /// Smallest `H[Γ0,...,Γn] / Σ H[Γi]`.
    pub min_ratio_second: f64,
    pub violations_first_printed: usize,
    pub violations_second_printed: usize,
    pub violations_first_minus: usize,
    pub violations_second_minus: usize,
}

impl QuasiAdditivityReport {
    pub fn violations_printed(&self) -> usize {
        self.violations_first_printed + self.violations_second_printed
    }
}

/// Draws a configuration whose flip points appear independently with a
/// density chosen uniformly in `[0.02, 0.3]`.
pub fn sparse_random_config(n: usize, rng: &mut impl Rng) -> SpinConfig {
    let density: f64 = rng.random_range(0.02..0.3);
    let mut s = 1i8;
    let spins = (0..2 * n + 1)
        .map(|i| {
            if i > 0 && rng.random_bool(density) {
                s = -s;
            }
            s
        })
        .collect();
    SpinConfig::new(n, spins).expect("valid spins")
}

/// Tests both quasi-additivity inequalities on random compatible families.
pub fn quasi_additivity_check(alpha: f64, c: f64, n: usize, trials: usize, seed: u64) -> Result<QuasiAdditivityReport> {
    let p = ModelParams::new(alpha, 1.0, 1.0, n, n + 1)?;
    let table = CouplingTable::new(&p, 2 * n + 1);
    let kp = k_c(alpha, c, KcVariant::Printed);
    let km = k_c(alpha, c, KcVariant::MinusSign);
    let per_trial: Vec<(usize, f64, f64, [usize; 4])> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut g = rng::substream(seed, t);
            let mut tris = Vec::new();
            while tris.is_empty() {
                tris = triangles_from_config(&sparse_random_config(n, &mut g));
            }
            let set = group_contours(&tris, c)?;
            let contours = set.to_contours(&tris);
            let all = family_energy(&tris, n, &table)?;
            let singles =
                contours.iter().map(|g| family_energy(&g.triangles, n, &table)).collect::<Result<Vec<_>>>()?;
            let mut counts = [0usize; 4];
            let mut min_first = f64::INFINITY;
            for (i, gamma) in contours.iter().enumerate() {
                let rest: Vec<Triangle> = tris.iter().copied().filter(|t| !gamma.triangles.contains(t)).collect();
                let diff = all - family_energy(&rest, n, &table)?;
                min_first = min_first.min(diff / singles[i]);
                counts[0] += usize::from(diff < kp * singles[i]);
                counts[2] += usize::from(diff < km * singles[i]);
            }
            let sum: f64 = singles.iter().sum();
            counts[1] += usize::from(all < kp * sum);
            counts[3] += usize::from(all < km * sum);
            Ok((contours.len(), min_first, all / sum, counts))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = QuasiAdditivityReport {
        families: trials,
        contours_tested: 0,
        k_c_printed: kp,
        k_c_minus: km,
        min_ratio_first: f64::INFINITY,
        min_ratio_second: f64::INFINITY,
        violations_first_printed: 0,
        violations_second_printed: 0,
        violations_first_minus: 0,
        violations_second_minus: 0,
    };
    for (k, first, second, counts) in per_trial {
        r.contours_tested += k;
        r.min_ratio_first = r.min_ratio_first.min(first);
        r.min_ratio_second = r.min_ratio_second.min(second);
        r.violations_first_printed += counts[0];
        r.violations_second_printed += counts[1];
        r.violations_first_minus += counts[2];
        r.violations_second_minus += counts[3];
    }
    Ok(r)
}
