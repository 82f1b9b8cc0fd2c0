//! Finite-volume Gibbs measures: exact enumeration for small volumes and a
//! heat-bath sampler beyond.
//!
//! Configurations are stored by bit mask, bit `i` set meaning a minus spin at
//! site `i - N`. Energies use the spin-product form.

use crate::contour::omega_sign;
use crate::error::{invalid, Error, Result};
use crate::lattice::{
    boundary_energy, boundary_fields, pattern_index, BoundaryCondition, CouplingTable, MeasureMarginal, ModelParams,
    SpinConfig,
};
use crate::rng;
use crate::stats::{batch_means, logsumexp};
use rand::Rng;
use rayon::prelude::*;
use std::sync::OnceLock;

/// Largest half-width accepted by the exact engine.
pub const EXACT_MAX_N: usize = 11;

const GRAY_CHUNK: usize = 1 << 12;

static OMEGA_PLUS: [OnceLock<Vec<u64>>; EXACT_MAX_N + 1] = [const { OnceLock::new() }; EXACT_MAX_N + 1];

/// Bit set over configuration masks of `Λ_N`: bit `b` is set iff mask `b` lies in `Ω⁺`.
pub fn omega_plus_set(n: usize) -> Result<&'static [u64]> {
    if n > EXACT_MAX_N {
        return Err(Error::TooLarge { n, limit: EXACT_MAX_N });
    }
    Ok(OMEGA_PLUS[n].get_or_init(|| {
        let count = 1u64 << (2 * n + 1);
        let words = count.div_ceil(64) as usize;
        (0..words)
            .into_par_iter()
            .map(|w| {
                let mut word = 0u64;
                for j in 0..64u64 {
                    let bits = w as u64 * 64 + j;
                    if bits < count && omega_sign(&SpinConfig::from_bits(n, bits)) == 1 {
                        word |= 1 << j;
                    }
                }
                word
            })
            .collect()
    }))
}

#[inline]
fn in_omega_plus(set: &[u64], bits: usize) -> bool {
    (set[bits / 64] >> (bits % 64)) & 1 == 1
}

#[inline]
fn spin(bits: usize, i: usize) -> f64 {
    if (bits >> i) & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// `-Σ_{i<j} J σ_i σ_j - Σ_i h_i σ_i` for the mask `bits`.
fn energy_of(bits: usize, table: &CouplingTable, fields: &[f64]) -> f64 {
    let v = fields.len();
    let mut e = 0.0;
    for d in 1..v {
        let jd = table.at(d);
        for i in 0..v - d {
            e -= jd * spin(bits, i) * spin(bits, i + d);
        }
    }
    for (i, h) in fields.iter().enumerate() {
        e -= h * spin(bits, i);
    }
    e
}

/// Energies of every mask, walked in Gray-code order within fixed chunks.
fn all_energies(table: &CouplingTable, fields: &[f64]) -> Vec<f64> {
    let v = fields.len();
    let count = 1usize << v;
    let mut by_gray = vec![0.0; count];
    by_gray.par_chunks_mut(GRAY_CHUNK.min(count)).enumerate().for_each(|(c, out)| {
        let start = c * GRAY_CHUNK.min(count);
        let mut bits = start ^ (start >> 1);
        let mut e = energy_of(bits, table, fields);
        let mut local: Vec<f64> =
            (0..v).map(|i| (0..v).filter(|&j| j != i).map(|j| table.at(i.abs_diff(j)) * spin(bits, j)).sum()).collect();
        out[0] = e;
        for (off, slot) in out.iter_mut().enumerate().skip(1) {
            let i = (start + off).trailing_zeros() as usize;
            let s = spin(bits, i);
            e += 2.0 * s * (local[i] + fields[i]);
            for (j, l) in local.iter_mut().enumerate() {
                if j != i {
                    *l -= 2.0 * s * table.at(i.abs_diff(j));
                }
            }
            bits ^= 1 << i;
            *slot = e;
        }
    });
    let mut energies = vec![0.0; count];
    for (k, e) in by_gray.into_iter().enumerate() {
        energies[k ^ (k >> 1)] = e;
    }
    energies
}

/// Exact Gibbs weights of `Λ_N` for given exterior fields.
#[derive(Debug, Clone)]
pub struct ExactEnsemble {
    pub params: ModelParams,
    pub fields: Vec<f64>,
    log_weights: Vec<f64>,
    pub log_z: f64,
    pub log_z_plus: f64,
    pub log_z_minus: f64,
}

impl ExactEnsemble {
    /// Enumerates `μ^η_{Λ_N}` with the truncated exterior `eta`.
    pub fn new(p: &ModelParams, eta: &BoundaryCondition) -> Result<Self> {
        let fields = boundary_fields(eta, p)?;
        Self::with_fields(p, fields)
    }

    /// Enumerates the measure with arbitrary exterior fields `h(x)`.
    pub fn with_fields(p: &ModelParams, fields: Vec<f64>) -> Result<Self> {
        p.validate()?;
        if p.n > EXACT_MAX_N {
            return Err(Error::TooLarge { n: p.n, limit: EXACT_MAX_N });
        }
        if fields.len() != p.volume() {
            return invalid(format!("expected {} fields, got {}", p.volume(), fields.len()));
        }
        let table = CouplingTable::new(p, 2 * p.n + 1);
        let beta = p.beta;
        let log_weights: Vec<f64> = all_energies(&table, &fields).into_iter().map(|e| -beta * e).collect();
        let omega = omega_plus_set(p.n)?;
        let split = |plus: bool| {
            let v: Vec<f64> = log_weights
                .iter()
                .enumerate()
                .filter(|(b, _)| in_omega_plus(omega, *b) == plus)
                .map(|(_, &w)| w)
                .collect();
            logsumexp(&v)
        };
        let log_z_plus = split(true);
        let log_z_minus = split(false);
        let log_z = logsumexp(&log_weights);
        Ok(ExactEnsemble { params: *p, fields, log_weights, log_z, log_z_plus, log_z_minus })
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    /// `log` of the unnormalised weight of `sigma`.
    pub fn log_weight(&self, sigma: &SpinConfig) -> f64 {
        self.log_weights[sigma.to_bits() as usize]
    }

    pub fn probability(&self, sigma: &SpinConfig) -> f64 {
        (self.log_weight(sigma) - self.log_z).exp()
    }

    fn window_bits(&self, window: &[i64]) -> Result<Vec<usize>> {
        let n = self.n() as i64;
        if window.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("window must be strictly increasing");
        }
        window
            .iter()
            .map(|&x| {
                if x.abs() > n {
                    invalid(format!("window site {x} outside the volume"))
                } else {
                    Ok((x + n) as usize)
                }
            })
            .collect()
    }

    fn marginal_where(&self, window: &[i64], log_norm: f64, keep: impl Fn(usize) -> bool) -> Result<MeasureMarginal> {
        let idx = self.window_bits(window)?;
        let mut probs = vec![0.0; 1 << idx.len()];
        let mut pattern = vec![0i8; idx.len()];
        for (bits, &lw) in self.log_weights.iter().enumerate() {
            if !keep(bits) {
                continue;
            }
            for (slot, &i) in pattern.iter_mut().zip(&idx) {
                *slot = if (bits >> i) & 1 == 1 { -1 } else { 1 };
            }
            probs[pattern_index(&pattern)] += (lw - log_norm).exp();
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|q| *q /= total);
        MeasureMarginal::new(window.to_vec(), probs)
    }

    /// Marginal of `μ^η_{Λ_N}` on `window`.
    pub fn marginal(&self, window: &[i64]) -> Result<MeasureMarginal> {
        self.marginal_where(window, self.log_z, |_| true)
    }

    /// Marginal of `ν^{±,η}`, the measure conditioned on `Ω^±`.
    pub fn constrained_marginal(&self, window: &[i64], sign: i8) -> Result<MeasureMarginal> {
        let omega = omega_plus_set(self.n())?;
        match sign {
            1 => self.marginal_where(window, self.log_z_plus, |b| in_omega_plus(omega, b)),
            -1 => self.marginal_where(window, self.log_z_minus, |b| !in_omega_plus(omega, b)),
            _ => invalid("sign must be +1 or -1"),
        }
    }

    /// `<σ_x>`.
    pub fn magnetization(&self, x: i64) -> Result<f64> {
        let i = self.window_bits(&[x])?[0];
        Ok(self.log_weights.iter().enumerate().map(|(b, &lw)| spin(b, i) * (lw - self.log_z).exp()).sum())
    }

    pub fn magnetizations(&self) -> Result<Vec<f64>> {
        let n = self.n() as i64;
        (-n..=n).map(|x| self.magnetization(x)).collect()
    }

    /// `F = (log Z⁺ - log Z⁻) / 2β`.
    pub fn free_energy(&self) -> f64 {
        (self.log_z_plus - self.log_z_minus) / (2.0 * self.params.beta)
    }

    /// `λ = Z⁻ / Z`, the weight of `ν⁻` in `μ = λ ν⁻ + (1-λ) ν⁺`.
    pub fn mixture_weight(&self) -> f64 {
        (self.log_z_minus - self.log_z).exp()
    }
}

/// `exact_measure(p, η)`.
pub fn exact_measure(p: &ModelParams, eta: &BoundaryCondition) -> Result<ExactEnsemble> {
    ExactEnsemble::new(p, eta)
}

/// `F^η_N` split as `W^η + (log Ξ^η - log Ξ^{-η}) / 2β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergy {
    pub f: f64,
    pub w: f64,
    pub xi_part: f64,
}

pub fn free_energy_difference(p: &ModelParams, eta: &BoundaryCondition) -> Result<FreeEnergy> {
    let ens = ExactEnsemble::new(p, eta)?;
    let f = ens.free_energy();
    let w = boundary_energy(eta, p)?.w;
    Ok(FreeEnergy { f, w, xi_part: f - w })
}

pub fn mixture_weight(p: &ModelParams, eta: &BoundaryCondition) -> Result<f64> {
    Ok(ExactEnsemble::new(p, eta)?.mixture_weight())
}

pub fn constrained_measure(
    p: &ModelParams,
    eta: &BoundaryCondition,
    sign: i8,
    window: &[i64],
) -> Result<MeasureMarginal> {
    ExactEnsemble::new(p, eta)?.constrained_marginal(window, sign)
}

/// Marginal of the all-plus measure at the same volume, the proxy for `μ⁺`.
pub fn plus_reference_marginal(p: &ModelParams, window: &[i64]) -> Result<MeasureMarginal> {
    ExactEnsemble::new(p, &BoundaryCondition::all_plus(p.n, p.y))?.marginal(window)
}

/// Monte Carlo estimate with batch-means error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub burn_in: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub marginal: MeasureMarginal,
    /// Site-0 magnetisation.
    pub magnetization: McEstimate,
    /// Standard errors of the pattern frequencies.
    pub marginal_stderr: Vec<f64>,
}

/// Number of batches used for batch-means errors.
pub const MC_BATCHES: usize = 50;

/// Probability that a heat-bath update at site index `i` sets a plus spin,
/// given the local field `l` (bulk plus exterior).
#[inline]
pub fn heat_bath_plus_probability(beta: f64, l: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * beta * l).exp())
}

/// Probability that one heat-bath update at site `x` moves `sigma` to
/// `sigma` with site `x` flipped.
pub fn heat_bath_flip_probability(sigma: &SpinConfig, x: i64, fields: &[f64], p: &ModelParams) -> f64 {
    let n = p.n as i64;
    let l: f64 =
        sigma.sites().filter(|&y| y != x).map(|y| p.coupling_at(x.abs_diff(y)) * f64::from(sigma.get(y))).sum::<f64>()
            + fields[(x + n) as usize];
    let plus = heat_bath_plus_probability(p.beta, l);
    if sigma.get(x) == 1 {
        1.0 - plus
    } else {
        plus
    }
}

/// Systematic-scan heat-bath sampler for `μ^η_{Λ_N}`. One sample is recorded
/// per sweep after `burn_in` sweeps; low-temperature results are diagnostic only.
pub fn mc_measure(
    p: &ModelParams,
    eta: &BoundaryCondition,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
    window: &[i64],
) -> Result<McResult> {
    if sweeps <= burn_in {
        return invalid(format!("sweeps ({sweeps}) must exceed burn_in ({burn_in})"));
    }
    let n = p.n as i64;
    if window.iter().any(|x| x.abs() > n) || window.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("window must be strictly increasing inside the volume");
    }
    let fields = boundary_fields(eta, p)?;
    let v = p.volume();
    let table = CouplingTable::new(p, 2 * p.n + 1);
    let mut g = rng::substream(seed, 0);
    let mut sigma: Vec<f64> = (0..v).map(|_| if g.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let mut local: Vec<f64> =
        (0..v).map(|i| (0..v).filter(|&j| j != i).map(|j| table.at(i.abs_diff(j)) * sigma[j]).sum()).collect();
    let kept = sweeps - burn_in;
    let mut mags = Vec::with_capacity(kept);
    let k = 1usize << window.len();
    let mut hits: Vec<Vec<f64>> = vec![Vec::with_capacity(kept); k];
    let idx: Vec<usize> = window.iter().map(|&x| (x + n) as usize).collect();
    let mut pattern = vec![0i8; window.len()];
    for sweep in 0..sweeps {
        for i in 0..v {
            let plus = heat_bath_plus_probability(p.beta, local[i] + fields[i]);
            let new = if g.random::<f64>() < plus { 1.0 } else { -1.0 };
            if new != sigma[i] {
                let delta = new - sigma[i];
                for (j, l) in local.iter_mut().enumerate() {
                    if j != i {
                        *l += delta * table.at(i.abs_diff(j));
                    }
                }
                sigma[i] = new;
            }
        }
        if sweep >= burn_in {
            mags.push(sigma[p.n]);
            for (slot, &i) in pattern.iter_mut().zip(&idx) {
                *slot = sigma[i] as i8;
            }
            let s = pattern_index(&pattern);
            for (t, h) in hits.iter_mut().enumerate() {
                h.push(if t == s { 1.0 } else { 0.0 });
            }
        }
    }
    let (value, stderr) = batch_means(&mags, MC_BATCHES);
    let mut probs = Vec::with_capacity(k);
    let mut errs = Vec::with_capacity(k);
    for h in &hits {
        let (m, e) = batch_means(h, MC_BATCHES);
        probs.push(m);
        errs.push(e);
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|q| *q /= total);
    Ok(McResult {
        marginal: MeasureMarginal::new(window.to_vec(), probs)?,
        magnetization: McEstimate { value, stderr, samples: kept, burn_in, seed },
        marginal_stderr: errs,
    })
}
