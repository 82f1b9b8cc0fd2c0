//! Couplings, Hamiltonians, boundary fields and window marginals for the
//! long-range chain on `Λ_N = [-N, N]`.

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Model parameters. `y` is the exterior truncation radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub j: f64,
    pub n: usize,
    pub y: usize,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, j: f64, n: usize, y: usize) -> Result<Self> {
        let p = ModelParams { alpha, beta, j, n, y };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `J = 1` and `Y = 16 N`.
    pub fn standard(alpha: f64, beta: f64, n: usize) -> Result<Self> {
        Self::new(alpha, beta, 1.0, n, 16 * n.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return invalid(format!("alpha must lie in [0, 1), got {}", self.alpha));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return invalid(format!("beta must be finite and non-negative, got {}", self.beta));
        }
        if !(self.j >= 1.0) {
            return invalid(format!("J must be at least 1, got {}", self.j));
        }
        if self.n < 1 {
            return invalid("N must be at least 1");
        }
        if self.y <= self.n {
            return invalid(format!("Y = {} must exceed N = {}", self.y, self.n));
        }
        Ok(())
    }

    pub fn with_n(&self, n: usize) -> Self {
        ModelParams { n, ..*self }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        ModelParams { beta, ..*self }
    }

    pub fn volume(&self) -> usize {
        2 * self.n + 1
    }

    /// `J_xy` as a function of the distance `d = |x - y|`.
    #[inline]
    pub fn coupling_at(&self, d: u64) -> f64 {
        match d {
            0 => 0.0,
            1 => self.j,
            _ => (d as f64).powf(self.alpha - 2.0),
        }
    }
}

/// `J_xy`: `J` for neighbours, `|x-y|^(α-2)` beyond, zero on the diagonal.
pub fn coupling(x: i64, y: i64, p: &ModelParams) -> f64 {
    p.coupling_at(x.abs_diff(y))
}

/// Tabulated couplings `J(d)` and their prefix sums `P(d) = Σ_{k=1}^{d} J(k)`.
#[derive(Debug, Clone)]
pub struct CouplingTable {
    pub j: Vec<f64>,
    pub prefix: Vec<f64>,
}

impl CouplingTable {
    pub fn new(p: &ModelParams, max_distance: usize) -> Self {
        let mut j = Vec::with_capacity(max_distance + 1);
        let mut prefix = Vec::with_capacity(max_distance + 1);
        let mut acc = 0.0;
        for d in 0..=max_distance {
            let v = p.coupling_at(d as u64);
            acc += v;
            j.push(v);
            prefix.push(acc);
        }
        CouplingTable { j, prefix }
    }

    /// Table long enough for every pair inside `[-Y, Y]`.
    pub fn for_params(p: &ModelParams) -> Self {
        Self::new(p, 2 * p.y + 1)
    }

    #[inline]
    pub fn at(&self, d: usize) -> f64 {
        self.j[d]
    }

    /// `Σ_{k=a}^{b} J(k)` for `1 <= a`, empty when `b < a`.
    #[inline]
    pub fn range_sum(&self, a: usize, b: usize) -> f64 {
        if b < a {
            0.0
        } else {
            self.prefix[b] - self.prefix[a - 1]
        }
    }

    /// `S_y(N) = Σ_{|x|<=N} J_xy` for `|y| > N`.
    #[inline]
    pub fn column_sum(&self, n: usize, y_abs: usize) -> f64 {
        self.prefix[y_abs + n] - self.prefix[y_abs - n - 1]
    }

    /// `Σ_{y in Λ_N} J_xy` for `x` in `Λ_N`.
    #[inline]
    pub fn row_sum(&self, n: usize, x: i64) -> f64 {
        let left = (x + n as i64) as usize;
        let right = (n as i64 - x) as usize;
        self.prefix[left] + self.prefix[right]
    }
}

/// Spins on `Λ_N`, index `i` holding site `x = i - N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    n: usize,
    spins: Vec<i8>,
}

impl SpinConfig {
    pub fn new(n: usize, spins: Vec<i8>) -> Result<Self> {
        if spins.len() != 2 * n + 1 {
            return invalid(format!("expected {} spins, got {}", 2 * n + 1, spins.len()));
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return invalid("spins must be +1 or -1");
        }
        Ok(SpinConfig { n, spins })
    }

    pub fn all(n: usize, sign: i8) -> Self {
        SpinConfig { n, spins: vec![sign.signum(); 2 * n + 1] }
    }

    /// Bit `i` set means site `i - N` carries a minus spin.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        let spins = (0..2 * n + 1).map(|i| if (bits >> i) & 1 == 1 { -1 } else { 1 }).collect();
        SpinConfig { n, spins }
    }

    pub fn to_bits(&self) -> u64 {
        self.spins.iter().enumerate().filter(|(_, &s)| s == -1).fold(0u64, |acc, (i, _)| acc | (1 << i))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn get(&self, x: i64) -> i8 {
        self.spins[(x + self.n as i64) as usize]
    }

    pub fn flipped(&self) -> Self {
        SpinConfig { n: self.n, spins: self.spins.iter().map(|s| -s).collect() }
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        let n = self.n as i64;
        -n..=n
    }
}

/// Kind of exterior condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Random,
    AllPlus,
    AllMinus,
    Dobrushin,
    Free,
}

/// Exterior signs on `N < |y| <= Y`.
///
/// Random conditions are restrictions of one infinite i.i.d. sequence per
/// (seed, stream), so the same seed gives the same `η_y` for every `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    pub kind: BoundaryKind,
    pub seed: u64,
    pub stream: u64,
    n: usize,
    y: usize,
    right: Vec<i8>,
    left: Vec<i8>,
}

impl BoundaryCondition {
    fn from_fn(kind: BoundaryKind, n: usize, y: usize, f: impl Fn(i64) -> i8) -> Self {
        let right = (n + 1..=y).map(|s| f(s as i64)).collect();
        let left = (n + 1..=y).map(|s| f(-(s as i64))).collect();
        BoundaryCondition { kind, seed: 0, stream: 0, n, y, right, left }
    }

    pub fn free(n: usize, y: usize) -> Self {
        Self::from_fn(BoundaryKind::Free, n, y, |_| 0)
    }

    pub fn all_plus(n: usize, y: usize) -> Self {
        Self::from_fn(BoundaryKind::AllPlus, n, y, |_| 1)
    }

    pub fn all_minus(n: usize, y: usize) -> Self {
        Self::from_fn(BoundaryKind::AllMinus, n, y, |_| -1)
    }

    pub fn dobrushin(n: usize, y: usize) -> Self {
        Self::from_fn(BoundaryKind::Dobrushin, n, y, |s| if s > 0 { 1 } else { -1 })
    }

    /// Fair i.i.d. signs from substream 0 of `seed`.
    pub fn random(n: usize, y: usize, seed: u64) -> Self {
        Self::random_stream(n, y, seed, 0)
    }

    /// Fair i.i.d. signs from substream `stream` of `seed`.
    pub fn random_stream(n: usize, y: usize, seed: u64, stream: u64) -> Self {
        let mut words = vec![0u64; rng::words_for_radius(y)];
        rng::fill_words(&mut rng::substream(seed, stream), &mut words);
        let mut bc = Self::from_fn(BoundaryKind::Random, n, y, |s| rng::sign_at(&words, s));
        bc.seed = seed;
        bc.stream = stream;
        bc
    }

    pub fn from_signs(n: usize, y: usize, f: impl Fn(i64) -> i8) -> Self {
        Self::from_fn(BoundaryKind::Random, n, y, f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn y(&self) -> usize {
        self.y
    }

    /// `η_y` for `N < |y| <= Y`, zero elsewhere.
    #[inline]
    pub fn get(&self, site: i64) -> i8 {
        let a = site.unsigned_abs() as usize;
        if a <= self.n || a > self.y {
            return 0;
        }
        if site > 0 {
            self.right[a - self.n - 1]
        } else {
            self.left[a - self.n - 1]
        }
    }

    /// The sign-reversed condition `-η`.
    pub fn negated(&self) -> Self {
        let kind = match self.kind {
            BoundaryKind::AllPlus => BoundaryKind::AllMinus,
            BoundaryKind::AllMinus => BoundaryKind::AllPlus,
            k => k,
        };
        BoundaryCondition {
            kind,
            right: self.right.iter().map(|s| -s).collect(),
            left: self.left.iter().map(|s| -s).collect(),
            ..self.clone()
        }
    }

    /// Keeps only `N < |y| <= radius`, zeroing everything further out.
    pub fn restricted(&self, radius: usize) -> Self {
        let mut bc = self.clone();
        for (k, (r, l)) in bc.right.iter_mut().zip(bc.left.iter_mut()).enumerate() {
            if self.n + 1 + k > radius {
                *r = 0;
                *l = 0;
            }
        }
        bc
    }

    fn check(&self, p: &ModelParams) -> Result<()> {
        if self.n != p.n || self.y != p.y {
            return invalid(format!(
                "boundary condition built for (N={}, Y={}) but params have (N={}, Y={})",
                self.n, self.y, p.n, p.y
            ));
        }
        Ok(())
    }
}

/// Which of the two Hamiltonian forms to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianForm {
    /// `-(1/2) Σ J σσ - Σ J σ η`.
    SpinProduct,
    /// `Σ_{x<y} J 1{σ_x≠σ_y} + Σ_x h(x) 1{σ_x = -1}`.
    Indicator,
}

/// Energy of `sigma` in `Λ_N` with exterior `eta`.
///
/// The two forms are related by `SpinProduct = 2 Indicator - Σ_{x<y} J - W`.
pub fn hamiltonian(sigma: &SpinConfig, eta: &BoundaryCondition, p: &ModelParams, form: HamiltonianForm) -> Result<f64> {
    eta.check(p)?;
    if sigma.n() != p.n {
        return invalid("configuration volume does not match params");
    }
    let n = p.n as i64;
    let mut bulk = 0.0;
    for d in 1..=2 * n {
        let jd = p.coupling_at(d as u64);
        for x in -n..=n - d {
            let (a, b) = (sigma.get(x), sigma.get(x + d));
            bulk += match form {
                HamiltonianForm::SpinProduct => -jd * f64::from(a * b),
                HamiltonianForm::Indicator => {
                    if a != b {
                        jd
                    } else {
                        0.0
                    }
                }
            };
        }
    }
    let mut ext = 0.0;
    for x in -n..=n {
        let h = boundary_field(x, eta, p)?;
        ext += match form {
            HamiltonianForm::SpinProduct => -h * f64::from(sigma.get(x)),
            HamiltonianForm::Indicator => {
                if sigma.get(x) == -1 {
                    h
                } else {
                    0.0
                }
            }
        };
    }
    Ok(bulk + ext)
}

/// Bulk disagreement energy `H^f(σ) = Σ_{x<y in Λ} J_xy 1{σ_x ≠ σ_y}`.
pub fn free_energy_indicator(sigma: &SpinConfig, p: &ModelParams) -> f64 {
    let n = sigma.n() as i64;
    let mut e = 0.0;
    for d in 1..=2 * n {
        let jd = p.coupling_at(d as u64);
        for x in -n..=n - d {
            if sigma.get(x) != sigma.get(x + d) {
                e += jd;
            }
        }
    }
    e
}

/// `h(x) = Σ_{N<|y|<=Y} J_xy η_y`, summed by increasing distance, right side first.
pub fn boundary_field(x: i64, eta: &BoundaryCondition, p: &ModelParams) -> Result<f64> {
    eta.check(p)?;
    let n = p.n as i64;
    if x.abs() > n {
        return invalid(format!("site {x} outside the volume"));
    }
    Ok(field_sum(x, eta, p))
}

fn field_sum(x: i64, eta: &BoundaryCondition, p: &ModelParams) -> f64 {
    if eta.kind == BoundaryKind::Free {
        return 0.0;
    }
    let (n, y) = (p.n as i64, p.y as i64);
    let mut h = 0.0;
    for s in n + 1..=y {
        h += p.coupling_at((s - x) as u64) * f64::from(eta.get(s));
    }
    for s in n + 1..=y {
        h += p.coupling_at((s + x) as u64) * f64::from(eta.get(-s));
    }
    h
}

/// All fields `h(x)` for `x = -N..=N`.
pub fn boundary_fields(eta: &BoundaryCondition, p: &ModelParams) -> Result<Vec<f64>> {
    eta.check(p)?;
    let n = p.n as i64;
    Ok((-n..=n).map(|x| field_sum(x, eta, p)).collect())
}

/// Fields produced by the exterior sites `N < |y| <= radius` only.
pub fn annulus_fields(eta: &BoundaryCondition, p: &ModelParams, radius: usize) -> Result<Vec<f64>> {
    boundary_fields(&eta.restricted(radius), p)
}

/// Boundary energy `W_N` and the variance it loses to the truncation at `Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEnergy {
    pub w: f64,
    pub tail_variance_bound: f64,
}

/// `W_N = Σ_x h(x)`, computed column-wise as `Σ_y S_y(N) η_y`.
pub fn boundary_energy(eta: &BoundaryCondition, p: &ModelParams) -> Result<BoundaryEnergy> {
    eta.check(p)?;
    let table = CouplingTable::for_params(p);
    let mut w = 0.0;
    if eta.kind != BoundaryKind::Free {
        for s in p.n + 1..=p.y {
            let col = table.column_sum(p.n, s);
            w += col * f64::from(eta.get(s as i64) + eta.get(-(s as i64)));
        }
    }
    Ok(BoundaryEnergy { w, tail_variance_bound: tail_variance_bound(p) })
}

/// `Σ_{|y|>Y} S_y(N)^2 <= 2 (2N+1)^2 (Y-N)^(2α-3) / (3-2α)`.
pub fn tail_variance_bound(p: &ModelParams) -> f64 {
    let m = (2 * p.n + 1) as f64;
    let gap = (p.y - p.n) as f64;
    2.0 * m * m * gap.powf(2.0 * p.alpha - 3.0) / (3.0 - 2.0 * p.alpha)
}

/// `S_y(N)` for `N < y <= Y` with the bound `(2-α)/(1-α) (y-N)^(α-1)`.
#[derive(Debug, Clone)]
pub struct CoefficientProfile {
    pub n: usize,
    pub ys: Vec<i64>,
    pub s: Vec<f64>,
    pub bound: Vec<f64>,
}

impl CoefficientProfile {
    /// Sites `y > 2N` where the bound fails. Empty when the bound holds.
    pub fn bound_violations(&self) -> Vec<i64> {
        self.ys
            .iter()
            .zip(self.s.iter().zip(&self.bound))
            .filter(|(&y, (s, b))| y > 2 * self.n as i64 && s > b)
            .map(|(&y, _)| y)
            .collect()
    }

    pub fn get(&self, y: i64) -> Option<f64> {
        let a = y.unsigned_abs() as usize;
        (a > self.n && a - self.n <= self.s.len()).then(|| self.s[a - self.n - 1])
    }

    /// `Σ S_y^2` over `N < |y| <= Y` (both sides).
    pub fn variance(&self) -> f64 {
        2.0 * self.s.iter().map(|s| s * s).sum::<f64>()
    }
}

pub fn coefficient_profile(p: &ModelParams) -> Result<CoefficientProfile> {
    p.validate()?;
    let table = CouplingTable::for_params(p);
    let n = p.n;
    let ys: Vec<i64> = (n + 1..=p.y).map(|y| y as i64).collect();
    let s = (n + 1..=p.y).map(|y| table.column_sum(n, y)).collect();
    let k = (2.0 - p.alpha) / (1.0 - p.alpha);
    let bound = (n + 1..=p.y).map(|y| k * ((y - n) as f64).powf(p.alpha - 1.0)).collect();
    Ok(CoefficientProfile { n, ys, s, bound })
}

/// Probability vector over spin patterns on a window of sites.
///
/// Pattern index: the first window site is the most significant bit and a
/// set bit means `+1`, so patterns run lexicographically with `-` before `+`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureMarginal {
    pub window: Vec<i64>,
    pub probs: Vec<f64>,
}

impl MeasureMarginal {
    pub fn new(window: Vec<i64>, probs: Vec<f64>) -> Result<Self> {
        if window.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("window must be strictly increasing");
        }
        if probs.len() != 1usize << window.len() {
            return invalid(format!("expected {} probabilities, got {}", 1usize << window.len(), probs.len()));
        }
        if probs.iter().any(|&q| !(q >= 0.0)) {
            return invalid("probabilities must be non-negative");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("probabilities sum to {total}, not 1"));
        }
        Ok(MeasureMarginal { window, probs })
    }

    /// Point mass on the pattern `spins` (one entry per window site).
    pub fn point_mass(window: Vec<i64>, spins: &[i8]) -> Result<Self> {
        let mut probs = vec![0.0; 1 << window.len()];
        probs[pattern_index(spins)] = 1.0;
        Self::new(window, probs)
    }

    pub fn uniform(window: Vec<i64>) -> Self {
        let k = 1usize << window.len();
        MeasureMarginal { window, probs: vec![1.0 / k as f64; k] }
    }

    /// `Σ w_i m_i` for marginals on a common window.
    pub fn mixture(parts: &[(f64, &MeasureMarginal)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?.1;
        let mut probs = vec![0.0; first.probs.len()];
        for (w, m) in parts {
            if m.window != first.window {
                return Err(Error::WindowMismatch { left: first.window.clone(), right: m.window.clone() });
            }
            for (acc, q) in probs.iter_mut().zip(&m.probs) {
                *acc += w * q;
            }
        }
        Ok(MeasureMarginal { window: first.window.clone(), probs })
    }

    /// Marginal of the globally flipped measure.
    pub fn flipped(&self) -> Self {
        let k = self.probs.len();
        let probs = (0..k).map(|s| self.probs[k - 1 - s]).collect();
        MeasureMarginal { window: self.window.clone(), probs }
    }

    pub fn prob(&self, spins: &[i8]) -> f64 {
        self.probs[pattern_index(spins)]
    }
}

/// Index of a pattern in [`MeasureMarginal`] order.
pub fn pattern_index(spins: &[i8]) -> usize {
    spins.iter().fold(0usize, |acc, &s| (acc << 1) | usize::from(s == 1))
}

/// Pattern at index `s` for a window of `k` sites.
pub fn pattern_at(s: usize, k: usize) -> Vec<i8> {
    (0..k).map(|i| if (s >> (k - 1 - i)) & 1 == 1 { 1 } else { -1 }).collect()
}

/// `||a - b||_X = Σ_s |a(s) - b(s)|`.
pub fn window_distance(a: &MeasureMarginal, b: &MeasureMarginal) -> Result<f64> {
    if a.window != b.window {
        return Err(Error::WindowMismatch { left: a.window.clone(), right: b.window.clone() });
    }
    Ok(a.probs.iter().zip(&b.probs).map(|(p, q)| (p - q).abs()).sum())
}
