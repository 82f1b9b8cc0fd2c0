//! Triangles grown from spin-flip points and their grouping into contours.
//!
//! Positions of flip points are kept in doubled coordinates: the flip point
//! between sites `x` and `x+1` is the odd integer `2x+1`.
//!
//! Anchors are perturbed as `r_x = x + ε x^2` with `ε` infinitesimal, so event
//! heights are compared exactly as pairs (leading term, coefficient of `ε`).
//! The vertical walls sit at `±(N + 1/2)`, just outside the outermost sites.

mod diagnostics;
mod enumerate;
mod group;

pub use diagnostics::*;
pub use enumerate::*;
pub use group::*;

use crate::error::{invalid, Result};
use crate::lattice::SpinConfig;
use std::fmt;

/// A triangle with integer base `[lo, hi]`.
///
/// For a left boundary triangle `lo = -N` and its only flip point is the
/// right root; symmetrically for a right boundary triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triangle {
    pub lo: i64,
    pub hi: i64,
    pub left_boundary: bool,
    pub right_boundary: bool,
}

impl Triangle {
    pub fn interior(lo: i64, hi: i64) -> Self {
        Triangle { lo, hi, left_boundary: false, right_boundary: false }
    }

    /// `|T| = |Δ(T)|`.
    pub fn mass(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_boundary(&self) -> bool {
        self.left_boundary || self.right_boundary
    }

    /// Left root, or the wall coordinate `-N` for a left boundary triangle.
    pub fn x_minus(&self) -> f64 {
        if self.left_boundary {
            self.lo as f64
        } else {
            self.lo as f64 - 0.5
        }
    }

    /// Right root, or the wall coordinate `N` for a right boundary triangle.
    pub fn x_plus(&self) -> f64 {
        if self.right_boundary {
            self.hi as f64
        } else {
            self.hi as f64 + 0.5
        }
    }

    /// Flip points of the triangle in doubled coordinates.
    pub fn roots2(&self) -> impl Iterator<Item = i64> {
        let left = (!self.left_boundary).then_some(2 * self.lo - 1);
        let right = (!self.right_boundary).then_some(2 * self.hi + 1);
        left.into_iter().chain(right)
    }

    pub fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn shifted(&self, t: i64) -> Self {
        Triangle { lo: self.lo + t, hi: self.hi + t, ..*self }
    }
}

impl fmt::Display for Triangle {
    /// Dump line `(x_minus, x_plus, mass, boundary_flag)`, flag in `{-, L, R}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flag = match (self.left_boundary, self.right_boundary) {
            (true, _) => "L",
            (_, true) => "R",
            _ => "-",
        };
        write!(f, "({}, {}, {}, {})", self.x_minus(), self.x_plus(), self.mass(), flag)
    }
}

/// `d(T, T') = dist(sf*(T), sf*(T'))` over the flip points of both triangles.
pub fn triangle_distance(a: &Triangle, b: &Triangle) -> i64 {
    let mut best = i64::MAX;
    for r in a.roots2() {
        for s in b.roots2() {
            best = best.min((r - s).abs() / 2);
        }
    }
    best
}

/// Event key: (leading height, ε coefficient), both in common integer units.
type Key = (i64, i64);

#[derive(Clone, Copy)]
enum Event {
    Pair(usize),
    Left,
    Right,
}

/// Grows ∨-lines from flip points (doubled coordinates, strictly increasing).
///
/// With `walls = Some(N)` the lines are stopped by walls at `±(N+1/2)`;
/// with `None` the growth runs on the whole line and needs an even number of
/// flip points. Triangles are returned sorted by base.
pub fn grow_triangles(flips2: &[i64], walls: Option<i64>) -> Result<Vec<Triangle>> {
    if flips2.windows(2).any(|w| w[0] >= w[1]) || flips2.iter().any(|p| p.rem_euclid(2) != 1) {
        return invalid("flip points must be strictly increasing odd doubled coordinates");
    }
    if walls.is_none() && flips2.len() % 2 == 1 {
        return invalid("an odd number of flip points cannot close without walls");
    }
    let mut active: Vec<i64> = flips2.to_vec();
    let mut out = Vec::with_capacity(flips2.len());
    while !active.is_empty() {
        let mut best: Option<(Key, Event)> = None;
        let mut consider = |k: Key, e: Event| {
            if best.is_none_or(|(bk, _)| k < bk) {
                best = Some((k, e));
            }
        };
        for i in 0..active.len().saturating_sub(1) {
            let (a, b) = (active[i], active[i + 1]);
            consider((b - a, b * b - a * a), Event::Pair(i));
        }
        if let Some(n) = walls {
            let w = 2 * n + 1;
            let a = active[0];
            consider((2 * (a + w), 2 * a * a), Event::Left);
            let b = active[active.len() - 1];
            consider((2 * (w - b), -2 * b * b), Event::Right);
        }
        let (_, event) = best.expect("non-empty active set has an event");
        match event {
            Event::Pair(i) => {
                let (a, b) = (active[i], active[i + 1]);
                out.push(Triangle::interior((a + 1) / 2, (b - 1) / 2));
                active.drain(i..i + 2);
            }
            Event::Left => {
                let n = walls.unwrap_or_default();
                let a = active.remove(0);
                out.push(Triangle { lo: -n, hi: (a - 1) / 2, left_boundary: true, right_boundary: false });
            }
            Event::Right => {
                let n = walls.unwrap_or_default();
                let b = active.pop().expect("non-empty");
                out.push(Triangle { lo: (b + 1) / 2, hi: n, left_boundary: false, right_boundary: true });
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Flip points of `sigma` in doubled coordinates.
pub fn flip_points(sigma: &SpinConfig) -> Vec<i64> {
    let n = sigma.n() as i64;
    (-n..n).filter(|&x| sigma.get(x) != sigma.get(x + 1)).map(|x| 2 * x + 1).collect()
}

/// The triangle configuration `T(σ)`.
pub fn triangles_from_config(sigma: &SpinConfig) -> Vec<Triangle> {
    grow_triangles(&flip_points(sigma), Some(sigma.n() as i64)).expect("flip points of a configuration are valid")
}

/// Triangles together with the data needed to rebuild the configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEncoding {
    pub n: usize,
    pub triangles: Vec<Triangle>,
    /// Spin on `Ext(T(σ))`; the spin at `-N` when the exterior is empty.
    pub exterior_sign: i8,
    pub exterior_empty: bool,
}

/// Sites of `[-N, N]` covered by no triangle base.
pub fn exterior_sites(n: usize, triangles: &[Triangle]) -> Vec<i64> {
    let n = n as i64;
    (-n..=n).filter(|&x| !triangles.iter().any(|t| t.contains(x))).collect()
}

pub fn encode(sigma: &SpinConfig) -> ConfigEncoding {
    let triangles = triangles_from_config(sigma);
    let ext = exterior_sites(sigma.n(), &triangles);
    let (exterior_sign, exterior_empty) = match ext.first() {
        Some(&x) => (sigma.get(x), false),
        None => (sigma.get(-(sigma.n() as i64)), true),
    };
    ConfigEncoding { n: sigma.n(), triangles, exterior_sign, exterior_empty }
}

/// `(-1)^{#flip points left of x}` for each site of `[-N, N]`.
fn relative_signs(n: usize, triangles: &[Triangle]) -> Vec<i8> {
    let mut roots: Vec<i64> = triangles.iter().flat_map(|t| t.roots2()).collect();
    roots.sort_unstable();
    let n = n as i64;
    let mut k = 0;
    let mut sign = 1i8;
    (-n..=n)
        .map(|x| {
            while k < roots.len() && roots[k] < 2 * x {
                sign = -sign;
                k += 1;
            }
            sign
        })
        .collect()
}

/// Rebuilds `σ` by flipping across every root.
pub fn decode(enc: &ConfigEncoding) -> SpinConfig {
    let rel = relative_signs(enc.n, &enc.triangles);
    let reference = if enc.exterior_empty {
        1
    } else {
        let ext = exterior_sites(enc.n, &enc.triangles);
        rel[(ext[0] + enc.n as i64) as usize]
    };
    let spins = rel.iter().map(|&r| r * reference * enc.exterior_sign).collect();
    SpinConfig::new(enc.n, spins).expect("decoded spins are valid")
}

/// `+1` if `σ ∈ Ω⁺`, `-1` if `σ ∈ Ω⁻`.
pub fn omega_sign(sigma: &SpinConfig) -> i8 {
    encode(sigma).exterior_sign
}

/// Sites flipped relative to a plus exterior: covered by an odd number of bases.
pub fn flipped_sites(triangles: &[Triangle]) -> Vec<i64> {
    let mut ends: Vec<i64> = triangles.iter().flat_map(|t| [t.lo, t.hi + 1]).collect();
    ends.sort_unstable();
    ends.chunks(2).flat_map(|w| w[0]..w[1]).collect()
}

/// A contour: a set of triangles.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Contour {
    pub triangles: Vec<Triangle>,
}

impl Contour {
    pub fn new(mut triangles: Vec<Triangle>) -> Self {
        triangles.sort();
        Contour { triangles }
    }

    /// `|Γ| = Σ |T|`.
    pub fn mass(&self) -> usize {
        self.triangles.iter().map(|t| t.mass()).sum()
    }

    pub fn is_boundary(&self) -> bool {
        self.triangles.iter().any(|t| t.is_boundary())
    }

    /// Sites of `Δ(Γ)`, sorted.
    pub fn base_sites(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.triangles.iter().flat_map(|t| t.lo..=t.hi).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn shifted(&self, t: i64) -> Self {
        Contour { triangles: self.triangles.iter().map(|x| x.shifted(t)).collect() }
    }
}

/// Largest `N` accepted by [`bijection_check`].
pub const BIJECTION_MAX_N: usize = 10;

/// Counts from an exhaustive encode/decode sweep at one volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BijectionCheck {
    pub n: usize,
    pub configs: u64,
    pub round_trip_failures: u64,
    pub pairs: u64,
    /// Pairs with `d(T, T') < min(|T|, |T'|)`.
    pub triangle_violations: u64,
}

impl BijectionCheck {
    pub fn passed(&self) -> bool {
        self.round_trip_failures == 0 && self.triangle_violations == 0
    }
}

/// Encodes and decodes every configuration of `[-N, N]` and checks the
/// triangle condition on every produced pair.
pub fn bijection_check(n: usize) -> Result<BijectionCheck> {
    if n > BIJECTION_MAX_N {
        return invalid(format!("bijection sweep needs N <= {BIJECTION_MAX_N}, got {n}"));
    }
    use rayon::prelude::*;
    let configs = 1u64 << (2 * n + 1);
    let (fails, pairs, bad) = (0..configs)
        .into_par_iter()
        .map(|bits| {
            let sigma = SpinConfig::from_bits(n, bits);
            let enc = encode(&sigma);
            let fail = u64::from(decode(&enc) != sigma);
            let t = &enc.triangles;
            let mut pairs = 0u64;
            let mut bad = 0u64;
            for i in 0..t.len() {
                for j in i + 1..t.len() {
                    pairs += 1;
                    let need = t[i].mass().min(t[j].mass()) as i64;
                    bad += u64::from(triangle_distance(&t[i], &t[j]) < need);
                }
            }
            (fail, pairs, bad)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    Ok(BijectionCheck { n, configs, round_trip_failures: fails, pairs, triangle_violations: bad })
}
