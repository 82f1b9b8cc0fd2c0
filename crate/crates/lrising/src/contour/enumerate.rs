use super::group::{bases_intersect, cluster_distance, cluster_infos, ClusterInfo};
use super::{chi, flipped_set_energy, group_contours, grow_triangles, k_c, Contour, KcVariant, Triangle};
use crate::error::{invalid, Error, Result};
use crate::lattice::{CouplingTable, ModelParams};
use rayon::prelude::*;
use std::sync::atomic::{AtomicU64, Ordering};

/// A wall-free contour up to translation, anchored so that the leftmost site
/// of `Δ(Γ)` is `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub triangles: Vec<Triangle>,
    pub mass: usize,
    /// `|Δ(Γ)|`.
    pub span: usize,
}

impl Shape {
    pub fn contour(&self) -> Contour {
        Contour::new(self.triangles.clone())
    }

    pub fn delta_sites(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.triangles.iter().flat_map(|t| t.lo..=t.hi).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Number of translates whose base contains the origin.
    pub fn translates(&self) -> usize {
        self.span
    }

    pub fn flip_points(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.triangles.iter().flat_map(|t| t.roots2()).collect();
        v.sort_unstable();
        v
    }
}

/// A run of flip points less than `m_max + 1` sites apart, grown on its
/// own, with its first flip point at the doubled coordinate `-1`.
#[derive(Debug, Clone)]
struct Block {
    points: Vec<i64>,
    triangles: Vec<Triangle>,
    mass: usize,
    span: usize,
}

fn block_catalog(m_max: usize) -> Result<Vec<Block>> {
    fn rec(points: &mut Vec<i64>, m_max: usize, out: &mut Vec<Block>) -> Result<()> {
        if points.len().is_multiple_of(2) {
            let triangles = grow_triangles(points, None)?;
            let mass: usize = triangles.iter().map(|t| t.mass()).sum();
            if mass <= m_max {
                let span = Contour::new(triangles.clone()).base_sites().len();
                out.push(Block { points: points.clone(), triangles, mass, span });
            }
        }
        let last = *points.last().expect("non-empty");
        for g in 1..=m_max as i64 {
            points.push(last + 2 * g);
            if pairing_lower_bound(points) <= m_max {
                rec(points, m_max, out)?;
            }
            points.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    rec(&mut vec![-1], m_max, &mut out)?;
    out.sort_by(|a, b| a.mass.cmp(&b.mass).then_with(|| a.points.cmp(&b.points)));
    Ok(out)
}

/// Least possible total mass once the points are matched.
fn pairing_lower_bound(points: &[i64]) -> usize {
    let paired: i64 = points.chunks(2).filter(|c| c.len() == 2).map(|c| (c[1] - c[0]) / 2).sum();
    paired as usize + points.len() % 2
}

struct Walk<'a> {
    m_max: usize,
    c: f64,
    limit: u64,
    visited: &'a AtomicU64,
    catalog: &'a [Block],
}

impl Walk<'_> {
    fn tick(&self) -> Result<()> {
        let v = self.visited.fetch_add(1, Ordering::Relaxed) + 1;
        if v > self.limit {
            return Err(Error::EnumerationGuard { count: v, limit: self.limit });
        }
        Ok(())
    }

    fn single(&self, triangles: &[Triangle]) -> Result<bool> {
        self.tick()?;
        Ok(group_contours(triangles, self.c)?.contours.len() == 1)
    }

    /// `prefix` followed by block `b` whose first flip point sits at `start`.
    fn place(prefix: &[Triangle], b: &Block, start: i64) -> Vec<Triangle> {
        let t = (start + 1) / 2;
        prefix.iter().copied().chain(b.triangles.iter().map(|tr| tr.shifted(t))).collect()
    }

    /// Largest start of a next block that keeps every prefix cluster able to
    /// join the rest, or `None` if no further block can be added.
    ///
    /// Clusters that may still merge among themselves are linked into
    /// components; each component must reach the next block through one of
    /// its clusters within `c min(|A|, m_max - |component|)^3`.
    fn next_block_limit(&self, prefix: &[Triangle]) -> Result<Option<i64>> {
        let set = group_contours(prefix, self.c)?;
        let infos = cluster_infos(prefix, &set);
        let m = self.m_max;
        let half = m / 2;
        let h = |a: &ClusterInfo| a.mass.min(half) as f64;
        let k = infos.len();
        let mut comp: Vec<usize> = (0..k).collect();
        fn root(comp: &mut [usize], mut i: usize) -> usize {
            while comp[i] != i {
                comp[i] = comp[comp[i]];
                i = comp[i];
            }
            i
        }
        for i in 0..k {
            for j in i + 1..k {
                let linked = bases_intersect(&infos[i].base, &infos[j].base) || {
                    let d = cluster_distance(&infos[i].members, &infos[j].members, prefix) as f64;
                    d <= self.c * h(&infos[i]).max(h(&infos[j])).powi(3)
                };
                if linked {
                    let (a, b) = (root(&mut comp, i), root(&mut comp, j));
                    comp[a.max(b)] = a.min(b);
                }
            }
        }
        let mut comp_mass = vec![0usize; k];
        for (i, info) in infos.iter().enumerate().take(k) {
            let r = root(&mut comp, i);
            comp_mass[r] += info.mass;
        }
        let mut comp_reach = vec![i64::MIN; k];
        for (i, info) in infos.iter().enumerate() {
            let r = root(&mut comp, i);
            let room = m.saturating_sub(comp_mass[r]);
            let reach = if room == 0 {
                i64::MIN
            } else {
                let g = info.mass.min(room) as f64;
                info.rightmost_root2 + (2.0 * self.c * g.powi(3)).floor() as i64
            };
            comp_reach[r] = comp_reach[r].max(reach);
        }
        let limit = (0..k).filter(|&i| root(&mut comp, i) == i).map(|i| comp_reach[i]).min();
        Ok(limit.filter(|&l| l > i64::MIN))
    }

    /// Appends every admissible block after `prefix`, whose last flip point is `last`.
    ///
    /// Moving the new block right only increases distances to the prefix, so
    /// the starts giving a single contour form an interval found by bisection.
    fn extend(
        &self,
        prefix: &[Triangle],
        mass: usize,
        last: i64,
        span: usize,
        emit: &mut dyn FnMut(Shape) -> Result<()>,
    ) -> Result<()> {
        let Some(reach) = self.next_block_limit(prefix)? else {
            return Ok(());
        };
        let lo = last + 2 * (self.m_max as i64 + 1);
        if reach < lo {
            return Ok(());
        }
        for b in self.catalog.iter().take_while(|b| mass + b.mass <= self.m_max) {
            let total = mass + b.mass;
            if self.single(&Self::place(prefix, b, lo))? {
                let (mut good, mut bad) = (lo, reach - (reach - lo) % 2 + 2);
                while bad - good > 2 {
                    let mid = good + 2 * ((bad - good) / 4);
                    if self.single(&Self::place(prefix, b, mid))? {
                        good = mid;
                    } else {
                        bad = mid;
                    }
                }
                for s in (lo..=good).step_by(2) {
                    emit(Shape { triangles: Self::place(prefix, b, s), mass: total, span: span + b.span })?;
                }
            }
            if total < self.m_max {
                let end = *b.points.last().expect("blocks are non-empty") + 1;
                for s in (lo..=reach).step_by(2) {
                    self.extend(&Self::place(prefix, b, s), total, s + end, span + b.span, emit)?;
                }
            }
        }
        Ok(())
    }
}

/// Visits every shape of mass at most `m_max` that forms a single contour
/// under grouping constant `c`, folding them into per-branch accumulators.
///
/// Flip points closer than `m_max + 1` sites form a block; blocks further
/// apart cannot share a triangle, so each block grows on its own. Shapes are
/// sequences of blocks, the first starting at the doubled coordinate `-1`.
pub fn fold_shapes<A, I, V, R>(m_max: usize, c: f64, limit: u64, init: I, visit: V, reduce: R) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, &Shape) + Sync,
    R: Fn(A, A) -> A,
{
    if m_max == 0 {
        return invalid("mass cutoff must be positive");
    }
    if !(c > 0.0) {
        return invalid("grouping constant must be positive");
    }
    let catalog = block_catalog(m_max)?;
    let visited = AtomicU64::new(0);
    let walk = Walk { m_max, c, limit, visited: &visited, catalog: &catalog };
    let parts: Vec<A> = catalog
        .par_iter()
        .map(|b| {
            let mut acc = init();
            let mut emit = |shape: Shape| {
                visit(&mut acc, &shape);
                Ok(())
            };
            if walk.single(&b.triangles)? {
                emit(Shape { triangles: b.triangles.clone(), mass: b.mass, span: b.span })?;
            }
            if b.mass < m_max {
                let last = *b.points.last().expect("blocks are non-empty");
                walk.extend(&b.triangles, b.mass, last, b.span, &mut emit)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<A>>>()?;
    Ok(parts.into_iter().fold(init(), reduce))
}

/// Default cap on grouping calls during enumeration.
pub const SHAPE_GUARD: u64 = 200_000_000;

/// All single-contour shapes of mass at most `m_max`, sorted by flip points.
pub fn enumerate_shapes(m_max: usize, c: f64) -> Result<Vec<Shape>> {
    let mut v = fold_shapes(
        m_max,
        c,
        SHAPE_GUARD,
        Vec::new,
        |acc: &mut Vec<Shape>, s| acc.push(s.clone()),
        |mut a, b| {
            a.extend(b);
            a
        },
    )?;
    v.sort_by_key(|s| s.flip_points());
    Ok(v)
}

/// Shapes found by trying every flip-point set with gaps up to `window`
/// sites and growing them globally. Slow; a cross-check for [`enumerate_shapes`].
pub fn enumerate_shapes_naive(m_max: usize, c: f64, window: usize) -> Result<Vec<Shape>> {
    fn rec(points: &mut Vec<i64>, m_max: usize, c: f64, window: i64, out: &mut Vec<Shape>) -> Result<()> {
        let lower: i64 = points.chunks(2).filter(|p| p.len() == 2).map(|p| (p[1] - p[0]) / 2).sum::<i64>()
            + (points.len() % 2) as i64;
        if lower as usize > m_max {
            return Ok(());
        }
        if points.len().is_multiple_of(2) {
            let tris = grow_triangles(points, None)?;
            let mass: usize = tris.iter().map(|t| t.mass()).sum();
            if mass <= m_max && group_contours(&tris, c)?.contours.len() == 1 {
                let span = Contour::new(tris.clone()).base_sites().len();
                out.push(Shape { triangles: tris, mass, span });
            }
        }
        let last = *points.last().expect("non-empty");
        for g in 1..=window {
            points.push(last + 2 * g);
            rec(points, m_max, c, window, out)?;
            points.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    rec(&mut vec![-1], m_max, c, window as i64, &mut out)?;
    out.sort_by_key(|s| s.flip_points());
    Ok(out)
}

/// One row of [`EntropyReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyRow {
    pub mass: usize,
    pub b: f64,
    pub alpha: f64,
    pub contours: u64,
    pub lhs: f64,
    pub rhs: f64,
}

impl EntropyRow {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub c: f64,
    pub m_max: usize,
    pub rows: Vec<EntropyRow>,
}

impl EntropyReport {
    pub fn violations(&self) -> Vec<&EntropyRow> {
        self.rows.iter().filter(|r| !r.holds()).collect()
    }
}

/// Checks `Σ_{Γ∋0, |Γ|=m} e^{-b||Γ||_α} <= 2m e^{-b χ_α(m)}` for every
/// combination of `alphas`, `bs` and `m <= m_max`.
pub fn entropy_bound_check(alphas: &[f64], bs: &[f64], m_max: usize, c: f64) -> Result<EntropyReport> {
    if let Some(a) = alphas.iter().find(|a| !(0.0..1.0).contains(*a)) {
        return invalid(format!("alpha must lie in [0, 1), got {a}"));
    }
    if let Some(b) = bs.iter().find(|b| !(**b > 0.0)) {
        return invalid(format!("b must be positive, got {b}"));
    }
    let na = alphas.len();
    let nb = bs.len();
    let idx = move |m: usize, ia: usize, ib: usize| ((m - 1) * na + ia) * nb + ib;
    let size = m_max * na * nb;
    let (counts, sums) = fold_shapes(
        m_max,
        c,
        SHAPE_GUARD,
        || (vec![0u64; m_max], vec![0.0f64; size]),
        |(counts, sums), shape| {
            let k = shape.translates() as f64;
            counts[shape.mass - 1] += shape.translates() as u64;
            for (ia, &alpha) in alphas.iter().enumerate() {
                let norm: f64 = shape.triangles.iter().map(|t| chi(alpha, t.mass())).sum();
                for (ib, &b) in bs.iter().enumerate() {
                    sums[idx(shape.mass, ia, ib)] += k * (-b * norm).exp();
                }
            }
        },
        |(mut ca, mut sa), (cb, sb)| {
            ca.iter_mut().zip(cb).for_each(|(x, y)| *x += y);
            sa.iter_mut().zip(sb).for_each(|(x, y)| *x += y);
            (ca, sa)
        },
    )?;
    let mut rows = Vec::with_capacity(size);
    for (ia, &alpha) in alphas.iter().enumerate() {
        for (ib, &b) in bs.iter().enumerate() {
            for m in 1..=m_max {
                rows.push(EntropyRow {
                    mass: m,
                    b,
                    alpha,
                    contours: counts[m - 1],
                    lhs: sums[idx(m, ia, ib)],
                    rhs: 2.0 * m as f64 * (-b * chi(alpha, m)).exp(),
                });
            }
        }
    }
    Ok(EntropyReport { c, m_max, rows })
}

/// Parameters of the truncated Peierls sum `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoParams {
    pub alpha: f64,
    pub a: f64,
    pub eps: f64,
    /// Volume half-width `N`.
    pub n: usize,
    /// Sites cut at each end, the `n` of the field cap.
    pub cut: usize,
    pub m_max: usize,
    pub c: f64,
    pub j: f64,
    pub variant: KcVariant,
}

impl RhoParams {
    pub fn new(alpha: f64, a: f64, eps: f64, n: usize, cut: usize, m_max: usize) -> Result<Self> {
        let s = RhoParams { alpha, a, eps, n, cut, m_max, c: super::default_c(), j: 1.0, variant: KcVariant::Printed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            return invalid(format!("alpha must lie in (1/2, 1), got {}", self.alpha));
        }
        if !(self.eps > 0.0 && self.eps < 1.0 - self.alpha) {
            return invalid(format!("epsilon must lie in (0, 1 - alpha), got {}", self.eps));
        }
        let cap = (self.n as f64).powf((self.alpha - 0.5) / 2.0);
        if !((self.cut as f64) < cap) {
            return invalid(format!("n = {} must be below N^((α-1/2)/2) = {cap:.4}", self.cut));
        }
        if !(self.a > 0.0) {
            return invalid("a must be positive");
        }
        Ok(())
    }

    /// `h̃(x) = (N+x)^(α-3/2+ε) + (N-x)^(α-3/2+ε)`.
    pub fn field_cap(&self, x: i64) -> f64 {
        let e = self.alpha - 1.5 + self.eps;
        let n = self.n as f64;
        (n + x as f64).powf(e) + (n - x as f64).powf(e)
    }

    pub fn k_c(&self) -> f64 {
        k_c(self.alpha, self.c, self.variant)
    }
}

/// Lookup tables shared by every `ρ` term.
struct RhoTables {
    inner: i64,
    row: Vec<f64>,
    cap: Vec<f64>,
    coupling: CouplingTable,
}

impl RhoTables {
    fn new(spec: &RhoParams) -> Result<Self> {
        let p = ModelParams::new(spec.alpha, 1.0, spec.j, spec.n, spec.n + 1)?;
        let coupling = CouplingTable::new(&p, 2 * spec.n + 1);
        let inner = (spec.n - spec.cut) as i64;
        let row = (-inner..=inner).map(|x| coupling.row_sum(spec.n, x)).collect();
        let cap = (-inner..=inner).map(|x| spec.field_cap(x)).collect();
        Ok(RhoTables { inner, row, cap, coupling })
    }

    /// `(H^f, Σ_T Σ_{x∈T} h̃(x))` of every translate of `shape` whose base contains `0`.
    fn terms(&self, shape: &Shape, buf: &mut RhoScratch, mut f: impl FnMut(f64, f64)) -> Result<()> {
        let RhoScratch { ends, flipped, covered } = buf;
        ends.clear();
        ends.extend(shape.triangles.iter().flat_map(|t| [t.lo, t.hi + 1]));
        ends.sort_unstable();
        flipped.clear();
        flipped.extend(ends.chunks(2).flat_map(|w| w[0]..w[1]));
        let mut pairs = 0.0;
        for (i, &x) in flipped.iter().enumerate() {
            for &y in &flipped[i + 1..] {
                pairs += self.coupling.at(x.abs_diff(y) as usize);
            }
        }
        covered.clear();
        covered.extend(shape.triangles.iter().flat_map(|t| t.lo..=t.hi));
        covered.sort_unstable();
        if covered.last().is_some_and(|&x| x > self.inner) {
            return invalid("contour leaves the capped region; increase N");
        }
        let mut prev = None;
        for &x0 in covered.iter() {
            if prev == Some(x0) {
                continue;
            }
            prev = Some(x0);
            let at = |x: i64| (x - x0 + self.inner) as usize;
            let energy = flipped.iter().map(|&x| self.row[at(x)]).sum::<f64>() - 2.0 * pairs;
            let field = covered.iter().map(|&x| self.cap[at(x)]).sum::<f64>();
            f(energy, field);
        }
        Ok(())
    }
}

/// Buffers reused across shapes.
#[derive(Default)]
struct RhoScratch {
    ends: Vec<i64>,
    flipped: Vec<i64>,
    covered: Vec<i64>,
}

/// `(H^f[Γ], Σ_{T∈Γ} Σ_{x∈T} h̃(x))` for one contour placed in `Λ_N`.
pub fn rho_contour_term(spec: &RhoParams, gamma: &Contour) -> Result<(f64, f64)> {
    spec.validate()?;
    let t = RhoTables::new(spec)?;
    if gamma.triangles.iter().any(|tr| tr.lo < -t.inner || tr.hi > t.inner) {
        return invalid("contour leaves the capped region");
    }
    let flipped = super::flipped_sites(&gamma.triangles);
    let energy = flipped_set_energy(&flipped, spec.n, &t.coupling);
    let field = gamma.triangles.iter().flat_map(|tr| tr.lo..=tr.hi).map(|x| spec.field_cap(x)).sum();
    Ok((energy, field))
}

/// Values of the truncated `ρ` on a grid of inverse temperatures.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoScan {
    pub betas: Vec<f64>,
    pub values: Vec<f64>,
    /// Number of contours containing the origin that were summed.
    pub terms: u64,
    pub k_c: f64,
}

impl RhoScan {
    pub fn strictly_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] < w[0])
    }
}

/// `ρ_{N,n,ε}(β, α, a) = Σ_{Γ∋0} exp(-aβ(2K_c-1)H^f[Γ] + 2β Σ_{T∈Γ} Σ_{x∈T} h̃(x))`
/// over contours of mass at most `m_max`, for every `β` in one enumeration.
pub fn rho_scan(spec: &RhoParams, betas: &[f64]) -> Result<RhoScan> {
    spec.validate()?;
    let tables = RhoTables::new(spec)?;
    let k = 2.0 * spec.k_c() - 1.0;
    let nb = betas.len();
    let (sums, terms, failed, _) = fold_shapes(
        spec.m_max,
        spec.c,
        SHAPE_GUARD,
        || (vec![0.0f64; nb], 0u64, false, RhoScratch::default()),
        |(sums, terms, failed, buf), shape| {
            let r = tables.terms(shape, buf, |e, h| {
                *terms += 1;
                for (acc, &b) in sums.iter_mut().zip(betas) {
                    *acc += (-spec.a * b * k * e + 2.0 * b * h).exp();
                }
            });
            *failed |= r.is_err();
        },
        |(mut a, ta, fa, buf), (b, tb, fb, _)| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            (a, ta + tb, fa || fb, buf)
        },
    )?;
    if failed {
        return invalid("contour leaves the capped region; increase N");
    }
    Ok(RhoScan { betas: betas.to_vec(), values: sums, terms, k_c: spec.k_c() })
}

/// The truncated sum `ρ_{N,n,ε}(β, α, a)` over contours containing the origin.
pub fn rho_truncated(beta: f64, spec: &RhoParams) -> Result<f64> {
    Ok(rho_scan(spec, &[beta])?.values[0])
}
