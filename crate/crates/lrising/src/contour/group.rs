use super::{triangle_distance, Contour, Triangle};
use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;

/// Partition of a triangle configuration into contours.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSet {
    /// Triangle indices per contour; each list sorted, lists sorted by first index.
    pub contours: Vec<Vec<usize>>,
    pub c: f64,
}

impl ContourSet {
    pub fn contour(&self, triangles: &[Triangle], i: usize) -> Contour {
        Contour::new(self.contours[i].iter().map(|&k| triangles[k]).collect())
    }

    pub fn to_contours(&self, triangles: &[Triangle]) -> Vec<Contour> {
        (0..self.contours.len()).map(|i| self.contour(triangles, i)).collect()
    }

    /// Dump: one line per contour with its triangle indices.
    pub fn dump(&self) -> String {
        self.contours
            .iter()
            .map(|c| c.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone)]
struct Cluster {
    members: Vec<usize>,
    mass: usize,
    /// Disjoint sorted intervals covering `Δ`.
    base: Vec<(i64, i64)>,
}

fn union_intervals(mut v: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    v.sort_unstable();
    let mut out: Vec<(i64, i64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 + 1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn intersects(a: &[(i64, i64)], b: &[(i64, i64)]) -> bool {
    a.iter().any(|&(a0, a1)| b.iter().any(|&(b0, b1)| a0 <= b1 && b0 <= a1))
}

fn subset(a: &[(i64, i64)], b: &[(i64, i64)]) -> bool {
    a.iter().all(|&(a0, a1)| b.iter().any(|&(b0, b1)| b0 <= a0 && a1 <= b1))
}

impl Cluster {
    fn single(k: usize, t: &Triangle) -> Self {
        Cluster { members: vec![k], mass: t.mass(), base: vec![(t.lo, t.hi)] }
    }

    fn absorb(&mut self, other: Cluster) {
        self.members.extend(other.members);
        self.members.sort_unstable();
        self.mass += other.mass;
        let mut v = std::mem::take(&mut self.base);
        v.extend(other.base);
        self.base = union_intervals(v);
    }
}

/// `Δ(inner) ⊆ Δ(outer)` with every triangle of `outer` containing or missing `Δ(inner)`.
fn nested_properly(inner: &Cluster, outer: &Cluster, tris: &[Triangle]) -> bool {
    subset(&inner.base, &outer.base)
        && outer.members.iter().all(|&k| {
            let t = &tris[k];
            let tb = [(t.lo, t.hi)];
            subset(&inner.base, &tb) || !intersects(&inner.base, &tb)
        })
}

pub(crate) fn cluster_distance(a: &[usize], b: &[usize], tris: &[Triangle]) -> i64 {
    a.iter()
        .flat_map(|&i| b.iter().map(move |&j| (i, j)))
        .map(|(i, j)| triangle_distance(&tris[i], &tris[j]))
        .min()
        .unwrap_or(i64::MAX)
}

/// Whether two clusters break the separation or nesting requirement.
fn violates(a: &Cluster, b: &Cluster, tris: &[Triangle], c: f64) -> bool {
    let m = a.mass.min(b.mass) as f64;
    if cluster_distance(&a.members, &b.members, tris) as f64 <= c * m * m * m {
        return true;
    }
    if !intersects(&a.base, &b.base) {
        return false;
    }
    !(nested_properly(a, b, tris) || nested_properly(b, a, tris))
}

fn finish(clusters: Vec<Cluster>, c: f64) -> ContourSet {
    let mut contours: Vec<Vec<usize>> = clusters.into_iter().map(|cl| cl.members).collect();
    contours.sort();
    ContourSet { contours, c }
}

/// Merges clusters until no pair violates the contour conditions, choosing
/// among the violating pairs with `pick`.
pub fn group_contours_with(triangles: &[Triangle], c: f64, mut pick: impl FnMut(usize) -> usize) -> Result<ContourSet> {
    let mut clusters: Vec<Cluster> = triangles.iter().enumerate().map(|(k, t)| Cluster::single(k, t)).collect();
    let guard = triangles.len() * triangles.len() + 1;
    for _ in 0..guard {
        let mut bad = Vec::new();
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                if violates(&clusters[i], &clusters[j], triangles, c) {
                    bad.push((i, j));
                }
            }
        }
        if bad.is_empty() {
            return Ok(finish(clusters, c));
        }
        let (i, j) = bad[pick(bad.len())];
        let other = clusters.remove(j);
        clusters[i].absorb(other);
    }
    Err(Error::Internal("contour grouping did not reach a fixpoint".into()))
}

/// Groups triangles into contours, merging the first violating pair each round.
pub fn group_contours(triangles: &[Triangle], c: f64) -> Result<ContourSet> {
    group_fast(triangles, c)
}

/// Same fixpoint as [`group_contours`] with violating pairs picked at random.
pub fn group_contours_shuffled(triangles: &[Triangle], c: f64, seed: u64) -> Result<ContourSet> {
    let mut g = rng::substream(seed, 0);
    group_contours_with(triangles, c, |k| g.random_range(0..k))
}

/// Merging scan that restarts after each merge instead of listing all pairs.
fn group_fast(triangles: &[Triangle], c: f64) -> Result<ContourSet> {
    let mut clusters: Vec<Cluster> = triangles.iter().enumerate().map(|(k, t)| Cluster::single(k, t)).collect();
    let guard = triangles.len() * triangles.len() + 1;
    let mut merges = 0;
    'outer: loop {
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                if violates(&clusters[i], &clusters[j], triangles, c) {
                    let other = clusters.remove(j);
                    clusters[i].absorb(other);
                    merges += 1;
                    if merges > guard {
                        return Err(Error::Internal("contour grouping did not reach a fixpoint".into()));
                    }
                    continue 'outer;
                }
            }
        }
        return Ok(finish(clusters, c));
    }
}

/// Every pair of distinct contours satisfies separation and nesting.
pub fn contour_set_is_valid(triangles: &[Triangle], set: &ContourSet) -> bool {
    let clusters: Vec<Cluster> = set
        .contours
        .iter()
        .map(|m| {
            let mut cl = Cluster::single(m[0], &triangles[m[0]]);
            for &k in &m[1..] {
                cl.absorb(Cluster::single(k, &triangles[k]));
            }
            cl
        })
        .collect();
    (0..clusters.len())
        .all(|i| (i + 1..clusters.len()).all(|j| !violates(&clusters[i], &clusters[j], triangles, set.c)))
}

/// Whether the triangles form exactly one contour.
pub fn is_single_contour(triangles: &[Triangle], c: f64) -> Result<bool> {
    Ok(group_contours(triangles, c)?.contours.len() == 1)
}

/// Cluster summary used by enumeration pruning.
#[derive(Debug, Clone)]
pub(crate) struct ClusterInfo {
    pub members: Vec<usize>,
    pub mass: usize,
    pub base: Vec<(i64, i64)>,
    pub rightmost_root2: i64,
}

pub(crate) fn cluster_infos(triangles: &[Triangle], set: &ContourSet) -> Vec<ClusterInfo> {
    set.contours
        .iter()
        .map(|m| {
            let mass = m.iter().map(|&k| triangles[k].mass()).sum();
            let base = union_intervals(m.iter().map(|&k| (triangles[k].lo, triangles[k].hi)).collect());
            let rightmost_root2 = m.iter().flat_map(|&k| triangles[k].roots2()).max().unwrap_or(i64::MIN);
            ClusterInfo { members: m.clone(), mass, base, rightmost_root2 }
        })
        .collect()
}

pub(crate) fn bases_intersect(a: &[(i64, i64)], b: &[(i64, i64)]) -> bool {
    intersects(a, b)
}

/// Outcome of [`grouping_order_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupingOrderCheck {
    pub configs: usize,
    /// Configurations where a shuffled merge order changed the partition.
    pub mismatches: usize,
    /// Partitions violating separation or nesting.
    pub invalid: usize,
}

/// Groups `samples` random configurations (volume `N` uniform in
/// `1..=n_max`, sample `i` from substream `i`) in the default and a shuffled
/// merge order and compares the partitions.
pub fn grouping_order_check(n_max: usize, samples: usize, c: f64, seed: u64) -> Result<GroupingOrderCheck> {
    use rayon::prelude::*;
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be positive".into()));
    }
    let per = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::substream(seed, i);
            let n = g.random_range(1..=n_max);
            let spins = (0..2 * n + 1).map(|_| if g.random_bool(0.5) { 1 } else { -1 }).collect();
            let sigma = crate::lattice::SpinConfig::new(n, spins)?;
            let tris = super::triangles_from_config(&sigma);
            let a = group_contours(&tris, c)?;
            let b = group_contours_shuffled(&tris, c, seed ^ i.wrapping_mul(0x9e37_79b9_7f4a_7c15))?;
            Ok((usize::from(a != b), usize::from(!contour_set_is_valid(&tris, &a))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupingOrderCheck {
        configs: samples,
        mismatches: per.iter().map(|p| p.0).sum(),
        invalid: per.iter().map(|p| p.1).sum(),
    })
}
