//! External and internal cluster validity measures.
//!
//! External indices compare a clustering with ground-truth class labels;
//! cluster ids and labels are arbitrary, only co-membership matters. Internal
//! measures take any [`PairDistance`] over dataset ordinals.

use std::collections::{BTreeMap, BTreeSet};

use crate::distance::PairDistance;
use crate::error::{Error, Result};

/// An assignment of every series to one of `k` clusters, each with a medoid.
///
/// Cluster ids are zero-based. Every cluster is non-empty and each medoid
/// belongs to its own cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    medoids: Vec<usize>,
}

impl Partition {
    pub fn new(assignment: Vec<usize>, medoids: Vec<usize>) -> Result<Self> {
        let k = medoids.len();
        if k == 0 {
            return Err(Error::InvalidPartition("no clusters".into()));
        }
        let mut seen = BTreeSet::new();
        for (cluster, &m) in medoids.iter().enumerate() {
            if m >= assignment.len() {
                return Err(Error::InvalidPartition(format!(
                    "medoid {m} out of range for {} series",
                    assignment.len()
                )));
            }
            if !seen.insert(m) {
                return Err(Error::InvalidPartition(format!("medoid {m} repeated")));
            }
            if assignment[m] != cluster {
                return Err(Error::InvalidPartition(format!(
                    "medoid {m} of cluster {cluster} is assigned to cluster {}",
                    assignment[m]
                )));
            }
        }
        let mut sizes = vec![0usize; k];
        for &c in &assignment {
            *sizes.get_mut(c).ok_or_else(|| {
                Error::InvalidPartition(format!("cluster id {c} out of range for k = {k}"))
            })? += 1;
        }
        // every medoid sits in its own cluster, so no cluster can be empty
        debug_assert!(sizes.iter().all(|&n| n > 0));
        Ok(Self { assignment, medoids })
    }

    pub fn k(&self) -> usize {
        self.medoids.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn medoids(&self) -> &[usize] {
        &self.medoids
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Ordinals of the members of each cluster, in ascending order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, &c) in self.assignment.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

/// Pair agreement counts between ground truth and a clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    /// Same class, same cluster.
    pub a: u64,
    /// Same class, different clusters.
    pub b: u64,
    /// Different classes, same cluster.
    pub c: u64,
    /// Different classes, different clusters.
    pub d: u64,
}

impl PairCounts {
    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }
}

fn check_parallel(truth: &[i64], predicted: &[usize]) -> Result<()> {
    if truth.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "{} labels for {} assignments",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::EmptyInput("no items to score".into()));
    }
    Ok(())
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Contingency table `(class, cluster) -> count`.
fn contingency(truth: &[i64], predicted: &[usize]) -> BTreeMap<(i64, usize), u64> {
    let mut table = BTreeMap::new();
    for (&g, &c) in truth.iter().zip(predicted) {
        *table.entry((g, c)).or_insert(0) += 1;
    }
    table
}

/// Count pairs by class and cluster co-membership, from the contingency
/// table rather than by visiting every pair.
pub fn pair_counts(truth: &[i64], predicted: &[usize]) -> Result<PairCounts> {
    check_parallel(truth, predicted)?;
    let table = contingency(truth, predicted);
    let mut class_sizes: BTreeMap<i64, u64> = BTreeMap::new();
    let mut cluster_sizes: BTreeMap<usize, u64> = BTreeMap::new();
    let mut a = 0;
    for (&(g, c), &n) in &table {
        a += pairs(n);
        *class_sizes.entry(g).or_insert(0) += n;
        *cluster_sizes.entry(c).or_insert(0) += n;
    }
    let same_class: u64 = class_sizes.values().map(|&n| pairs(n)).sum();
    let same_cluster: u64 = cluster_sizes.values().map(|&n| pairs(n)).sum();
    let total = pairs(truth.len() as u64);
    let (b, c) = (same_class - a, same_cluster - a);
    Ok(PairCounts {
        a,
        b,
        c,
        d: total - a - b - c,
    })
}

pub fn rand_index(pc: &PairCounts) -> Result<f64> {
    let total = pc.total();
    if total == 0 {
        return Err(Error::Undefined("rand index needs at least two items".into()));
    }
    Ok((pc.a + pc.d) as f64 / total as f64)
}

/// `a / (a + b + c)`; 1 when there are no co-clustered or co-labelled pairs.
pub fn jaccard(pc: &PairCounts) -> f64 {
    let denom = pc.a + pc.b + pc.c;
    if denom == 0 {
        tracing::debug!("jaccard with a + b + c = 0, returning 1");
        return 1.0;
    }
    pc.a as f64 / denom as f64
}

/// Fowlkes–Mallows index.
pub fn folkes_mallow(pc: &PairCounts) -> Result<f64> {
    if pc.a + pc.b == 0 {
        return Err(Error::Undefined(
            "Folkes-Mallow precision term a/(a+b) has a zero denominator".into(),
        ));
    }
    if pc.a + pc.c == 0 {
        return Err(Error::Undefined(
            "Folkes-Mallow recall term a/(a+c) has a zero denominator".into(),
        ));
    }
    let a = pc.a as f64;
    Ok((a / (pc.a + pc.b) as f64 * (a / (pc.a + pc.c) as f64)).sqrt())
}

/// Fraction of items carrying their cluster's majority class.
pub fn purity(truth: &[i64], predicted: &[usize]) -> Result<f64> {
    check_parallel(truth, predicted)?;
    let mut majority: BTreeMap<usize, u64> = BTreeMap::new();
    for (&(_, c), &n) in &contingency(truth, predicted) {
        let best = majority.entry(c).or_insert(0);
        *best = (*best).max(n);
    }
    Ok(majority.values().sum::<u64>() as f64 / truth.len() as f64)
}

/// Cluster similarity measure: the mean over classes of the best Dice
/// overlap with any cluster.
///
/// The mean is taken over the number of distinct classes. A warning is
/// logged when that differs from the number of clusters.
pub fn csm(truth: &[i64], predicted: &[usize]) -> Result<f64> {
    check_parallel(truth, predicted)?;
    let table = contingency(truth, predicted);
    let mut class_sizes: BTreeMap<i64, u64> = BTreeMap::new();
    let mut cluster_sizes: BTreeMap<usize, u64> = BTreeMap::new();
    for (&(g, c), &n) in &table {
        *class_sizes.entry(g).or_insert(0) += n;
        *cluster_sizes.entry(c).or_insert(0) += n;
    }
    if class_sizes.len() != cluster_sizes.len() {
        tracing::warn!(
            classes = class_sizes.len(),
            clusters = cluster_sizes.len(),
            "CSM computed with differing class and cluster counts"
        );
    }
    let mut best: BTreeMap<i64, f64> = BTreeMap::new();
    for (&(g, c), &n) in &table {
        let sim = 2.0 * n as f64 / (class_sizes[&g] + cluster_sizes[&c]) as f64;
        let slot = best.entry(g).or_insert(0.0);
        *slot = slot.max(sim);
    }
    Ok(best.values().sum::<f64>() / class_sizes.len() as f64)
}

/// Mean over clusters of the mean distance from each member to its medoid.
pub fn compactness(p: &Partition, dist: &impl PairDistance) -> f64 {
    let total: f64 = p
        .clusters()
        .iter()
        .zip(p.medoids())
        .map(|(members, &m)| {
            members.iter().map(|&j| dist.between(m, j)).sum::<f64>() / members.len() as f64
        })
        .sum();
    total / p.k() as f64
}

/// Sum of medoid-to-medoid distances over unordered pairs, divided by
/// `K(K - 1)`.
pub fn separation(p: &Partition, dist: &impl PairDistance) -> Result<f64> {
    let k = p.k();
    if k < 2 {
        return Err(Error::Undefined(format!("separation needs K >= 2, got {k}")));
    }
    let m = p.medoids();
    let mut total = 0.0;
    for j in 0..k {
        for l in j + 1..k {
            total += dist.between(m[j], m[l]);
        }
    }
    Ok(total / (k * (k - 1)) as f64)
}

pub(crate) fn check_weights(w1: f64, w2: f64) -> Result<()> {
    let in_unit = |w: f64| (0.0..=1.0).contains(&w);
    if !in_unit(w1) || !in_unit(w2) || (w1 + w2 - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "weights must lie in [0, 1] and sum to 1, got {w1} and {w2}"
        )));
    }
    Ok(())
}

/// `w1·compactness − w2·separation`. Lower is better.
pub fn combined(p: &Partition, dist: &impl PairDistance, w1: f64, w2: f64) -> Result<f64> {
    check_weights(w1, w2)?;
    Ok(w1 * compactness(p, dist) - w2 * separation(p, dist)?)
}

fn nearest_medoid_distance(i: usize, medoids: &[usize], dist: &impl PairDistance) -> f64 {
    medoids
        .iter()
        .map(|&m| dist.between(i, m))
        .fold(f64::INFINITY, f64::min)
}

/// Sum over every series of its squared distance to the nearest medoid.
pub fn sse(p: &Partition, dist: &impl PairDistance) -> f64 {
    (0..p.len())
        .map(|i| nearest_medoid_distance(i, p.medoids(), dist).powi(2))
        .sum()
}

/// Like [`sse`] but without squaring.
pub fn sse_unsquared(p: &Partition, dist: &impl PairDistance) -> f64 {
    (0..p.len())
        .map(|i| nearest_medoid_distance(i, p.medoids(), dist))
        .sum()
}
