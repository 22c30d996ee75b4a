//! Pointwise and elastic sequence distances.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::SlopeSeries;

/// A point as seen by the bilateral slope-based distance: its value plus the
/// sines of the segments on either side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsdPoint {
    pub value: f64,
    pub left_sin: Option<f64>,
    pub right_sin: Option<f64>,
}

impl BsdPoint {
    pub fn new(value: f64, left_sin: f64, right_sin: f64) -> Self {
        Self {
            value,
            left_sin: Some(left_sin),
            right_sin: Some(right_sin),
        }
    }

    /// A point with no slope information.
    pub fn bare(value: f64) -> Self {
        Self {
            value,
            left_sin: None,
            right_sin: None,
        }
    }
}

/// Minkowski distance between two scalars, `(|x - y|^b)^(1/b)`.
pub fn minkowski_point(x: f64, y: f64, b: f64) -> Result<f64> {
    if b.is_nan() || b < 1.0 {
        return Err(Error::invalid(format!("minkowski exponent must be >= 1, got {b}")));
    }
    Ok(minkowski_unchecked(x, y, b))
}

#[inline]
fn minkowski_unchecked(x: f64, y: f64, b: f64) -> f64 {
    let diff = (x - y).abs();
    if b == 1.0 {
        diff
    } else if b == 2.0 {
        (diff * diff).sqrt()
    } else {
        diff.powf(b).powf(1.0 / b)
    }
}

#[inline]
fn sin_term(a: Option<f64>, c: Option<f64>) -> f64 {
    match (a, c) {
        (Some(a), Some(c)) => (a - c).abs(),
        _ => 0.0,
    }
}

/// Bilateral slope-based distance between two points.
///
/// Sums the absolute value difference with the absolute differences of the
/// right and left segment sines. A slope term is skipped when either operand
/// lacks that side (series endpoints), which reduces to the one-sided form at
/// the boundaries.
#[inline]
pub fn bsd_point(a: &BsdPoint, c: &BsdPoint) -> f64 {
    (a.value - c.value).abs() + sin_term(a.right_sin, c.right_sin) + sin_term(a.left_sin, c.left_sin)
}

/// Result of a full DTW alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    pub cost: f64,
    /// Zero-based index pairs from `(0, 0)` to `(n - 1, m - 1)`.
    pub path: Vec<(usize, usize)>,
}

impl DtwResult {
    /// Cost divided by `n + m`.
    pub fn normalized_cost(&self) -> f64 {
        let (n, m) = self.path.last().map_or((0, 0), |&(i, j)| (i + 1, j + 1));
        self.cost / (n + m) as f64
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    Start,
    Diagonal,
    Vertical,
    Horizontal,
}

/// Pick the cheapest predecessor; ties prefer diagonal, then vertical.
#[inline]
fn best_step(diag: f64, vert: f64, horiz: f64) -> (f64, Step) {
    let mut best = (diag, Step::Diagonal);
    if vert < best.0 {
        best = (vert, Step::Vertical);
    }
    if horiz < best.0 {
        best = (horiz, Step::Horizontal);
    }
    best
}

fn check_nonempty(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("dtw needs two non-empty sequences"));
    }
    Ok(())
}

/// Symmetric DTW with a pluggable local distance.
///
/// The first cell costs `2·d`, diagonal moves cost `2·d`, and vertical or
/// horizontal moves cost `d`. There is no warping window.
pub fn dtw<T, F>(s1: &[T], s2: &[T], local: F) -> Result<DtwResult>
where
    F: Fn(&T, &T) -> f64,
{
    let (n, m) = (s1.len(), s2.len());
    check_nonempty(n, m)?;
    let mut cost = vec![0.0; n * m];
    let mut step = vec![Step::Start; n * m];
    let at = |i: usize, j: usize| i * m + j;

    cost[0] = 2.0 * local(&s1[0], &s2[0]);
    for i in 1..n {
        cost[at(i, 0)] = cost[at(i - 1, 0)] + local(&s1[i], &s2[0]);
        step[at(i, 0)] = Step::Vertical;
    }
    for j in 1..m {
        cost[at(0, j)] = cost[at(0, j - 1)] + local(&s1[0], &s2[j]);
        step[at(0, j)] = Step::Horizontal;
    }
    for i in 1..n {
        for j in 1..m {
            let d = local(&s1[i], &s2[j]);
            let (c, s) = best_step(
                cost[at(i - 1, j - 1)] + 2.0 * d,
                cost[at(i - 1, j)] + d,
                cost[at(i, j - 1)] + d,
            );
            cost[at(i, j)] = c;
            step[at(i, j)] = s;
        }
    }

    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n - 1, m - 1);
    loop {
        path.push((i, j));
        match step[at(i, j)] {
            Step::Start => break,
            Step::Diagonal => {
                i -= 1;
                j -= 1;
            }
            Step::Vertical => i -= 1,
            Step::Horizontal => j -= 1,
        }
    }
    path.reverse();
    Ok(DtwResult {
        cost: cost[at(n - 1, m - 1)],
        path,
    })
}

/// DTW cost only, in two rolling rows. Gives the same value as [`dtw`].
pub fn dtw_cost<T, F>(s1: &[T], s2: &[T], local: F) -> Result<f64>
where
    F: Fn(&T, &T) -> f64,
{
    let (n, m) = (s1.len(), s2.len());
    check_nonempty(n, m)?;
    let mut prev = vec![0.0; m];
    let mut cur = vec![0.0; m];
    prev[0] = 2.0 * local(&s1[0], &s2[0]);
    for j in 1..m {
        prev[j] = prev[j - 1] + local(&s1[0], &s2[j]);
    }
    for x in &s1[1..] {
        cur[0] = prev[0] + local(x, &s2[0]);
        for j in 1..m {
            let d = local(x, &s2[j]);
            cur[j] = best_step(prev[j - 1] + 2.0 * d, prev[j] + d, cur[j - 1] + d).0;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

/// DTW over slope-annotated series with the bilateral slope-based local
/// distance.
pub fn dtw_bsd(s1: &SlopeSeries, s2: &SlopeSeries) -> Result<DtwResult> {
    dtw(&s1.bsd_points(), &s2.bsd_points(), bsd_point)
}

/// Edit distance on real sequences: substitution is free when two samples
/// lie within `epsilon`, every other edit costs 1.
pub fn edr(s1: &[f64], s2: &[f64], epsilon: f64) -> usize {
    let m = s2.len();
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut cur = vec![0; m + 1];
    for (i, &x) in s1.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &y) in s2.iter().enumerate() {
            let sub = usize::from((x - y).abs() > epsilon);
            cur[j + 1] = (prev[j] + sub).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Length of the longest common subsequence where samples match within
/// `epsilon` and, when `delta` is set, their indices differ by at most
/// `delta`.
pub fn lcss_length(s1: &[f64], s2: &[f64], epsilon: f64, delta: Option<usize>) -> usize {
    let m = s2.len();
    let mut prev = vec![0usize; m + 1];
    let mut cur = vec![0usize; m + 1];
    for (i, &x) in s1.iter().enumerate() {
        for (j, &y) in s2.iter().enumerate() {
            let in_window = delta.is_none_or(|d| i.abs_diff(j) <= d);
            cur[j + 1] = if in_window && (x - y).abs() <= epsilon {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// `1 - LCSS / min(n, m)`, in `[0, 1]`. Two empty inputs are at distance 0.
pub fn lcss_distance(s1: &[f64], s2: &[f64], epsilon: f64, delta: Option<usize>) -> f64 {
    let shorter = s1.len().min(s2.len());
    if shorter == 0 {
        return if s1.len() == s2.len() { 0.0 } else { 1.0 };
    }
    1.0 - lcss_length(s1, s2, epsilon, delta) as f64 / shorter as f64
}

/// The sequence distances available for clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    DtwBsd,
    DtwEd,
    Edr,
    Lcss,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 4] = [Self::DtwBsd, Self::DtwEd, Self::Edr, Self::Lcss];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::DtwBsd => "dtw_bsd",
            Self::DtwEd => "dtw_ed",
            Self::Edr => "edr",
            Self::Lcss => "lcss",
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "dtw_bsd" | "bsd" => Ok(Self::DtwBsd),
            "dtw_ed" | "dtw" => Ok(Self::DtwEd),
            "edr" => Ok(Self::Edr),
            "lcss" => Ok(Self::Lcss),
            other => Err(Error::invalid(format!("unknown distance {other:?}"))),
        }
    }
}

/// A sequence distance together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceSpec {
    pub kind: DistanceKind,
    pub minkowski_b: f64,
    pub edr_epsilon: f64,
    pub lcss_epsilon: f64,
    pub lcss_delta: Option<usize>,
    /// Divide DTW costs by `n + m`.
    pub normalize_dtw: bool,
}

impl DistanceSpec {
    pub fn new(kind: DistanceKind) -> Self {
        Self {
            kind,
            minkowski_b: 2.0,
            edr_epsilon: 0.2,
            lcss_epsilon: 0.2,
            lcss_delta: None,
            normalize_dtw: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.minkowski_b.is_nan() || self.minkowski_b < 1.0 {
            return Err(Error::invalid(format!(
                "minkowski exponent must be >= 1, got {}",
                self.minkowski_b
            )));
        }
        if [self.edr_epsilon, self.lcss_epsilon].iter().any(|e| e.is_nan() || *e <= 0.0) {
            return Err(Error::invalid("EDR and LCSS epsilons must be positive"));
        }
        Ok(())
    }

    /// Distance between two reduced series. EDR and LCSS see only the value
    /// sequence.
    pub fn between(&self, a: &SlopeSeries, b: &SlopeSeries) -> f64 {
        let norm = |cost: f64| {
            if self.normalize_dtw {
                cost / (a.len() + b.len()) as f64
            } else {
                cost
            }
        };
        // SlopeSeries always holds at least two points, so DTW cannot fail
        match self.kind {
            DistanceKind::DtwBsd => norm(
                dtw_cost(&a.bsd_points(), &b.bsd_points(), bsd_point).expect("non-empty series"),
            ),
            DistanceKind::DtwEd => {
                let exp = self.minkowski_b;
                norm(
                    dtw_cost(&a.values(), &b.values(), |x, y| minkowski_unchecked(*x, *y, exp))
                        .expect("non-empty series"),
                )
            }
            DistanceKind::Edr => edr(&a.values(), &b.values(), self.edr_epsilon) as f64,
            DistanceKind::Lcss => {
                lcss_distance(&a.values(), &b.values(), self.lcss_epsilon, self.lcss_delta)
            }
        }
    }
}

impl Default for DistanceSpec {
    fn default() -> Self {
        Self::new(DistanceKind::DtwBsd)
    }
}

/// Distances between dataset members addressed by ordinal.
pub trait PairDistance: Sync {
    fn between(&self, i: usize, j: usize) -> f64;
}

impl<F> PairDistance for F
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    fn between(&self, i: usize, j: usize) -> f64 {
        self(i, j)
    }
}

/// Computes a [`DistanceSpec`] on demand between members of a dataset.
#[derive(Debug, Clone, Copy)]
pub struct DatasetDistance<'a> {
    series: &'a [SlopeSeries],
    spec: DistanceSpec,
}

impl<'a> DatasetDistance<'a> {
    pub fn new(series: &'a [SlopeSeries], spec: DistanceSpec) -> Self {
        Self { series, spec }
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

impl PairDistance for DatasetDistance<'_> {
    /// Evaluated with the lower ordinal first so that `between(i, j)` and
    /// `between(j, i)` are bit-identical.
    fn between(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.spec.between(&self.series[i], &self.series[j]),
            std::cmp::Ordering::Greater => self.spec.between(&self.series[j], &self.series[i]),
        }
    }
}
