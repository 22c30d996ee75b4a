//! Raw and slope-annotated time-series, preprocessing, and the UCR loader.
//!
//! The pipeline is `standardize` → `segment_extrema` → `annotate_slopes`:
//! values are mapped into `[-1, 1]`, reduced to a shape-preserving subset of
//! points, and every retained segment is annotated with the sine of its angle
//! against the time axis.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distance::BsdPoint;
use crate::error::{Error, Result};

/// A univariate series of sampled values.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    values: Vec<f64>,
    label: Option<i64>,
    id: usize,
}

impl RawSeries {
    /// Build a series, rejecting fewer than two samples or non-finite values.
    pub fn new(values: Vec<f64>, label: Option<i64>, id: usize) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!(
                "series {id} has {} values, at least 2 are required",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "series {id} has a non-finite value at position {pos}"
            )));
        }
        Ok(Self { values, label, id })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> Option<i64> {
        self.label
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One retained point of a reduced series.
///
/// `left_sin` is the sine of the angle of the segment ending here and
/// `right_sin` the one starting here; the first point has no left segment and
/// the last has no right segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopePoint {
    pub value: f64,
    pub time_index: usize,
    pub left_sin: Option<f64>,
    pub right_sin: Option<f64>,
}

impl SlopePoint {
    pub fn to_bsd(&self) -> BsdPoint {
        BsdPoint {
            value: self.value,
            left_sin: self.left_sin,
            right_sin: self.right_sin,
        }
    }
}

/// A reduced, slope-annotated series.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeSeries {
    points: Vec<SlopePoint>,
    source_id: usize,
}

impl SlopeSeries {
    pub fn points(&self) -> &[SlopePoint] {
        &self.points
    }

    pub fn source_id(&self) -> usize {
        self.source_id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The reduced value sequence with slopes dropped.
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn bsd_points(&self) -> Vec<BsdPoint> {
        self.points.iter().map(SlopePoint::to_bsd).collect()
    }
}

/// How many points segmentation may keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SegmentBudget {
    /// A fixed number of points.
    Points(usize),
    /// A fraction of the raw length, clamped to
    /// [`SegmentBudget::MIN_POINTS`, `SegmentBudget::MAX_POINTS`].
    Fraction(f64),
}

impl SegmentBudget {
    pub const MIN_POINTS: usize = 5;
    pub const MAX_POINTS: usize = 256;

    pub fn resolve(&self, raw_len: usize) -> Result<usize> {
        match *self {
            Self::Points(n) if n >= 2 => Ok(n),
            Self::Points(n) => Err(Error::invalid(format!(
                "segment budget must be at least 2, got {n}"
            ))),
            Self::Fraction(f) if f > 0.0 && f <= 1.0 => {
                let n = (f * raw_len as f64).round() as usize;
                Ok(n.clamp(Self::MIN_POINTS, Self::MAX_POINTS))
            }
            Self::Fraction(f) => Err(Error::invalid(format!(
                "segment budget fraction must lie in (0, 1], got {f}"
            ))),
        }
    }
}

impl Default for SegmentBudget {
    fn default() -> Self {
        Self::Fraction(0.2)
    }
}

impl std::str::FromStr for SegmentBudget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(n) = s.parse::<usize>() {
            return Ok(Self::Points(n));
        }
        match s.parse::<f64>() {
            Ok(f) if f > 0.0 && f <= 1.0 => Ok(Self::Fraction(f)),
            _ => Err(Error::invalid(format!(
                "segment budget must be an integer or a fraction in (0, 1], got {s:?}"
            ))),
        }
    }
}

/// A preprocessed collection of series ready for clustering.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub series: Vec<SlopeSeries>,
    pub labels: Vec<Option<i64>>,
    pub name: String,
    pub k_hint: Option<usize>,
}

impl Dataset {
    /// Standardize, segment, and annotate every raw series.
    pub fn from_raw(name: impl Into<String>, raw: &[RawSeries], budget: SegmentBudget) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyInput("dataset has no series".into()));
        }
        let series = raw
            .iter()
            .map(|s| {
                let std = standardize(s);
                let reduced = segment_extrema(&std, budget.resolve(s.len())?)?;
                annotate_slopes(&reduced, s.id())
            })
            .collect::<Result<Vec<_>>>()?;
        let labels: Vec<_> = raw.iter().map(RawSeries::label).collect();
        let distinct: BTreeSet<i64> = labels.iter().flatten().copied().collect();
        Ok(Self {
            series,
            labels,
            name: name.into(),
            k_hint: (!distinct.is_empty()).then_some(distinct.len()),
        })
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    /// Ground-truth labels, or `None` if any series is unlabeled.
    pub fn truth(&self) -> Option<Vec<i64>> {
        self.labels.iter().copied().collect()
    }
}

/// Affinely map values onto `[-1, 1]`.
///
/// A constant series maps to all zeros and logs a warning.
pub fn standardize(series: &RawSeries) -> RawSeries {
    let (min, max) = series
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let values = if max > min {
        let span = max - min;
        series
            .values
            .iter()
            .map(|&v| (2.0 * (v - min) / span - 1.0).clamp(-1.0, 1.0))
            .collect()
    } else {
        tracing::warn!(id = series.id, "constant series standardized to zeros");
        vec![0.0; series.values.len()]
    };
    RawSeries {
        values,
        label: series.label,
        id: series.id,
    }
}

fn is_strict_extremum(v: &[f64], i: usize) -> bool {
    let (prev, cur, next) = (v[i - 1], v[i], v[i + 1]);
    (cur > prev && cur > next) || (cur < prev && cur < next)
}

/// Vertical distance from `(i, v[i])` to the chord joining `l` and `r`.
fn chord_deviation(v: &[f64], l: usize, i: usize, r: usize) -> f64 {
    let t = (i - l) as f64 / (r - l) as f64;
    (v[i] - (v[l] + t * (v[r] - v[l]))).abs()
}

/// Reduce a series to its endpoints plus at most `budget - 2` strict local
/// extrema. A budget at least as large as the series keeps every point.
///
/// When there are more extrema than room, they are inserted greedily: each
/// round adds the remaining extremum that deviates most from the chord
/// between its nearest already-retained neighbours. Ties go to the earlier
/// time index.
pub fn segment_extrema(series: &RawSeries, budget: usize) -> Result<Vec<(usize, f64)>> {
    if budget < 2 {
        return Err(Error::invalid(format!(
            "segment budget must be at least 2, got {budget}"
        )));
    }
    let v = series.values();
    let n = v.len();
    if budget >= n {
        return Ok(v.iter().copied().enumerate().collect());
    }
    let candidates: Vec<usize> = (1..n - 1).filter(|&i| is_strict_extremum(v, i)).collect();

    let kept: Vec<usize> = if candidates.len() + 2 <= budget {
        let mut all = Vec::with_capacity(candidates.len() + 2);
        all.push(0);
        all.extend(&candidates);
        all.push(n - 1);
        all
    } else {
        let mut retained = BTreeSet::from([0, n - 1]);
        let mut remaining = candidates;
        while retained.len() < budget {
            let (slot, _) = remaining
                .iter()
                .enumerate()
                .map(|(slot, &c)| {
                    let l = *retained.range(..c).next_back().expect("endpoint 0 retained");
                    let r = *retained.range(c..).next().expect("last endpoint retained");
                    (slot, chord_deviation(v, l, c, r))
                })
                .fold((usize::MAX, f64::NEG_INFINITY), |best, cur| {
                    if cur.1 > best.1 { cur } else { best }
                });
            retained.insert(remaining.remove(slot));
        }
        retained.into_iter().collect()
    };
    Ok(kept.into_iter().map(|i| (i, v[i])).collect())
}

/// Sine of the angle a segment makes with the time axis, with the run
/// measured in original time steps.
pub fn segment_sin(from: (usize, f64), to: (usize, f64)) -> f64 {
    let rise = to.1 - from.1;
    let run = (to.0 - from.0) as f64;
    (rise / run).atan().sin()
}

/// Attach left/right segment slopes to a reduced point sequence.
pub fn annotate_slopes(reduced: &[(usize, f64)], source_id: usize) -> Result<SlopeSeries> {
    if reduced.len() < 2 {
        return Err(Error::invalid(format!(
            "a reduced series needs at least 2 points, got {}",
            reduced.len()
        )));
    }
    if let Some(w) = reduced.windows(2).find(|w| w[1].0 <= w[0].0) {
        return Err(Error::invalid(format!(
            "time indices must be strictly increasing, found {} then {}",
            w[0].0, w[1].0
        )));
    }
    let sins: Vec<f64> = reduced.windows(2).map(|w| segment_sin(w[0], w[1])).collect();
    let last = reduced.len() - 1;
    let points = reduced
        .iter()
        .enumerate()
        .map(|(i, &(time_index, value))| SlopePoint {
            value,
            time_index,
            left_sin: (i > 0).then(|| sins[i - 1]),
            right_sin: (i < last).then(|| sins[i]),
        })
        .collect();
    Ok(SlopeSeries { points, source_id })
}

/// Read a UCR-format file: one series per non-empty line, class label first.
pub fn load_ucr(path: impl AsRef<Path>) -> Result<Vec<RawSeries>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ucr(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parse UCR-format text. The delimiter (tab or comma) is taken from the
/// first non-empty line.
pub fn parse_ucr<R: BufRead>(reader: R) -> Result<Vec<RawSeries>> {
    let mut delimiter = None;
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let delim = *delimiter.get_or_insert(if line.contains('\t') { '\t' } else { ',' });
        let mut fields: Vec<&str> = line.split(delim).collect();
        if fields.len() > 1 && fields.last().is_some_and(|f| f.trim().is_empty()) {
            fields.pop();
        }
        let parse = |col: usize, field: &str| -> Result<f64> {
            let trimmed = field.trim();
            match trimmed.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(Error::Parse {
                    line: line_no,
                    column: col,
                    message: format!("non-numeric field {trimmed:?}"),
                }),
            }
        };
        let label = parse(1, fields[0])?;
        if label.fract() != 0.0 {
            return Err(Error::Parse {
                line: line_no,
                column: 1,
                message: format!("class label {label} is not an integer"),
            });
        }
        let values = fields[1..]
            .iter()
            .enumerate()
            .map(|(i, f)| parse(i + 2, f))
            .collect::<Result<Vec<_>>>()?;
        let id = out.len();
        let series = RawSeries::new(values, Some(label as i64), id).map_err(|e| Error::Parse {
            line: line_no,
            column: 2,
            message: e.to_string(),
        })?;
        out.push(series);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput("no series found".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn raw(values: &[f64]) -> RawSeries {
        RawSeries::new(values.to_vec(), None, 0).unwrap()
    }

    #[test]
    fn raw_series_rejects_short_and_non_finite() {
        assert!(RawSeries::new(vec![1.0], None, 0).is_err());
        assert!(RawSeries::new(vec![1.0, f64::NAN], None, 0).is_err());
    }

    #[test]
    fn standardize_examples() {
        assert_eq!(standardize(&raw(&[0.0, 5.0, 10.0])).values(), &[-1.0, 0.0, 1.0]);
        assert_eq!(standardize(&raw(&[-1.0, 1.0])).values(), &[-1.0, 1.0]);
        assert_eq!(standardize(&raw(&[3.0, 3.0, 3.0])).values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn standardize_keeps_label_and_len() {
        let s = RawSeries::new(vec![2.0, 4.0, 3.0], Some(7), 3).unwrap();
        let t = standardize(&s);
        assert_eq!(t.label(), Some(7));
        assert_eq!(t.id(), 3);
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn segment_keeps_everything_within_budget() {
        let s = raw(&[0.0, 1.0, 0.0, -1.0, 0.0]);
        let out = segment_extrema(&s, 5).unwrap();
        assert_eq!(out, vec![(0, 0.0), (1, 1.0), (2, 0.0), (3, -1.0), (4, 0.0)]);
    }

    #[test]
    fn segment_budget_two_keeps_endpoints() {
        let s = raw(&[-1.0, 1.0, -1.0]);
        assert_eq!(segment_extrema(&s, 2).unwrap(), vec![(0, -1.0), (2, -1.0)]);
    }

    #[test]
    fn segment_rejects_tiny_budget() {
        assert!(matches!(
            segment_extrema(&raw(&[0.0, 1.0]), 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn segment_ignores_plateaus() {
        // 1,1 plateau is not a strict extremum
        let s = raw(&[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(segment_extrema(&s, 3).unwrap(), vec![(0, 0.0), (3, 0.0)]);
    }

    /// Sum of each interior point's deviation from the chord joining its
    /// neighbours in `kept` (sorted, endpoints included).
    fn summed_deviation(v: &[f64], kept: &[usize]) -> f64 {
        kept.windows(3).map(|w| chord_deviation(v, w[0], w[1], w[2])).sum()
    }

    #[test]
    fn segment_noisy_triangle_matches_brute_force() {
        // triangle wave with period 24, amplitude 1, plus a small
        // deterministic zig-zag that creates many minor extrema
        let n = 50;
        let v: Vec<f64> = (0..n)
            .map(|t| {
                let phase = (t % 24) as f64 / 24.0;
                let tri = if phase < 0.5 { 4.0 * phase - 1.0 } else { 3.0 - 4.0 * phase };
                let noise = if t % 3 == 0 { 0.04 } else { -0.03 } * (1.0 + (t % 5) as f64 * 0.1);
                tri + noise
            })
            .collect();
        let s = raw(&v);
        let got = segment_extrema(&s, 5).unwrap();
        assert_eq!(got.len(), 5);
        let got_idx: Vec<usize> = got.iter().map(|p| p.0).collect();

        let cands: Vec<usize> = (1..n - 1).filter(|&i| is_strict_extremum(&v, i)).collect();
        assert!(cands.len() > 3);
        let mut best = (f64::NEG_INFINITY, vec![]);
        for a in 0..cands.len() {
            for b in a + 1..cands.len() {
                for c in b + 1..cands.len() {
                    let kept = vec![0, cands[a], cands[b], cands[c], n - 1];
                    let score = summed_deviation(&v, &kept);
                    if score > best.0 {
                        best = (score, kept);
                    }
                }
            }
        }
        assert_eq!(got_idx, best.1);
    }

    #[test]
    fn annotate_unit_and_flat_slopes() {
        let s = annotate_slopes(&[(0, 0.0), (2, 2.0)], 0).unwrap();
        assert_abs_diff_eq!(s.points()[0].right_sin.unwrap(), 2f64.sqrt() / 2.0, epsilon = 1e-15);
        let s = annotate_slopes(&[(0, 0.0), (4, 0.0)], 0).unwrap();
        assert_eq!(s.points()[0].right_sin, Some(0.0));
        assert_eq!(s.points()[1].left_sin, Some(0.0));
    }

    #[test]
    fn annotate_three_points() {
        let s = annotate_slopes(&[(0, -1.0), (1, 1.0), (3, 0.0)], 0).unwrap();
        let p = s.points();
        // sin(atan 2) = 2/sqrt(5), sin(atan(-1/2)) = -1/sqrt(5)
        assert_abs_diff_eq!(p[1].left_sin.unwrap(), 0.894_427_190_999_915_9, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1].right_sin.unwrap(), -0.447_213_595_499_957_9, epsilon = 1e-15);
        assert_eq!(p[0].left_sin, None);
        assert_eq!(p[2].right_sin, None);
    }

    #[test]
    fn annotate_rejects_bad_indices() {
        assert!(annotate_slopes(&[(0, 0.0), (0, 1.0)], 0).is_err());
        assert!(annotate_slopes(&[(3, 0.0), (1, 1.0)], 0).is_err());
        assert!(annotate_slopes(&[(3, 0.0)], 0).is_err());
    }

    #[test]
    fn parse_comma_and_tab() {
        let out = parse_ucr("2,0.1,0.2,0.3\n".as_bytes()).unwrap();
        assert_eq!(out[0].label(), Some(2));
        assert_eq!(out[0].values(), &[0.1, 0.2, 0.3]);
        let out = parse_ucr("1\t-0.5\t0.5\r\n\n".as_bytes()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].label(), Some(1));
        assert_eq!(out[0].values(), &[-0.5, 0.5]);
    }

    #[test]
    fn parse_scientific_labels_and_values() {
        let out = parse_ucr("1.0000000e+00,1e-3,-2.5E2\n-1,0,1\n".as_bytes()).unwrap();
        assert_eq!(out[0].label(), Some(1));
        assert_eq!(out[0].values(), &[1e-3, -250.0]);
        assert_eq!(out[1].label(), Some(-1));
        assert_eq!(out[1].id(), 1);
    }

    #[test]
    fn parse_errors_name_line_and_column() {
        let err = parse_ucr("1,0.1,0.2\n2,0.3,abc\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_ucr("".as_bytes()), Err(Error::EmptyInput(_))));
        assert!(matches!(parse_ucr("\n\n".as_bytes()), Err(Error::EmptyInput(_))));
        assert!(matches!(parse_ucr("1.5,0,1\n".as_bytes()), Err(Error::Parse { column: 1, .. })));
    }

    #[test]
    fn budget_resolution() {
        assert_eq!(SegmentBudget::default().resolve(1000).unwrap(), 200);
        assert_eq!(SegmentBudget::default().resolve(10).unwrap(), 5);
        assert_eq!(SegmentBudget::default().resolve(5000).unwrap(), 256);
        assert_eq!(SegmentBudget::Points(12).resolve(5000).unwrap(), 12);
        assert!(SegmentBudget::Points(1).resolve(10).is_err());
        assert_eq!("20".parse::<SegmentBudget>().unwrap(), SegmentBudget::Points(20));
        assert_eq!("0.1".parse::<SegmentBudget>().unwrap(), SegmentBudget::Fraction(0.1));
        assert!("1.5".parse::<SegmentBudget>().is_err());
    }

    #[test]
    fn dataset_from_raw_counts_classes() {
        let raws = vec![
            RawSeries::new(vec![0.0, 1.0, 0.0, 2.0], Some(1), 0).unwrap(),
            RawSeries::new(vec![3.0, 1.0, 0.0, 2.0], Some(2), 1).unwrap(),
        ];
        let ds = Dataset::from_raw("toy", &raws, SegmentBudget::Points(3)).unwrap();
        assert_eq!(ds.k_hint, Some(2));
        assert_eq!(ds.truth(), Some(vec![1, 2]));
        assert!(ds.series.iter().all(|s| s.len() <= 3));
    }

    fn check_slope_invariants(s: &SlopeSeries) {
        let p = s.points();
        assert!(p.len() >= 2);
        assert!(p[0].left_sin.is_none());
        assert!(p[p.len() - 1].right_sin.is_none());
        for w in p.windows(2) {
            assert!(w[0].time_index < w[1].time_index);
            assert_eq!(w[0].right_sin, w[1].left_sin);
            let sin = w[0].right_sin.unwrap();
            assert!(sin.abs() < 1.0);
            assert_eq!(sin == 0.0, w[0].value == w[1].value);
            let expected = ((w[1].value - w[0].value) / (w[1].time_index - w[0].time_index) as f64)
                .atan()
                .sin();
            assert_eq!(sin, expected);
        }
    }

    proptest! {
        #[test]
        fn annotate_satisfies_invariants(
            steps in prop::collection::vec((1usize..20, -1.0f64..=1.0), 2..40)
        ) {
            let mut t = 0;
            let reduced: Vec<(usize, f64)> = steps
                .iter()
                .map(|&(dt, v)| { t += dt; (t, v) })
                .collect();
            let s = annotate_slopes(&reduced, 0).unwrap();
            check_slope_invariants(&s);
        }

        #[test]
        fn standardize_is_idempotent(values in prop::collection::vec(-1e6f64..1e6, 2..64)) {
            let s = raw(&values);
            let once = standardize(&s);
            let twice = standardize(&once);
            let nonconstant = values.iter().any(|&v| v != values[0]);
            for (a, b) in once.values().iter().zip(twice.values()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            if nonconstant {
                let lo = once.values().iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = once.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert_eq!((lo, hi), (-1.0, 1.0));
            }
        }

        #[test]
        fn segment_respects_budget(
            values in prop::collection::vec(-1.0f64..=1.0, 2..120),
            budget in 2usize..30,
        ) {
            let s = raw(&values);
            let out = segment_extrema(&s, budget).unwrap();
            let n = values.len();
            let cands = (1..n - 1).filter(|&i| is_strict_extremum(&values, i)).count();
            let expected = if budget >= n { n } else { budget.min(cands + 2) };
            prop_assert_eq!(out.len(), expected);
            prop_assert!(out.len() <= budget);
            prop_assert_eq!(out[0].0, 0);
            prop_assert_eq!(out[out.len() - 1].0, n - 1);
            prop_assert!(out.windows(2).all(|w| w[0].0 < w[1].0));
            check_slope_invariants(&annotate_slopes(&out, 0).unwrap());
        }
    }
}
