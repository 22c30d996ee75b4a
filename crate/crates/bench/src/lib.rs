//! Shared fixtures for the benchmarks.

use slopewarp::synthetic::{self, Family, SyntheticConfig};
use slopewarp::{Dataset, SegmentBudget};

/// The three shape families, `per_family` series each, reduced to `budget` points.
pub fn shapes(per_family: usize, budget: usize) -> Dataset {
    let cfg = SyntheticConfig {
        families: Family::SHAPES.to_vec(),
        per_family,
        seed: 1,
        ..SyntheticConfig::default()
    };
    let raw = synthetic::generate(&cfg).expect("valid synthetic config");
    Dataset::from_raw("bench", &raw, SegmentBudget::Points(budget)).expect("synthetic data preprocesses")
}
