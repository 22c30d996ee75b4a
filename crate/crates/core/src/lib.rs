//! Slope-aware elastic distances and PSO medoid clustering for time-series.
//!
//! Series are standardized into `[-1, 1]`, reduced to a shape-preserving set
//! of points, and annotated with the sine of each segment's angle. The
//! bilateral slope-based distance compares two such points by value and by
//! the slopes on either side; embedded in symmetric DTW it becomes a sequence
//! distance that clusters well with a particle-swarm medoid search.

pub mod distance;
pub mod error;
pub mod experiment;
pub mod pso;
pub mod series;
pub mod synthetic;
pub mod validity;

pub use distance::{
    BsdPoint, DatasetDistance, DistanceKind, DistanceSpec, DtwResult, PairDistance, bsd_point, dtw, dtw_bsd, dtw_cost, edr,
    lcss_distance, lcss_length, minkowski_point,
};
pub use error::{Error, Result};
pub use series::{
    Dataset, RawSeries, SegmentBudget, SlopePoint, SlopeSeries, annotate_slopes, load_ucr,
    parse_ucr, segment_extrema, standardize,
};
pub use validity::{
    PairCounts, Partition, combined, compactness, csm, folkes_mallow, jaccard, pair_counts,
    purity, rand_index, separation, sse, sse_unsquared,
};
pub use pso::{PsoConfig, PsoOutcome, SwarmState, decode_position};
pub use experiment::{
    ExperimentOutput, Metric, RunConfig, RunRecord, RunResult, SummaryRow, emit_outputs,
    load_results, run_experiment, run_on_dataset, summarize,
};
