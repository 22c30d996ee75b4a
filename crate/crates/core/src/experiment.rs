//! Repeated clustering runs over one dataset, scoring, and CSV output.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::distance::{DatasetDistance, DistanceKind, DistanceSpec};
use crate::error::{Error, Result};
use crate::pso::{self, PsoConfig};
use crate::series::{Dataset, SegmentBudget, load_ucr};
use crate::validity::{self, Partition};

/// Everything needed to reproduce an experiment.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data_path: PathBuf,
    /// Defaults to the number of distinct labels in the data.
    pub k: Option<usize>,
    pub distances: Vec<DistanceKind>,
    pub reps: usize,
    pub seed_base: u64,
    pub segment_budget: SegmentBudget,
    /// `k` and `seed` are overridden per run.
    pub pso: PsoConfig,
    /// Parameters shared by every distance; `kind` is overridden per run.
    pub distance_params: DistanceSpec,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(data_path: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_path: data_path.into(),
            k: None,
            distances: DistanceKind::ALL.to_vec(),
            reps: 10,
            seed_base: 0,
            segment_budget: SegmentBudget::default(),
            pso: PsoConfig::default(),
            distance_params: DistanceSpec::default(),
            out_dir: out_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        if self.distances.is_empty() {
            return Err(Error::invalid("at least one distance is required"));
        }
        self.distance_params.validate()
    }
}

/// Scores of one clustering run. One row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub dataset: String,
    pub distance: DistanceKind,
    pub rep: usize,
    pub seed: u64,
    pub purity: f64,
    pub csm: f64,
    pub jaccard: f64,
    pub rand: f64,
    pub fm: f64,
    pub sse: f64,
    pub combined: f64,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub result: RunResult,
    pub partition: Partition,
    pub trace: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub distance: DistanceKind,
    pub rep: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub runs: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

impl ExperimentOutput {
    pub fn results(&self) -> Vec<RunResult> {
        self.runs.iter().map(|r| r.result.clone()).collect()
    }
}

/// Load the data file, preprocess it, and run every (distance, rep) pair.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let raw = load_ucr(&cfg.data_path)?;
    let name = cfg
        .data_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let data = Dataset::from_raw(name, &raw, cfg.segment_budget)?;
    run_on_dataset(&data, cfg)
}

/// Run every (distance, rep) pair on an already preprocessed dataset.
///
/// Runs execute one after another so each wall-clock measurement sees the
/// whole thread pool; the swarm itself is evaluated in parallel. A failing
/// run is recorded in `failures` and the rest continue.
pub fn run_on_dataset(data: &Dataset, cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let truth = data
        .truth()
        .ok_or_else(|| Error::EmptyInput(format!("dataset {} has unlabelled series", data.name)))?;
    let k = match cfg.k.or(data.k_hint) {
        Some(k) if k >= 2 => k,
        Some(k) => return Err(Error::invalid(format!("k must be at least 2, got {k}"))),
        None => return Err(Error::invalid("k not given and data has no labels")),
    };
    let mut out = ExperimentOutput::default();
    for &kind in &cfg.distances {
        let spec = DistanceSpec { kind, ..cfg.distance_params };
        for rep in 0..cfg.reps {
            let seed = cfg.seed_base + rep as u64;
            let pso_cfg = PsoConfig { k, seed, ..cfg.pso.clone() };
            match run_once(data, &truth, spec, &pso_cfg, rep) {
                Ok(record) => out.runs.push(record),
                Err(e) => {
                    tracing::error!(distance = %kind, rep, error = %e, "run failed");
                    out.failures.push(RunFailure {
                        distance: kind,
                        rep,
                        message: e.to_string(),
                    });
                }
            }
        }
    }
    Ok(out)
}

fn run_once(
    data: &Dataset,
    truth: &[i64],
    spec: DistanceSpec,
    cfg: &PsoConfig,
    rep: usize,
) -> Result<RunRecord> {
    let started = Instant::now();
    let outcome = pso::run(data, spec, cfg)?;
    let runtime_seconds = started.elapsed().as_secs_f64();

    let p = &outcome.partition;
    let dist = DatasetDistance::new(&data.series, spec);
    let pc = validity::pair_counts(truth, p.assignment())?;
    let result = RunResult {
        dataset: data.name.clone(),
        distance: spec.kind,
        rep,
        seed: cfg.seed,
        purity: validity::purity(truth, p.assignment())?,
        csm: validity::csm(truth, p.assignment())?,
        jaccard: validity::jaccard(&pc),
        rand: validity::rand_index(&pc)?,
        fm: validity::folkes_mallow(&pc)?,
        sse: validity::sse(p, &dist),
        combined: validity::combined(p, &dist, cfg.w1, cfg.w2)?,
        runtime_seconds,
    };
    tracing::info!(
        distance = %spec.kind,
        rep,
        purity = result.purity,
        combined = result.combined,
        secs = runtime_seconds,
        "run finished"
    );
    Ok(RunRecord {
        result,
        partition: outcome.partition,
        trace: outcome.trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Purity,
    Csm,
    Jaccard,
    Rand,
    Fm,
    Sse,
    Combined,
    RuntimeSeconds,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Self::Purity,
        Self::Csm,
        Self::Jaccard,
        Self::Rand,
        Self::Fm,
        Self::Sse,
        Self::Combined,
        Self::RuntimeSeconds,
    ];

    pub fn of(&self, r: &RunResult) -> f64 {
        match self {
            Self::Purity => r.purity,
            Self::Csm => r.csm,
            Self::Jaccard => r.jaccard,
            Self::Rand => r.rand,
            Self::Fm => r.fm,
            Self::Sse => r.sse,
            Self::Combined => r.combined,
            Self::RuntimeSeconds => r.runtime_seconds,
        }
    }

    pub fn higher_is_better(&self) -> bool {
        !matches!(self, Self::Sse | Self::Combined | Self::RuntimeSeconds)
    }
}

/// Mean and sample standard deviation of one metric for one distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub distance: DistanceKind,
    pub reps: usize,
    pub metric: Metric,
    pub mean: f64,
    pub std: f64,
    /// Best mean for this metric among the distances run on the dataset.
    pub best: bool,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregate runs per (dataset, distance) and flag the best distance for
/// each metric.
pub fn summarize(results: &[RunResult]) -> Result<Vec<SummaryRow>> {
    if results.is_empty() {
        return Err(Error::EmptyInput("no results to summarize".into()));
    }
    let mut groups: Vec<(String, DistanceKind)> = Vec::new();
    for r in results {
        let key = (r.dataset.clone(), r.distance);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    let mut rows = Vec::new();
    for (dataset, distance) in &groups {
        let members: Vec<&RunResult> = results
            .iter()
            .filter(|r| &r.dataset == dataset && r.distance == *distance)
            .collect();
        if members.len() == 1 {
            tracing::warn!(%dataset, %distance, "single repetition, standard deviation reported as 0");
        }
        for metric in Metric::ALL {
            let xs: Vec<f64> = members.iter().map(|r| metric.of(r)).collect();
            let (mean, std) = mean_std(&xs);
            rows.push(SummaryRow {
                dataset: dataset.clone(),
                distance: *distance,
                reps: members.len(),
                metric,
                mean,
                std,
                best: false,
            });
        }
    }
    let datasets: BTreeSet<String> = groups.iter().map(|g| g.0.clone()).collect();
    for dataset in &datasets {
        for metric in Metric::ALL {
            let pick = |a: f64, b: f64| if metric.higher_is_better() { a.max(b) } else { a.min(b) };
            let best = rows
                .iter()
                .filter(|r| &r.dataset == dataset && r.metric == metric)
                .map(|r| r.mean)
                .reduce(pick)
                .expect("every dataset has rows");
            for r in rows
                .iter_mut()
                .filter(|r| &r.dataset == dataset && r.metric == metric)
            {
                r.best = r.mean == best;
            }
        }
    }
    Ok(rows)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn trace_file_name(dataset: &str, distance: DistanceKind, rep: usize) -> String {
    format!("trace_{}_{}_{}.csv", sanitize(dataset), distance, rep)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct TraceRow {
    iteration: usize,
    global_best_fitness: f64,
}

#[derive(Serialize)]
struct SseBar<'a> {
    dataset: &'a str,
    distance: DistanceKind,
    mean_sse: f64,
}

/// Write `results.csv`, `summary.csv`, `sse_bars.csv`, and one trace file
/// per run into `out_dir`. Returns the written paths.
pub fn emit_outputs(
    out_dir: &Path,
    runs: &[RunRecord],
    summaries: &[SummaryRow],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut runs: Vec<&RunRecord> = runs.iter().collect();
    runs.sort_by(|a, b| {
        (&a.result.dataset, a.result.distance, a.result.rep)
            .cmp(&(&b.result.dataset, b.result.distance, b.result.rep))
    });
    let mut written = Vec::new();

    let path = out_dir.join("results.csv");
    write_rows(&path, runs.iter().map(|r| &r.result))?;
    written.push(path);

    let path = out_dir.join("summary.csv");
    if summaries.is_empty() {
        // headers only
        fs::write(&path, "dataset,distance,reps,metric,mean,std,best\n").map_err(|e| Error::io(&path, e))?;
    } else {
        write_rows(&path, summaries)?;
    }
    written.push(path);

    let path = out_dir.join("sse_bars.csv");
    let bars: Vec<SseBar<'_>> = summaries
        .iter()
        .filter(|s| s.metric == Metric::Sse)
        .map(|s| SseBar {
            dataset: &s.dataset,
            distance: s.distance,
            mean_sse: s.mean,
        })
        .collect();
    if bars.is_empty() {
        fs::write(&path, "dataset,distance,mean_sse\n").map_err(|e| Error::io(&path, e))?;
    } else {
        write_rows(&path, bars)?;
    }
    written.push(path);

    for run in runs {
        let r = &run.result;
        let path = out_dir.join(trace_file_name(&r.dataset, r.distance, r.rep));
        write_rows(
            &path,
            run.trace.iter().map(|&(iteration, global_best_fitness)| TraceRow {
                iteration,
                global_best_fitness,
            }),
        )?;
        written.push(path);
    }
    Ok(written)
}

/// Read a `results.csv` written by [`emit_outputs`].
pub fn load_results(path: &Path) -> Result<Vec<RunResult>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<RunResult>, _>>()
        .map_err(csv_err)
}
