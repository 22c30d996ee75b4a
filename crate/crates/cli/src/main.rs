//! Command-line front end: batch clustering experiments and one-off distances.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slopewarp::{
    Dataset, DistanceKind, DistanceSpec, Error, PsoConfig, RunConfig, SegmentBudget, emit_outputs, load_ucr,
    run_experiment, summarize,
};
use tracing_subscriber::EnvFilter;

#[derive(Parser, Debug)]
#[command(name = "slopewarp", version, about = "Slope-aware time-series distances and PSO medoid clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cluster a labelled UCR-format dataset and write scores, summaries, and traces.
    Cluster(ClusterArgs),
    /// Print the distance between two single-series files.
    Distance(DistanceArgs),
}

#[derive(Args, Debug)]
struct DistanceParams {
    /// Match tolerance for EDR.
    #[arg(long, default_value_t = 0.2)]
    edr_eps: f64,
    /// Match tolerance for LCSS.
    #[arg(long, default_value_t = 0.2)]
    lcss_eps: f64,
    /// LCSS time window; unbounded when omitted.
    #[arg(long)]
    lcss_delta: Option<usize>,
    /// Minkowski exponent of the value term.
    #[arg(long = "minkowski-b", default_value_t = 2.0)]
    minkowski_b: f64,
    /// Divide DTW costs by the summed lengths.
    #[arg(long)]
    normalize_dtw: bool,
    /// Points kept per series: an integer count or a fraction of the length.
    #[arg(long, default_value = "0.2")]
    segment_budget: SegmentBudget,
}

impl DistanceParams {
    fn spec(&self, kind: DistanceKind) -> DistanceSpec {
        DistanceSpec {
            kind,
            minkowski_b: self.minkowski_b,
            edr_epsilon: self.edr_eps,
            lcss_epsilon: self.lcss_eps,
            lcss_delta: self.lcss_delta,
            normalize_dtw: self.normalize_dtw,
        }
    }
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long)]
    data: PathBuf,
    /// Number of clusters; defaults to the number of distinct labels.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "dtw-bsd,dtw-ed,edr,lcss")]
    distance: Vec<DistanceKind>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Seed of the first repetition; repetition r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    iters: usize,
    #[arg(long, default_value_t = 30)]
    swarm: usize,
    #[arg(long, default_value_t = 1.2)]
    inertia_start: f64,
    #[arg(long, default_value_t = 0.4)]
    inertia_end: f64,
    #[arg(long, default_value_t = 1.5)]
    c1: f64,
    #[arg(long, default_value_t = 1.5)]
    c2: f64,
    #[arg(long, default_value_t = 0.5)]
    w1: f64,
    #[arg(long, default_value_t = 0.5)]
    w2: f64,
    #[command(flatten)]
    params: DistanceParams,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DistanceArgs {
    /// UCR-format file holding one series (label first).
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value = "dtw-bsd")]
    measure: DistanceKind,
    #[command(flatten)]
    params: DistanceParams,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Cluster(args) => cluster(args),
        Command::Distance(args) => distance(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 2 } else { 1 })
        }
    }
}

fn cluster(args: ClusterArgs) -> Result<(), Error> {
    let mut cfg = RunConfig::new(&args.data, &args.out);
    cfg.k = args.k;
    cfg.distances = args.distance;
    cfg.reps = args.reps;
    cfg.seed_base = args.seed;
    cfg.segment_budget = args.params.segment_budget;
    cfg.distance_params = args.params.spec(DistanceKind::DtwBsd);
    cfg.pso = PsoConfig {
        swarm_size: args.swarm,
        max_iters: args.iters,
        inertia_start: args.inertia_start,
        inertia_end: args.inertia_end,
        c1: args.c1,
        c2: args.c2,
        w1: args.w1,
        w2: args.w2,
        ..PsoConfig::default()
    };
    let k = cfg.k.unwrap_or(2);
    PsoConfig { k, ..cfg.pso.clone() }.validate()?;

    let output = run_experiment(&cfg)?;
    for f in &output.failures {
        eprintln!("warning: {} rep {} failed: {}", f.distance, f.rep, f.message);
    }
    if output.runs.is_empty() {
        return Err(Error::EmptyInput("every run failed".into()));
    }
    let summary = summarize(&output.results())?;
    let written = emit_outputs(&cfg.out_dir, &output.runs, &summary)?;
    println!("wrote {} files to {}", written.len(), cfg.out_dir.display());
    Ok(())
}

fn distance(args: DistanceArgs) -> Result<(), Error> {
    let spec = args.params.spec(args.measure);
    spec.validate()?;
    let mut raw = Vec::with_capacity(2);
    for path in [&args.a, &args.b] {
        let mut series = load_ucr(path)?;
        if series.len() != 1 {
            return Err(Error::EmptyInput(format!(
                "{}: expected exactly one series, found {}",
                path.display(),
                series.len()
            )));
        }
        raw.push(series.remove(0));
    }
    let data = Dataset::from_raw("pair", &raw, args.params.segment_budget)?;
    println!("{}", spec.between(&data.series[0], &data.series[1]));
    Ok(())
}
