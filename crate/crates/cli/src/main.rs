//! `dynamo` command-line front end.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dynamo_core::harness::{run_pipeline, Algorithm, PipelineConfig};
use dynamo_core::ingest::{
    delta_file_name, parse_edge_events, parse_edge_list, parse_partition_file, read_delta_dir,
    render_reports, slice_snapshots, write_delta_dir, write_partition, ReportFormat,
    SnapshotSeries,
};
use dynamo_core::{ari, louvain, nmi, Churn, GenConfig, IngestError, LouvainConfig, SynthError};

#[derive(Parser)]
#[command(
    name = "dynamo",
    version,
    about = "Incremental modularity-based community detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run detectors over a snapshot series and report per-snapshot results.
    Run(RunArgs),
    /// Detect communities of a single static graph.
    Detect(DetectArgs),
    /// Compare two partition files.
    Metrics(MetricsArgs),
    /// Generate a synthetic evolving network.
    Generate(GenerateArgs),
    /// Slice a timestamped edge stream into a delta directory.
    Slice(SliceArgs),
}

#[derive(Args)]
struct DetectorArgs {
    /// Minimum modularity gain for a vertex move.
    #[arg(long, default_value_t = 1e-7)]
    epsilon: f64,
    /// Shuffle the vertex sweep order with this seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl DetectorArgs {
    fn config(&self) -> Result<LouvainConfig, CliError> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(CliError::Usage(format!(
                "invalid --epsilon {}",
                self.epsilon
            )));
        }
        Ok(LouvainConfig {
            epsilon: self.epsilon,
            shuffle_seed: self.seed,
        })
    }
}

#[derive(Args)]
struct StreamArgs {
    /// Timestamped edge stream (`u v w t` per line).
    #[arg(long, conflicts_with = "deltas_dir")]
    input: Option<PathBuf>,
    /// Directory of `*.delta` files, one per snapshot.
    #[arg(long)]
    deltas_dir: Option<PathBuf>,
    /// Snapshot width in timestamp units, required with --input.
    #[arg(long, allow_negative_numbers = true)]
    interval: Option<i64>,
    /// Start of the first window; defaults to the earliest timestamp.
    #[arg(long, allow_negative_numbers = true)]
    t0: Option<i64>,
}

impl StreamArgs {
    fn load(&self) -> Result<SnapshotSeries, CliError> {
        match (&self.input, &self.deltas_dir) {
            (Some(path), None) => {
                let interval = self
                    .interval
                    .ok_or_else(|| CliError::Usage("--interval is required with --input".into()))?;
                if interval <= 0 {
                    return Err(CliError::Usage(format!("invalid --interval {interval}")));
                }
                let events = parse_edge_events(path).map_err(|e| CliError::io(path, e))?;
                Ok(slice_snapshots(&events, interval, self.t0)?)
            }
            (None, Some(dir)) => {
                if self.interval.is_some() || self.t0.is_some() {
                    return Err(CliError::Usage(
                        "--interval and --t0 only apply to --input".into(),
                    ));
                }
                read_delta_dir(dir).map_err(|e| CliError::io(dir, e))
            }
            _ => Err(CliError::Usage(
                "exactly one of --input or --deltas-dir is required".into(),
            )),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    stream: StreamArgs,
    #[command(flatten)]
    detector: DetectorArgs,
    /// Comma-separated subset of louvain,dynamo.
    #[arg(long, value_delimiter = ',', default_value = "louvain,dynamo")]
    algorithms: Vec<Algorithm>,
    /// Replace an incremental result by a full run when its modularity is below this; -1 disables.
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    refine_threshold: f64,
    /// Report file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    /// Number of detectors run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Score dynamo against Louvain even when Louvain is not selected.
    #[arg(long)]
    with_baseline: bool,
    /// Detections per snapshot, reporting the mean time.
    #[arg(long, default_value_t = 1)]
    repeat: usize,
}

#[derive(Args)]
struct DetectArgs {
    /// Static edge list (`u v [w]` per line).
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    detector: DetectorArgs,
    /// Partition file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Reference partition (`vertex community` per line).
    a: PathBuf,
    b: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    num_communities: usize,
    #[arg(long, default_value_t = 50)]
    community_size: usize,
    #[arg(long, default_value_t = 0.3)]
    p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    p_out: f64,
    #[arg(long, default_value_t = 24)]
    num_snapshots: usize,
    #[arg(long, default_value_t = 2)]
    icea: usize,
    #[arg(long, default_value_t = 16)]
    ccea: usize,
    #[arg(long, default_value_t = 2)]
    iced: usize,
    #[arg(long, default_value_t = 16)]
    cced: usize,
    #[arg(long, default_value_t = 1)]
    vertex_add: usize,
    #[arg(long, default_value_t = 1)]
    vertex_del: usize,
    #[arg(long, default_value_t = 1.0)]
    weight_lo: f64,
    #[arg(long, default_value_t = 2.0)]
    weight_hi: f64,
}

#[derive(Args)]
struct SliceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    interval: i64,
    #[arg(long, allow_negative_numbers = true)]
    t0: Option<i64>,
    /// Delta directory to create.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }
}

macro_rules! runtime_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Runtime(e.to_string())
            }
        }
    )*};
}

runtime_from!(
    io::Error,
    dynamo_core::GraphError,
    dynamo_core::DynamoError,
    dynamo_core::MetricsError
);

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::InvalidInterval(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Graph(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn cmd_run(a: &RunArgs) -> Result<(), CliError> {
    if a.algorithms.is_empty() {
        return Err(CliError::Usage("no algorithm selected".into()));
    }
    if a.jobs == 0 || a.repeat == 0 {
        return Err(CliError::Usage(
            "--jobs and --repeat must be positive".into(),
        ));
    }
    let mut algorithms = a.algorithms.clone();
    algorithms.sort();
    algorithms.dedup();
    let cfg = PipelineConfig {
        louvain: a.detector.config()?,
        refine_threshold: a.refine_threshold,
        repeat: a.repeat,
        with_baseline: a.with_baseline,
        jobs: a.jobs,
    };
    let series = a.stream.load()?;
    let (reports, _) = run_pipeline(&series, &algorithms, &cfg)?;
    emit(a.output.as_deref(), &render_reports(&reports, a.format))
}

fn cmd_detect(a: &DetectArgs) -> Result<(), CliError> {
    let cfg = a.detector.config()?;
    let g = parse_edge_list(&a.input).map_err(|e| CliError::io(&a.input, e))?;
    let p = louvain(&g, None, &cfg)?;
    emit(a.output.as_deref(), &write_partition(p.assignment()))
}

fn cmd_metrics(a: &MetricsArgs) -> Result<(), CliError> {
    let pa = parse_partition_file(&a.a).map_err(|e| CliError::io(&a.a, e))?;
    let pb = parse_partition_file(&a.b).map_err(|e| CliError::io(&a.b, e))?;
    let n = nmi(&pa, &pb)?;
    let r = ari(&pa, &pb)?;
    println!("nmi={n:.6} ari={r:.6}");
    Ok(())
}

fn cmd_generate(a: &GenerateArgs) -> Result<(), CliError> {
    let cfg = GenConfig {
        seed: a.seed,
        num_communities: a.num_communities,
        community_size: a.community_size,
        p_in: a.p_in,
        p_out: a.p_out,
        num_snapshots: a.num_snapshots,
        churn: Churn {
            icea: a.icea,
            ccea: a.ccea,
            iced: a.iced,
            cced: a.cced,
            vertex_add: a.vertex_add,
            vertex_del: a.vertex_del,
        },
        weight_range: (a.weight_lo, a.weight_hi),
    };
    let gen = dynamo_core::generate(&cfg)?;
    let deltas = a.output.join("deltas");
    let truth = a.output.join("truth");
    fs::create_dir_all(&deltas).map_err(|e| CliError::io(&deltas, e))?;
    fs::create_dir_all(&truth).map_err(|e| CliError::io(&truth, e))?;
    if let Some(events) = &gen.event_file {
        let p = a.output.join("events.txt");
        fs::write(&p, events).map_err(|e| CliError::io(&p, e))?;
    }
    for (k, text) in gen.delta_files.iter().enumerate() {
        let p = deltas.join(delta_file_name(k));
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
    }
    for (k, part) in gen.ground_truth.iter().enumerate() {
        let p = truth.join(format!("snapshot_{k:04}.part"));
        fs::write(&p, write_partition(part)).map_err(|e| CliError::io(&p, e))?;
    }
    Ok(())
}

fn cmd_slice(a: &SliceArgs) -> Result<(), CliError> {
    if a.interval <= 0 {
        return Err(CliError::Usage(format!(
            "invalid --interval {}",
            a.interval
        )));
    }
    let events = parse_edge_events(&a.input).map_err(|e| CliError::io(&a.input, e))?;
    let series = slice_snapshots(&events, a.interval, a.t0)?;
    write_delta_dir(&series, &a.output).map_err(|e| CliError::io(&a.output, e))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Slice(a) => cmd_slice(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
