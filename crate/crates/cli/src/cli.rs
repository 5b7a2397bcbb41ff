use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use redund_core::allocation::Strategy;
use redund_core::eval::ReportFormat;
use redund_core::Measure;

#[derive(Debug, Parser)]
#[command(name = "redund", version, about = "Allocate redundant segmentation effort to ambiguous images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a manifest from a directory of grayscale images
    Ingest(IngestArgs),
    /// Generate a synthetic corpus
    Synth(SynthArgs),
    /// Train the built-in feature + PCA + linear scorer
    Train(TrainArgs),
    /// Compute unambiguity scores (built-in model or external files)
    Score(ScoreArgs),
    /// Choose which images receive redundant annotations
    Plan(PlanArgs),
    /// Compare strategies at one budget over stored annotation pools
    Simulate(SimulateArgs),
    /// Budget-vs-diversity curve for one strategy
    Curve(CurveArgs),
    /// Run the HTTP task server
    Serve(ServeArgs),
    /// Per-annotation diversity, PR and agreement tables
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file
    #[arg(long, short)]
    pub out: PathBuf,
    /// Output format; inferred from the extension when omitted
    #[arg(long, value_parser = parse_format)]
    pub format: Option<ReportFormat>,
}

impl Output {
    pub fn format(&self) -> ReportFormat {
        self.format.unwrap_or_else(|| ReportFormat::from_path(&self.out))
    }
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: redund_core::Error| e.to_string())
}

fn parse_measure(s: &str) -> Result<Measure, String> {
    s.parse().map_err(|e: redund_core::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: redund_core::Error| e.to_string())
}

/// Where unambiguity scores come from.
#[derive(Debug, Args, Default)]
pub struct ScoreSource {
    /// Score file (`image_id<TAB>score`)
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Use scores stored in the manifest under this method name
    #[arg(long)]
    pub method: Option<String>,
    /// Subitizing distributions (for the SOS strategy)
    #[arg(long)]
    pub subitizing: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory of .pgm/.png images; the file stem is the image id
    #[arg(long)]
    pub images: PathBuf,
    /// Optional directory of `<image_id>_<k>.pbm` masks, k = collection order
    #[arg(long)]
    pub masks: Option<PathBuf>,
    #[arg(long, default_value = "")]
    pub source: String,
    /// Manifest to write
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Images with pools of collected masks
    Annotations,
    /// Classifier images with one or several blobs
    Blobs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    /// Output directory (images/, manifest.jsonl, labels.tsv)
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub images: Option<usize>,
    #[arg(long)]
    pub ambiguous_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Label file (`image_id<TAB>unambiguous|ambiguous`)
    #[arg(long)]
    pub labels: PathBuf,
    /// Model file to write (JSON)
    #[arg(long)]
    pub model: PathBuf,
    /// Fraction of labelled images used for training; the rest is held out
    #[arg(long, default_value_t = 1.0)]
    pub split: f64,
    /// Optional held-out evaluation report (PR curve rows)
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = redund_core::scoring::DEFAULT_PCA_DIMS)]
    pub pca_dims: usize,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Train on quadratically expanded features
    #[arg(long)]
    pub quadratic: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Trained model from `train`
    #[arg(long, conflicts_with_all = ["scores", "detections", "subitizing"])]
    pub model: Option<PathBuf>,
    /// External score file
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Detection windows (`image_id<TAB>x0,y0,x1,y1<TAB>confidence`)
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Subitizing distributions, converted to priority-rank scores
    #[arg(long)]
    pub subitizing: Option<PathBuf>,
    /// Method name to store the scores under
    #[arg(long)]
    pub method: String,
    /// Score file to write
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Write the scores back into the manifest
    #[arg(long)]
    pub update_manifest: bool,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_parser = parse_strategy, default_value = "greedy")]
    pub strategy: Strategy,
    #[arg(long)]
    pub budget: usize,
    /// Redundant annotations per selected image (typically 4 or 9)
    #[arg(long, default_value_t = 4)]
    pub extra: usize,
    /// Measure for the perfect strategy
    #[arg(long, value_parser = parse_measure, default_value = "region")]
    pub measure: Measure,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub source: ScoreSource,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_parser = parse_strategy, value_delimiter = ',', default_value = "greedy,status-quo,perfect")]
    pub strategy: Vec<Strategy>,
    #[arg(long)]
    pub budget: usize,
    #[arg(long, default_value_t = 4)]
    pub extra: usize,
    #[arg(long, value_parser = parse_measure, default_value = "region")]
    pub measure: Measure,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seeds averaged for the status quo
    #[arg(long, default_value_t = redund_core::allocation::DEFAULT_STATUS_QUO_SEEDS)]
    pub seeds: usize,
    #[command(flatten)]
    pub source: ScoreSource,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 4)]
    pub extra: usize,
    #[arg(long, value_parser = parse_measure, default_value = "region")]
    pub measure: Measure,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = redund_core::allocation::DEFAULT_STATUS_QUO_SEEDS)]
    pub seeds: usize,
    /// Agreement thresholds for the W&P strategies
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
    pub thresholds: Vec<f64>,
    #[command(flatten)]
    pub source: ScoreSource,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Event log; replayed on start and appended to afterwards
    #[arg(long)]
    pub log: PathBuf,
    /// Service config (JSON): eligibility thresholds, timeout, worker profiles
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    /// Diversity of every annotation against its image's reference
    Diversity,
    /// Precision/recall of scores against labels
    Pr,
    /// Judger (votes or label file) vs drawer labels
    Agreement,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "diversity")]
    pub kind: ReportKind,
    /// Ground-truth (pr) or judger (agreement) labels
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[command(flatten)]
    pub source: ScoreSource,
    #[command(flatten)]
    pub output: Output,
}
