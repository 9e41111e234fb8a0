use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "floodpipe",
    version,
    about = "Batch analysis of disaster-related tweet corpora",
    long_about = "Batch analysis of disaster-related tweet corpora: late fusion of \
                  relevance classifiers, location extraction scoring and topic modeling.\n\n\
                  Settings are taken from flags first, then from --config, then from \
                  built-in defaults. The seed additionally falls back to FLOODPIPE_SEED."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fuse per-model relevance scores with weights searched on labeled data
    Fuse(FuseArgs),
    /// Run every weight search method on the same data and compare them
    Optimize(OptimizeArgs),
    /// Score predicted location tags against gold tags
    NerEval(NerEvalArgs),
    /// Count the most frequent predicted locations
    Locations(LocationsArgs),
    /// Extract topics from tweet embeddings
    Topics(TopicsArgs),
    /// Run every stage whose inputs are given and write one combined report
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its values
    #[arg(long, value_name = "TOML")]
    pub config: Option<PathBuf>,
    /// Top-level seed, fanned out to every stage
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for output files; without it the main result goes to stdout
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FuseMethod {
    /// Equal weights, no search
    Simple,
    Pso,
    NelderMead,
    Powell,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveArg {
    /// Thresholded accuracy
    Accuracy,
    /// Mean fused posterior of the true class
    Posterior,
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct FusionFlags {
    /// Score table: `id` then one posterior column per model
    #[arg(long, value_name = "TSV")]
    pub scores: Option<PathBuf>,
    /// Labels: `id\tlabel`, or a labeled corpus file
    #[arg(long, value_name = "TSV")]
    pub labels: Option<PathBuf>,
    /// Decision threshold on the fused score
    #[arg(long, value_parser = unit_interval)]
    pub threshold: Option<f64>,
    /// Optimizer iterations (PSO), simplex steps (Nelder-Mead) or sweeps (Powell)
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
}

#[derive(Debug, Clone, Args)]
pub struct FuseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub fusion: FusionFlags,
    #[arg(long, value_enum)]
    pub method: Option<FuseMethod>,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub fusion: FusionFlags,
}

#[derive(Debug, Clone, Args)]
pub struct NerEvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Gold tags, CoNLL style
    #[arg(long, value_name = "CONLL")]
    pub gold: Option<PathBuf>,
    /// Predicted tags, CoNLL style
    #[arg(long, value_name = "CONLL")]
    pub pred: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LocationsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Predicted tags, CoNLL style
    #[arg(long, value_name = "CONLL")]
    pub pred: Option<PathBuf>,
    /// Number of locations to list
    #[arg(long)]
    pub top: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    /// Every relevant tweet
    All,
    /// Tweets mentioning one of the most frequent locations
    Frequent,
    /// Tweets mentioning --location
    Location,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionArg {
    /// Fuzzy neighbour graph layout
    Neighbor,
    /// Principal components
    Pca,
}

#[derive(Debug, Clone, Args)]
pub struct TopicFlags {
    /// Embedding table: `id` then one column per dimension
    #[arg(long, value_name = "TSV")]
    pub embeddings: Option<PathBuf>,
    /// Tweet corpus `id\ttext[\tlabel]`; tweets labeled 0 are skipped
    #[arg(long, value_name = "TSV")]
    pub corpus: Option<PathBuf>,
    /// Location name for `--mode location`
    #[arg(long)]
    pub location: Option<String>,
    /// Maximum number of reported topics
    #[arg(long)]
    pub max_topics: Option<usize>,
    /// Keywords per topic
    #[arg(long)]
    pub top_words: Option<usize>,
    /// Smallest group HDBSCAN reports as a cluster
    #[arg(long)]
    pub min_cluster_size: Option<usize>,
    /// Neighbours used for core distances (default: --min-cluster-size)
    #[arg(long)]
    pub min_samples: Option<usize>,
    /// Neighbourhood size of the layout graph
    #[arg(long)]
    pub n_neighbours: Option<usize>,
    /// Dimensions kept by the reduction
    #[arg(long)]
    pub n_components: Option<usize>,
    #[arg(long, value_enum)]
    pub reduction: Option<ReductionArg>,
    /// Stop word list, one word per line (default: built-in Italian list)
    #[arg(long, value_name = "TXT")]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TopicsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub topics: TopicFlags,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Predicted tags, needed by the location modes
    #[arg(long, value_name = "CONLL")]
    pub pred: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub fusion: FusionFlags,
    #[arg(long, value_enum)]
    pub method: Option<FuseMethod>,
    #[command(flatten)]
    pub topics: TopicFlags,
    /// Topic experiments to run, comma separated
    #[arg(long, value_enum, value_delimiter = ',')]
    pub modes: Option<Vec<ModeArg>>,
    /// Gold tags, CoNLL style
    #[arg(long, value_name = "CONLL")]
    pub gold: Option<PathBuf>,
    /// Predicted tags, CoNLL style
    #[arg(long, value_name = "CONLL")]
    pub pred: Option<PathBuf>,
    /// Number of locations to list
    #[arg(long)]
    pub top: Option<usize>,
}
