//! TOML run configuration and the flag > file > default layering.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use floodpipe::fusion::{NelderMeadParams, PowellParams, PsoParams};
use floodpipe::topics::TopicConfig;
use floodpipe::{
    ObjectiveKind, OptimizerConfig, OptimizerMethod, ReductionConfig, ReductionMethod,
};
use serde::{Deserialize, Serialize};

use crate::args::{
    CommonArgs, FuseMethod, FusionFlags, ModeArg, ObjectiveArg, ReductionArg, TopicFlags,
};

pub const SEED_ENV: &str = "FLOODPIPE_SEED";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub inputs: InputsSection,
    pub fusion: FusionSection,
    pub ner: NerSection,
    pub topics: TopicsSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputsSection {
    pub scores: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub pred: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionSection {
    pub method: Option<FuseMethod>,
    pub threshold: Option<f64>,
    pub iteration_budget: Option<usize>,
    pub objective: Option<ObjectiveArg>,
    pub grid_step: Option<f64>,
    pub pso: Option<PsoParams>,
    pub nelder_mead: Option<NelderMeadParams>,
    pub powell: Option<PowellParams>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NerSection {
    pub top: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopicsSection {
    /// Experiment for the `topics` subcommand.
    pub mode: Option<ModeArg>,
    /// Experiments for the `report` subcommand.
    pub modes: Option<Vec<ModeArg>>,
    pub location: Option<String>,
    pub max_topics: Option<usize>,
    pub top_words: Option<usize>,
    pub min_cluster_size: Option<usize>,
    pub min_samples: Option<usize>,
    pub frequent_locations: Option<usize>,
    pub reduction: ReductionSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReductionSection {
    pub method: Option<ReductionArg>,
    pub n_neighbours: Option<usize>,
    pub n_components: Option<usize>,
    pub n_epochs: Option<usize>,
    pub min_dist: Option<f64>,
}

impl FileConfig {
    /// Parses a config file. Relative input and output paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
        let mut cfg: FileConfig = toml::from_str(&text).map_err(|e| {
            let span = e
                .span()
                .map(|s| format!(":{}", text[..s.start].matches('\n').count() + 1))
                .unwrap_or_default();
            anyhow::anyhow!("{}{span}: {}", path.display(), e.message())
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let inputs = &mut cfg.inputs;
        for p in [
            &mut inputs.scores,
            &mut inputs.labels,
            &mut inputs.corpus,
            &mut inputs.gold,
            &mut inputs.pred,
            &mut inputs.embeddings,
            &mut inputs.stopwords,
            &mut cfg.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// A missing or contradictory setting; reported with usage text.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn required(flag: Option<PathBuf>, file: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| file.clone()).ok_or_else(|| {
        UsageError(format!(
            "--{name} is required (or set `{name}` under [inputs] in --config)"
        ))
        .into()
    })
}

/// Everything shared by all subcommands once flags and file are merged.
#[derive(Debug, Clone)]
pub struct Base {
    pub file: FileConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

/// Merges the common flags with the config file and the seed fallbacks.
/// `env_seed` is the raw value of [`SEED_ENV`], if set.
pub fn base(common: &CommonArgs, env_seed: Option<String>) -> Result<Base> {
    let file = match &common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let seed = match (common.seed, file.seed) {
        (Some(s), _) | (None, Some(s)) => s,
        (None, None) => match env_seed {
            Some(raw) => raw.trim().parse().map_err(|_| {
                UsageError(format!("{SEED_ENV}={raw:?} is not a non-negative integer"))
            })?,
            None => 0,
        },
    };
    let out = common.out.clone().or_else(|| file.out.clone());
    Ok(Base { file, seed, out })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionSettings {
    pub method: FuseMethod,
    pub optimizer: OptimizerConfig,
}

fn objective(arg: ObjectiveArg) -> ObjectiveKind {
    match arg {
        ObjectiveArg::Accuracy => ObjectiveKind::ThresholdedAccuracy,
        ObjectiveArg::Posterior => ObjectiveKind::WeightedPosterior,
    }
}

pub fn optimizer_method(m: FuseMethod) -> Option<OptimizerMethod> {
    match m {
        FuseMethod::Simple => None,
        FuseMethod::Pso => Some(OptimizerMethod::Pso),
        FuseMethod::NelderMead => Some(OptimizerMethod::NelderMead),
        FuseMethod::Powell => Some(OptimizerMethod::Powell),
        FuseMethod::Grid => Some(OptimizerMethod::Grid),
    }
}

/// Optimizer settings for `method`; the budget defaults per method.
pub fn fusion_settings(
    flags: &FusionFlags,
    method: Option<FuseMethod>,
    file: &FusionSection,
    seed: u64,
) -> Result<FusionSettings> {
    let method = method.or(file.method).unwrap_or(FuseMethod::Powell);
    let search = optimizer_method(method).unwrap_or(OptimizerMethod::Powell);
    let mut cfg = OptimizerConfig::new(search, seed);
    cfg.threshold = flags.threshold.or(file.threshold).unwrap_or(cfg.threshold);
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(UsageError(format!("threshold {} is outside [0, 1]", cfg.threshold)).into());
    }
    cfg.iteration_budget = flags
        .budget
        .or(file.iteration_budget)
        .unwrap_or(cfg.iteration_budget);
    if cfg.iteration_budget == 0 {
        return Err(UsageError("the iteration budget must be positive".into()).into());
    }
    if let Some(o) = flags.objective.or(file.objective) {
        cfg.objective = objective(o);
    }
    cfg.grid_step = file.grid_step.unwrap_or(cfg.grid_step);
    if let Some(p) = &file.pso {
        cfg.pso = p.clone();
    }
    if let Some(p) = &file.nelder_mead {
        cfg.nelder_mead = p.clone();
    }
    if let Some(p) = &file.powell {
        cfg.powell = p.clone();
    }
    Ok(FusionSettings {
        method,
        optimizer: cfg,
    })
}

/// Topic pipeline settings. `seed` is the topics stage seed.
pub fn topic_config(flags: &TopicFlags, file: &TopicsSection, seed: u64) -> Result<TopicConfig> {
    let d = TopicConfig::default();
    let r = &file.reduction;
    let method = match flags.reduction.or(r.method) {
        Some(ReductionArg::Pca) => ReductionMethod::Pca,
        Some(ReductionArg::Neighbor) | None => ReductionMethod::NeighborEmbedding,
    };
    let cfg = TopicConfig {
        reduction: ReductionConfig {
            n_neighbours: flags
                .n_neighbours
                .or(r.n_neighbours)
                .unwrap_or(d.reduction.n_neighbours),
            n_components: flags
                .n_components
                .or(r.n_components)
                .unwrap_or(d.reduction.n_components),
            seed,
            method,
            n_epochs: r.n_epochs.unwrap_or(d.reduction.n_epochs),
            min_dist: r.min_dist.unwrap_or(d.reduction.min_dist),
        },
        min_cluster_size: flags
            .min_cluster_size
            .or(file.min_cluster_size)
            .unwrap_or(d.min_cluster_size),
        min_samples: flags.min_samples.or(file.min_samples),
        max_topics: flags.max_topics.or(file.max_topics).unwrap_or(d.max_topics),
        top_words: flags.top_words.or(file.top_words).unwrap_or(d.top_words),
        frequent_locations: file.frequent_locations.unwrap_or(d.frequent_locations),
    };
    if cfg.min_cluster_size < 2 {
        return Err(UsageError(format!(
            "min_cluster_size must be at least 2, got {}",
            cfg.min_cluster_size
        ))
        .into());
    }
    if cfg.top_words == 0 {
        return Err(UsageError("top_words must be at least 1".into()).into());
    }
    if cfg.min_samples == Some(0) {
        return Err(UsageError("min_samples must be at least 1".into()).into());
    }
    Ok(cfg)
}
