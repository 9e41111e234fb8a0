//! Stage execution on loaded inputs, plus the input digests and output
//! files shared by all subcommands.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use floodpipe::corpus::{parse_embeddings, parse_labels, parse_lett, parse_rctp, parse_scores};
use floodpipe::fusion::{objective_with, optimize_weights, GRID_MAX_MODELS};
use floodpipe::nerloc::{exact_f1, location_frequencies, partial_f1, spans_from_tags};
use floodpipe::report::{FusionStage, InputDigest, ModelScore, NerStage};
use floodpipe::topics::{run_experiment, ExperimentMode, ExperimentResult, TopicConfig};
use floodpipe::{
    CleanProfile, EmbeddingMatrix, LocationFrequency, LocationSpan, ObjectiveReport,
    OptimizerConfig, OptimizerMethod, ScoreMatrix, SplitName, StopWords, TokenTagSequence,
    TweetRecord, WeightVector,
};
use sha2::{Digest, Sha256};

use crate::args::{FuseMethod, ModeArg};
use crate::config::{optimizer_method, FusionSettings, UsageError};

/// Input files read so far, keyed by role. Only file names and content
/// digests are recorded, so reports do not depend on where inputs live.
#[derive(Debug, Default)]
pub struct Inputs {
    pub digests: BTreeMap<String, InputDigest>,
}

impl Inputs {
    pub fn read(&mut self, role: &str, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("{}", path.display()))?;
        let digest = Sha256::digest(&bytes);
        self.digests.insert(
            role.to_string(),
            InputDigest {
                path: path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
                bytes: bytes.len() as u64,
            },
        );
        String::from_utf8(bytes).with_context(|| format!("{}: not valid UTF-8", path.display()))
    }

    pub fn scores(&mut self, path: &Path) -> Result<ScoreMatrix> {
        let text = self.read("scores", path)?;
        Ok(parse_scores(&text, path)?)
    }

    /// Labels aligned to the score rows. Extra labeled ids are ignored.
    pub fn labels_for(&mut self, path: &Path, scores: &ScoreMatrix) -> Result<Vec<u8>> {
        let text = self.read("labels", path)?;
        let table: HashMap<String, u8> = parse_labels(&text, path)?.into_iter().collect();
        scores
            .row_ids()
            .iter()
            .map(|id| {
                table.get(id).copied().with_context(|| {
                    format!("{}: no label for scored tweet {id:?}", path.display())
                })
            })
            .collect()
    }

    pub fn corpus(&mut self, path: &Path) -> Result<Vec<TweetRecord>> {
        let text = self.read("corpus", path)?;
        Ok(parse_rctp(&text, path, SplitName::Test, false)?.records)
    }

    pub fn tags(&mut self, role: &str, path: &Path) -> Result<Vec<TokenTagSequence>> {
        let text = self.read(role, path)?;
        Ok(parse_lett(&text, path, SplitName::Test)?.records)
    }

    pub fn embeddings(&mut self, path: &Path) -> Result<EmbeddingMatrix> {
        let text = self.read("embeddings", path)?;
        Ok(parse_embeddings(&text, path)?)
    }

    pub fn stopwords(&mut self, path: Option<&Path>) -> Result<StopWords> {
        match path {
            None => Ok(StopWords::italian()),
            Some(p) => {
                let words = StopWords::parse(&self.read("stopwords", p)?);
                if words.is_empty() {
                    bail!("{}: no stop words", p.display());
                }
                Ok(words)
            }
        }
    }
}

fn individual(
    scores: &ScoreMatrix,
    labels: &[u8],
    cfg: &OptimizerConfig,
) -> Result<Vec<ModelScore>> {
    let m = scores.n_models();
    scores
        .model_names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let r = objective_with(
                scores,
                labels,
                &WeightVector::one_hot(m, j),
                cfg.threshold,
                cfg.objective,
            )?;
            Ok(ModelScore {
                model: name.clone(),
                error: r.error,
                accuracy: r.accuracy,
            })
        })
        .collect()
}

fn equal_weights(
    scores: &ScoreMatrix,
    labels: &[u8],
    cfg: &OptimizerConfig,
) -> Result<ObjectiveReport> {
    Ok(objective_with(
        scores,
        labels,
        &WeightVector::equal(scores.n_models()),
        cfg.threshold,
        cfg.objective,
    )?)
}

pub fn fusion_stage(
    scores: &ScoreMatrix,
    labels: &[u8],
    settings: &FusionSettings,
) -> Result<FusionStage> {
    let cfg = &settings.optimizer;
    let simple = equal_weights(scores, labels, cfg)?;
    let result = match optimizer_method(settings.method) {
        None => simple.clone(),
        Some(method) => {
            if method == OptimizerMethod::Grid && scores.n_models() > GRID_MAX_MODELS {
                return Err(UsageError(format!(
                    "grid search handles at most {GRID_MAX_MODELS} models, the scores have {}",
                    scores.n_models()
                ))
                .into());
            }
            optimize_weights(
                scores,
                labels,
                &OptimizerConfig {
                    method,
                    ..cfg.clone()
                },
            )?
        }
    };
    Ok(FusionStage {
        method: method_name(settings.method).to_string(),
        threshold: cfg.threshold,
        objective: cfg.objective,
        model_names: scores.model_names().to_vec(),
        n_rows: scores.n_rows(),
        result,
        simple_fusion: simple,
        individual: individual(scores, labels, cfg)?,
    })
}

pub fn method_name(m: FuseMethod) -> &'static str {
    match optimizer_method(m) {
        Some(o) => o.name(),
        None => "simple",
    }
}

/// Every method with its default budget (unless `settings` overrides it),
/// sorted by error; ties keep the listed method order.
pub fn optimize_stage(
    scores: &ScoreMatrix,
    labels: &[u8],
    settings: &FusionSettings,
    budget_override: Option<usize>,
) -> Result<Vec<FusionStage>> {
    let mut methods = vec![
        FuseMethod::Simple,
        FuseMethod::Pso,
        FuseMethod::NelderMead,
        FuseMethod::Powell,
    ];
    if scores.n_models() <= GRID_MAX_MODELS {
        methods.push(FuseMethod::Grid);
    }
    let mut stages = methods
        .into_iter()
        .map(|method| {
            let mut optimizer = settings.optimizer.clone();
            if let Some(search) = optimizer_method(method) {
                optimizer.method = search;
                optimizer.iteration_budget = budget_override.unwrap_or(search.default_budget());
            }
            fusion_stage(scores, labels, &FusionSettings { method, optimizer })
        })
        .collect::<Result<Vec<_>>>()?;
    stages.sort_by(|a, b| a.result.error.total_cmp(&b.result.error));
    Ok(stages)
}

pub fn ner_stage(
    gold: &[TokenTagSequence],
    pred: &[TokenTagSequence],
    gold_path: &Path,
) -> Result<NerStage> {
    let ctx = || format!("{} vs predictions", gold_path.display());
    Ok(NerStage {
        n_sequences: gold.len(),
        exact: exact_f1(gold, pred).with_context(ctx)?,
        partial: partial_f1(gold, pred).with_context(ctx)?,
    })
}

pub fn spans(pred: &[TokenTagSequence]) -> Vec<LocationSpan> {
    pred.iter().flat_map(spans_from_tags).collect()
}

pub fn locations(pred: &[TokenTagSequence], top: usize) -> LocationFrequency {
    location_frequencies(&spans(pred), top)
}

pub fn experiment_mode(mode: ModeArg, location: Option<&str>) -> Result<ExperimentMode> {
    Ok(match mode {
        ModeArg::All => ExperimentMode::AllRelevant,
        ModeArg::Frequent => ExperimentMode::FrequentLocations,
        ModeArg::Location => ExperimentMode::SingleLocation(
            location
                .ok_or_else(|| UsageError("--mode location needs --location <name>".into()))?
                .to_string(),
        ),
    })
}

pub fn topics_stage(
    records: &[TweetRecord],
    embeddings: &EmbeddingMatrix,
    spans: &[LocationSpan],
    mode: &ExperimentMode,
    stopwords: StopWords,
    cfg: &TopicConfig,
    corpus_path: &Path,
) -> Result<ExperimentResult> {
    let profile = CleanProfile::topics(stopwords);
    run_experiment(records, embeddings, spans, mode, &profile, cfg)
        .with_context(|| format!("topics on {}", corpus_path.display()))
}

/// Short name of an experiment, used in output file names.
pub fn mode_slug(mode: &ExperimentMode) -> String {
    match mode {
        ExperimentMode::AllRelevant => "all".into(),
        ExperimentMode::FrequentLocations => "frequent".into(),
        ExperimentMode::SingleLocation(loc) => {
            let clean: String = floodpipe::nerloc::normalize_location(loc)
                .chars()
                .map(|c| if c.is_alphanumeric() { c } else { '_' })
                .collect();
            format!("location_{clean}")
        }
    }
}

/// Output directory writer. Every file lands under `dir`.
pub struct OutDir(pub PathBuf);

impl OutDir {
    pub fn create(dir: &Path) -> Result<OutDir> {
        fs::create_dir_all(dir).with_context(|| format!("{}", dir.display()))?;
        Ok(OutDir(dir.to_path_buf()))
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.0.join(name);
        fs::write(&path, contents).with_context(|| format!("{}", path.display()))
    }
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
